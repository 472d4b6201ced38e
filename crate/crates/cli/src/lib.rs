//! Command implementations behind the `primstab` binary. Each command
//! returns the bytes it would print so tests can drive it without a
//! subprocess.

pub mod parse;
pub mod scan;
pub mod tree;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use primstab::bq::{fibonacci_growth_report, BqError};
use primstab::farey::{
    farey_word, mod2_type, palindromic_representative, rationals_up_to, rewrite_in_pair,
};
use primstab::pscheck::PsReport;
use primstab::{
    bip_report, bq_test, ps_verdict, BasicPair, BqConfig, BqVerdict, PsConfig, TraceTriple,
    SCHEMA_VERSION,
};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use scan::{Family, ImageKind, ScanSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("elementary representation (μ = 4)")]
    Elementary,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid geometry: {0}")]
    Geometry(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Elementary => 3,
            CliError::Io { .. } => 4,
            CliError::Geometry(_) => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Depth budget for the BQ search.
    #[arg(long, global = true, default_value_t = 50)]
    pub budget: usize,
    /// Ω(m) threshold, at least 2.
    #[arg(long, global = true, default_value_t = 2.0)]
    pub m: f64,
    /// Word level (p + q bound) for words, PS and BIP.
    #[arg(long, global = true, default_value_t = 10)]
    pub level: usize,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Worker threads for scan; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Output file instead of stdout (the image path for scan).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl Common {
    pub fn bq_config(&self) -> BqConfig {
        BqConfig {
            m: self.m,
            depth_budget: self.budget,
            tol: self.tol,
            ..BqConfig::default()
        }
    }

    pub fn ps_config(&self) -> PsConfig {
        PsConfig {
            level: self.level,
            tol: self.tol,
            ..PsConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Diagonal,
    FixedXy,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImageArg {
    Pgm,
    Ppm,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// BQ, PS and BIP verdicts for one triple `x,y,z`.
    Classify { triple: String },
    /// Farey words and palindromic representatives up to --level.
    Words,
    /// Trace tree around the root vertex.
    Tree {
        triple: String,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Render a slice of the parameter plane.
    Scan {
        #[arg(long, value_enum, default_value_t = FamilyArg::Diagonal)]
        family: FamilyArg,
        /// `re0,im0,re1,im1`.
        #[arg(long, default_value = "-3,-3,3,3", allow_hyphen_values = true)]
        window: String,
        /// `WxH`.
        #[arg(long, default_value = "64x64")]
        size: String,
        #[arg(long, value_enum, default_value_t = ImageArg::Pgm)]
        image: ImageArg,
        /// `x0,y0` for the fixed-xy family.
        #[arg(long, allow_hyphen_values = true)]
        xy: Option<String>,
        /// `a1,b1;a2,b2;a3,b3` for the custom family: coordinate k is
        /// `ak + bk t`.
        #[arg(long, allow_hyphen_values = true)]
        maps: Option<String>,
    },
    /// Full JSON reports: BQ with certificate, PS, BIP, Fibonacci growth.
    Report { triple: String },
}

#[derive(Debug, Parser)]
#[command(
    name = "primstab",
    version,
    about = "Primitive stability and the Bowditch Q-conditions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

/// Output of a command: what goes to stdout (or `--out`), plus any files
/// written along the way.
#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub written: Vec<PathBuf>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report types serialise") + "\n"
}

fn base_triple(s: &str) -> Result<TraceTriple, CliError> {
    let t = parse::triple(s)?;
    if (t.mu() - 4.0).norm() <= 1e-9 * (1.0 + t.mu().norm()) {
        return Err(CliError::Elementary);
    }
    Ok(t)
}

fn check_m(c: &Common) -> Result<(), CliError> {
    if !(c.m >= 2.0 && c.m.is_finite()) {
        return Err(CliError::Parse(format!(
            "--m must be a finite number >= 2, got {}",
            c.m
        )));
    }
    Ok(())
}

fn run_bq(t: &TraceTriple, c: &Common) -> Result<BqVerdict, CliError> {
    bq_test(t, &c.bq_config()).map_err(|e| match e {
        BqError::ElementaryRepresentation => CliError::Elementary,
        e => CliError::Parse(e.to_string()),
    })
}

pub fn cmd_classify(triple: &str, c: &Common) -> Result<String, CliError> {
    check_m(c)?;
    let t = base_triple(triple)?;
    let bq = run_bq(&t, c)?;
    let ps = ps_verdict(&t, &c.ps_config());
    let bip = bip_report(&t, c.level).ok();
    let bip_d = bip.as_ref().map(|b| b.d_hat);
    Ok(match c.format {
        Format::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "triple": t,
            "mu": t.mu(),
            "bq": bq.label(),
            "ps": ps.label(),
            "bip_D": bip_d,
            "budgets": {
                "depth_budget": c.budget,
                "depth_used": bq.depth_used(),
                "m": c.m,
                "level": c.level,
                "tol": c.tol,
            },
            "bq_report": bq.report(),
            "ps_report": PsReport::new(&ps, c.level),
            "bip_max_residual": bip.as_ref().map(|b| b.max_residual()),
        })),
        Format::Text => {
            let r = bq.report();
            let mut s = format!("bq: {} (depth used {}", bq.label(), r.depth_used);
            if let Some(w) = r.witness {
                s += &format!(", witness {} trace {}", w.region, w.trace);
            }
            s += ")\n";
            s += &format!("ps: {}\n", ps.label());
            match bip_d {
                Some(d) => s += &format!("bip D_hat (level {}): {d:.6}\n", c.level),
                None => s += "bip: unavailable\n",
            }
            s
        }
    })
}

#[derive(Serialize)]
struct PalRow {
    pair: BasicPair,
    word: String,
    in_pair: String,
}

#[derive(Serialize)]
struct WordRow {
    rational: String,
    word: String,
    exponent_sums: (i64, i64),
    mod2_type: String,
    palindromes: Vec<PalRow>,
}

pub fn cmd_words(c: &Common) -> Result<String, CliError> {
    if c.level < 1 {
        return Err(CliError::Parse("--level must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for r in rationals_up_to(c.level) {
        let w = farey_word(&r);
        let t = mod2_type(&r);
        let palindromes = BasicPair::admissible(t)
            .into_iter()
            .filter_map(|pair| {
                let p = palindromic_representative(&r, pair).ok()?;
                Some(PalRow {
                    pair,
                    in_pair: rewrite_in_pair(&p, pair).to_string(),
                    word: p.to_string(),
                })
            })
            .collect();
        let (ea, eb) = w.exponent_sums();
        rows.push(WordRow {
            rational: r.to_string(),
            word: w.to_string(),
            exponent_sums: (ea, eb),
            mod2_type: t.to_string(),
            palindromes,
        });
    }
    Ok(match c.format {
        Format::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "level": c.level,
            "words": rows,
        })),
        Format::Text => {
            let mut s = String::new();
            for row in rows {
                s += &format!(
                    "{:>7}  {:<24} ({}, {})  type {}",
                    row.rational, row.word, row.exponent_sums.0, row.exponent_sums.1, row.mod2_type
                );
                for p in row.palindromes {
                    s += &format!("  [{}] {} = {}", p.pair, p.word, p.in_pair);
                }
                s += "\n";
            }
            s
        }
    })
}

pub fn cmd_tree(triple: &str, depth: usize, c: &Common) -> Result<String, CliError> {
    check_m(c)?;
    let t = parse::triple(triple)?;
    let root = tree::build(&t, depth, c.m);
    Ok(match c.format {
        Format::Json => to_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "depth": depth,
            "m": c.m,
            "root": root,
        })),
        Format::Text => tree::render_text(&root),
    })
}

pub fn cmd_report(triple: &str, c: &Common) -> Result<String, CliError> {
    check_m(c)?;
    let t = base_triple(triple)?;
    let bq = run_bq(&t, c)?;
    let ps = ps_verdict(&t, &c.ps_config());
    let bip = bip_report(&t, c.level).map_err(|e| CliError::Geometry(e.to_string()));
    let certificate = match &bq {
        BqVerdict::SatisfiesBq(tree) => Some(tree),
        _ => None,
    };
    let (bip, bip_error) = match bip {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(to_json(&json!({
        "schema_version": SCHEMA_VERSION,
        "triple": t,
        "bq": bq.report(),
        "certificate": certificate,
        "ps": PsReport::new(&ps, c.level),
        "bip": bip,
        "bip_error": bip_error,
        "fibonacci": fibonacci_growth_report(&t, c.level),
    })))
}

pub struct ScanArgs<'a> {
    pub family: FamilyArg,
    pub window: &'a str,
    pub size: &'a str,
    pub image: ImageArg,
    pub xy: Option<&'a str>,
    pub maps: Option<&'a str>,
}

pub fn scan_spec(a: &ScanArgs, c: &Common) -> Result<ScanSpec, CliError> {
    check_m(c)?;
    let family = match a.family {
        FamilyArg::Diagonal => Family::Diagonal,
        FamilyArg::FixedXy => {
            let s =
                a.xy.ok_or_else(|| CliError::Parse("fixed-xy needs --xy x0,y0".into()))?;
            let v = parse::complex_list(s, 2)?;
            Family::FixedXy { x0: v[0], y0: v[1] }
        }
        FamilyArg::Custom => {
            let s = a
                .maps
                .ok_or_else(|| CliError::Parse("custom needs --maps a1,b1;a2,b2;a3,b3".into()))?;
            Family::CustomAffine {
                maps: parse::affine_maps(s)?,
            }
        }
    };
    let (width, height) = parse::size(a.size)?;
    Ok(ScanSpec {
        family,
        window: parse::window(a.window)?,
        width,
        height,
        image: match a.image {
            ImageArg::Pgm => ImageKind::Pgm,
            ImageArg::Ppm => ImageKind::Ppm,
        },
        bq: c.bq_config(),
    })
}

/// Sidecar path for an image: the image path with `.json` appended.
pub fn sidecar_path(image: &Path) -> PathBuf {
    let mut s = image.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn cmd_scan(a: &ScanArgs, c: &Common) -> Result<Output, CliError> {
    let spec = scan_spec(a, c)?;
    let result = scan::run_scan(&spec, c.threads)?;
    let image_path = c.out.clone().unwrap_or_else(|| match spec.image {
        ImageKind::Pgm => PathBuf::from("scan.pgm"),
        ImageKind::Ppm => PathBuf::from("scan.ppm"),
    });
    let side = sidecar_path(&image_path);
    write_file(&image_path, &result.image)?;
    write_file(&side, to_json(&result.sidecar).as_bytes())?;
    let n = &result.sidecar.counts;
    let stdout = match c.format {
        Format::Json => to_json(&result.sidecar),
        Format::Text => format!(
            "wrote {} ({}x{}): bq {}, not_bq_interval {}, not_bq_exceptional {}, unknown {}, elementary {}\n",
            image_path.display(),
            spec.width,
            spec.height,
            n.bq,
            n.not_bq_interval,
            n.not_bq_exceptional,
            n.unknown,
            n.elementary
        ),
    };
    Ok(Output {
        stdout,
        written: vec![image_path, side],
    })
}

/// Runs a parsed command line. Text and JSON output go to `--out` when it
/// is given (except for scan, where `--out` names the image).
pub fn run(cli: &Cli) -> Result<Output, CliError> {
    let c = &cli.common;
    let text = match &cli.command {
        Command::Scan {
            family,
            window,
            size,
            image,
            xy,
            maps,
        } => {
            let args = ScanArgs {
                family: *family,
                window,
                size,
                image: *image,
                xy: xy.as_deref(),
                maps: maps.as_deref(),
            };
            return cmd_scan(&args, c);
        }
        Command::Classify { triple } => cmd_classify(triple, c)?,
        Command::Words => cmd_words(c)?,
        Command::Tree { triple, depth } => cmd_tree(triple, *depth, c)?,
        Command::Report { triple } => cmd_report(triple, c)?,
    };
    match &c.out {
        Some(p) => {
            write_file(p, text.as_bytes())?;
            Ok(Output {
                stdout: String::new(),
                written: vec![p.clone()],
            })
        }
        None => Ok(Output {
            stdout: text,
            written: Vec::new(),
        }),
    }
}
