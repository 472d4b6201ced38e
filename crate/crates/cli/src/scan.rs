//! Parameter-plane slices: one `bq_test` per pixel, rendered to PGM or PPM.

use std::time::Instant;

use primstab::bq::{BqError, WitnessKind};
use primstab::{bq_test, BqConfig, BqVerdict, Complex64, TraceTriple, SCHEMA_VERSION};
use rayon::prelude::*;
use serde::Serialize;

use crate::parse::Window;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// `t ↦ (t, t, t)`.
    Diagonal,
    /// `t ↦ (x0, y0, t)`.
    FixedXy { x0: Complex64, y0: Complex64 },
    /// Each coordinate is `a + b t`.
    CustomAffine { maps: [(Complex64, Complex64); 3] },
}

impl Family {
    pub fn triple(&self, t: Complex64) -> TraceTriple {
        match self {
            Family::Diagonal => TraceTriple::new(t, t, t),
            Family::FixedXy { x0, y0 } => TraceTriple::new(*x0, *y0, t),
            Family::CustomAffine { maps } => {
                let [x, y, z] = maps.map(|(a, b)| a + b * t);
                TraceTriple::new(x, y, z)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageKind {
    Pgm,
    Ppm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PixelClass {
    Bq,
    NotBqInterval,
    NotBqExceptional,
    Unknown,
    Elementary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelVerdict {
    pub class: PixelClass,
    pub depth_used: usize,
}

impl PixelVerdict {
    pub fn classify(p: &TraceTriple, cfg: &BqConfig) -> Self {
        match bq_test(p, cfg) {
            Ok(v) => {
                let class = match &v {
                    BqVerdict::SatisfiesBq(_) => PixelClass::Bq,
                    BqVerdict::FailsBq(w) => match w.kind {
                        WitnessKind::PrimitiveInInterval => PixelClass::NotBqInterval,
                        WitnessKind::ExceptionalBoundary { .. } => PixelClass::NotBqExceptional,
                    },
                    BqVerdict::Unknown(_) => PixelClass::Unknown,
                };
                let depth_used = match &v {
                    BqVerdict::FailsBq(w) => w.depth,
                    _ => v.depth_used(),
                };
                PixelVerdict { class, depth_used }
            }
            Err(BqError::ElementaryRepresentation) => PixelVerdict {
                class: PixelClass::Elementary,
                depth_used: 0,
            },
            Err(_) => PixelVerdict {
                class: PixelClass::Unknown,
                depth_used: 0,
            },
        }
    }

    pub fn grey(&self) -> u8 {
        match self.class {
            PixelClass::Bq => 255,
            PixelClass::Unknown => 0,
            PixelClass::Elementary => 128,
            PixelClass::NotBqExceptional => 160,
            PixelClass::NotBqInterval => 20 + 2 * self.depth_used.min(50) as u8,
        }
    }

    pub fn rgb(&self) -> [u8; 3] {
        match self.class {
            PixelClass::Bq => [255, 255, 255],
            PixelClass::Unknown => [0, 0, 0],
            PixelClass::Elementary => [128, 128, 128],
            PixelClass::NotBqExceptional => [255, 0, 0],
            PixelClass::NotBqInterval => [0, 0, 80 + 5 * self.depth_used.min(35) as u8],
        }
    }
}

/// Inverse of [`PixelVerdict::grey`] on classes.
pub fn class_of_grey(g: u8) -> Option<PixelClass> {
    match g {
        255 => Some(PixelClass::Bq),
        0 => Some(PixelClass::Unknown),
        128 => Some(PixelClass::Elementary),
        160 => Some(PixelClass::NotBqExceptional),
        20..=120 if g.is_multiple_of(2) => Some(PixelClass::NotBqInterval),
        _ => None,
    }
}

/// Inverse of [`PixelVerdict::rgb`] on classes.
pub fn class_of_rgb(c: [u8; 3]) -> Option<PixelClass> {
    match c {
        [255, 255, 255] => Some(PixelClass::Bq),
        [0, 0, 0] => Some(PixelClass::Unknown),
        [128, 128, 128] => Some(PixelClass::Elementary),
        [255, 0, 0] => Some(PixelClass::NotBqExceptional),
        [0, 0, b] if b >= 80 && b % 5 == 0 => Some(PixelClass::NotBqInterval),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanSpec {
    pub family: Family,
    pub window: Window,
    pub width: usize,
    pub height: usize,
    pub image: ImageKind,
    pub bq: BqConfig,
}

impl ScanSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        let w = &self.window;
        if self.width == 0 || self.height == 0 {
            return Err(CliError::Geometry("image size must be at least 1x1".into()));
        }
        if ![w.re0, w.im0, w.re1, w.im1].iter().all(|v| v.is_finite())
            || w.re0 == w.re1
            || w.im0 == w.im1
        {
            return Err(CliError::Geometry(format!("degenerate window {w:?}")));
        }
        Ok(())
    }

    /// Parameter at the centre of pixel `(i, j)`; row 0 is the top edge
    /// (`im1`).
    pub fn parameter(&self, i: usize, j: usize) -> Complex64 {
        let w = &self.window;
        let fx = (i as f64 + 0.5) / self.width as f64;
        let fy = (j as f64 + 0.5) / self.height as f64;
        Complex64::new(w.re0 + fx * (w.re1 - w.re0), w.im1 - fy * (w.im1 - w.im0))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub bq: usize,
    pub not_bq_interval: usize,
    pub not_bq_exceptional: usize,
    pub unknown: usize,
    pub elementary: usize,
}

impl Counts {
    pub fn add(&mut self, c: PixelClass) {
        *match c {
            PixelClass::Bq => &mut self.bq,
            PixelClass::NotBqInterval => &mut self.not_bq_interval,
            PixelClass::NotBqExceptional => &mut self.not_bq_exceptional,
            PixelClass::Unknown => &mut self.unknown,
            PixelClass::Elementary => &mut self.elementary,
        } += 1;
    }
}

/// The JSON sidecar. `elapsed_ms` is the only field that varies between
/// identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct Sidecar {
    pub schema_version: u32,
    #[serde(flatten)]
    pub spec: ScanSpec,
    pub counts: Counts,
    pub elapsed_ms: u128,
}

pub struct ScanResult {
    pub pixels: Vec<PixelVerdict>,
    pub image: Vec<u8>,
    pub sidecar: Sidecar,
}

/// Rows are computed in parallel on a pool of `threads` workers (0 means
/// rayon's default) and collected in row order.
pub fn run_scan(spec: &ScanSpec, threads: usize) -> Result<ScanResult, CliError> {
    spec.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Geometry(format!("thread pool: {e}")))?;
    let rows: Vec<Vec<PixelVerdict>> = pool.install(|| {
        (0..spec.height)
            .into_par_iter()
            .map(|j| {
                (0..spec.width)
                    .map(|i| {
                        PixelVerdict::classify(&spec.family.triple(spec.parameter(i, j)), &spec.bq)
                    })
                    .collect()
            })
            .collect()
    });
    let pixels: Vec<PixelVerdict> = rows.into_iter().flatten().collect();
    let mut counts = Counts::default();
    for p in &pixels {
        counts.add(p.class);
    }
    let image = encode(spec, &pixels);
    Ok(ScanResult {
        pixels,
        image,
        sidecar: Sidecar {
            schema_version: SCHEMA_VERSION,
            spec: *spec,
            counts,
            elapsed_ms: start.elapsed().as_millis(),
        },
    })
}

fn encode(spec: &ScanSpec, pixels: &[PixelVerdict]) -> Vec<u8> {
    let magic = match spec.image {
        ImageKind::Pgm => "P5",
        ImageKind::Ppm => "P6",
    };
    let mut out = format!("{magic}\n{} {}\n255\n", spec.width, spec.height).into_bytes();
    for p in pixels {
        match spec.image {
            ImageKind::Pgm => out.push(p.grey()),
            ImageKind::Ppm => out.extend_from_slice(&p.rgb()),
        }
    }
    out
}

/// Splits a binary PGM/PPM written by this module into its kind, size and
/// pixel bytes.
pub fn decode(bytes: &[u8]) -> Option<(ImageKind, usize, usize, &[u8])> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while bytes.get(pos)?.is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while !bytes.get(pos)?.is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).ok()?);
    }
    let kind = match fields[0] {
        "P5" => ImageKind::Pgm,
        "P6" => ImageKind::Ppm,
        _ => return None,
    };
    let w = fields[1].parse().ok()?;
    let h = fields[2].parse().ok()?;
    Some((kind, w, h, &bytes[pos + 1..]))
}

/// Per-class counts read back from an encoded image.
pub fn recount(bytes: &[u8]) -> Option<Counts> {
    let (kind, w, h, data) = decode(bytes)?;
    let mut counts = Counts::default();
    match kind {
        ImageKind::Pgm => {
            if data.len() != w * h {
                return None;
            }
            for g in data {
                counts.add(class_of_grey(*g)?);
            }
        }
        ImageKind::Ppm => {
            if data.len() != 3 * w * h {
                return None;
            }
            for c in data.chunks_exact(3) {
                counts.add(class_of_rgb([c[0], c[1], c[2]])?);
            }
        }
    }
    Some(counts)
}
