//! Numerical evidence for primitive stability and the bounded intersection
//! property.
//!
//! Neither property is decidable at finite level: the estimates here are
//! level-indexed and the verdicts are heuristics with an explicit `Unknown`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bq::in_interval;
use crate::farey::{
    farey_word, mod2_type, palindromic_representative, rationals_up_to, BasicPair, FareyError,
    Rational, Word,
};
use crate::h3geom::{
    apply_moebius, axis, common_perpendicular, complex_half_length, evaluate_word, h3_distance,
    hyperelliptic_axes, lift_representation, GeomError, H3Point, IsometryKind, Lift, MoebiusMatrix,
};
use crate::markoff::{enumerate_omega, region_trace, RegionRef, TraceTriple};

/// Largest gap at which two geodesics count as intersecting.
pub const INTERSECTION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PsError {
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Farey(#[from] FareyError),
    #[error("word {0} is not cyclically reduced")]
    NotCyclicallyShortest(Word),
    #[error("bending angle needs two non-degenerate segments")]
    DegenerateSegment,
    #[error("level must be at least {0}")]
    LevelTooSmall(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrokenGeodesic {
    pub word: Word,
    /// `O, E₁O, E₁E₂O, ...` over one period of the word.
    pub vertices: Vec<H3Point>,
}

pub fn broken_geodesic(
    w: &Word,
    a: &MoebiusMatrix,
    b: &MoebiusMatrix,
    o: &H3Point,
) -> Result<BrokenGeodesic, PsError> {
    if !w.is_cyclically_reduced() {
        return Err(PsError::NotCyclicallyShortest(w.clone()));
    }
    let mut vertices = vec![*o];
    let mut acc = MoebiusMatrix::IDENTITY;
    for l in w.letters() {
        let step = evaluate_word(&Word::reduced([*l]), a, b);
        acc = acc.mul(&step);
        vertices.push(apply_moebius(&acc, o));
    }
    Ok(BrokenGeodesic {
        word: w.clone(),
        vertices,
    })
}

/// Interior angle at `q` of the triangle `p q r`.
pub fn bending_angle(p: &H3Point, q: &H3Point, r: &H3Point) -> Result<f64, PsError> {
    let a = h3_distance(q, p);
    let b = h3_distance(q, r);
    if a <= 1e-12 || b <= 1e-12 {
        return Err(PsError::DegenerateSegment);
    }
    let c = h3_distance(p, r);
    let cos = (a.cosh() * b.cosh() - c.cosh()) / (a.sinh() * b.sinh());
    Ok(cos.clamp(-1.0, 1.0).acos())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QgEstimate {
    pub k_hat: f64,
    pub eps_hat: f64,
    /// Smallest `d(O, ρ(s)O) / |s|` over the tested subwords `s`.
    pub min_ratio: f64,
    /// A subword attaining `min_ratio`.
    pub min_word: Word,
    pub level: usize,
}

/// The classes tested at `level`: the three base classes and every
/// nonnegative `p/q` with `p + q <= level`.
pub fn level_rationals(level: usize) -> Vec<Rational> {
    let mut out = vec![Rational::ZERO, Rational::INFINITY, Rational::ONE];
    for r in rationals_up_to(level) {
        if !out.contains(&r) {
            out.push(r);
        }
    }
    out
}

struct Sample {
    len: usize,
    dist: f64,
    start: usize,
    word: usize,
}

/// Displacements of `O` along every subword of the periodic word `w^∞`
/// starting in the first period, of length up to `2|w|`.
fn subword_samples(w: &Word, lift: &Lift, idx: usize, out: &mut Vec<Sample>) {
    let letters = w.letters();
    let n = letters.len();
    let mats: Vec<MoebiusMatrix> = letters
        .iter()
        .map(|l| evaluate_word(&Word::reduced([*l]), &lift.a, &lift.b))
        .collect();
    for start in 0..n {
        let mut acc = MoebiusMatrix::IDENTITY;
        for len in 1..=2 * n {
            acc = acc.mul(&mats[(start + len - 1) % n]);
            out.push(Sample {
                len,
                dist: h3_distance(&H3Point::O, &apply_moebius(&acc, &H3Point::O)),
                start,
                word: idx,
            });
        }
    }
}

pub fn ps_estimate(base: &TraceTriple, level: usize) -> Result<QgEstimate, PsError> {
    if level < 2 {
        return Err(PsError::LevelTooSmall(2));
    }
    let lift = lift_representation(base)?;
    let words: Vec<Word> = level_rationals(level).iter().map(farey_word).collect();
    let mut samples = Vec::new();
    for (i, w) in words.iter().enumerate() {
        subword_samples(w, &lift, i, &mut samples);
    }
    let ratio = |s: &Sample| s.dist / s.len as f64;
    let min = samples
        .iter()
        .min_by(|x, y| ratio(x).total_cmp(&ratio(y)))
        .expect("at least three words");
    let min_ratio = ratio(min);
    let max_ratio = samples.iter().map(ratio).fold(0.0, f64::max);
    let long_min = samples
        .iter()
        .filter(|s| s.len >= 4)
        .map(ratio)
        .fold(f64::INFINITY, f64::min);
    let mut k_hat = max_ratio.max(1.0);
    if long_min.is_finite() && long_min > 0.0 {
        k_hat = k_hat.max(1.0 / long_min);
    }
    let eps_hat = samples
        .iter()
        .map(|s| s.len as f64 / k_hat - s.dist)
        .fold(0.0, f64::max);
    let w = &words[min.word];
    let period = w.letters();
    let min_word = Word::reduced((0..min.len).map(|k| period[(min.start + k) % period.len()]));
    Ok(QgEstimate {
        k_hat,
        eps_hat,
        min_ratio,
        min_word,
        level,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsConfig {
    pub level: usize,
    /// `min_ratio` below this counts as collapse.
    pub floor: f64,
    /// Largest relative drop of `min_ratio` over the last three levels that
    /// still counts as stable.
    pub max_drop: f64,
    /// Boundary steps for the search of small traces.
    pub budget: usize,
    pub tol: f64,
}

impl Default for PsConfig {
    fn default() -> Self {
        PsConfig {
            level: 10,
            floor: 1e-3,
            max_drop: 0.05,
            budget: 200,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsWitness {
    pub word: Word,
    pub region: Option<Rational>,
    pub trace: Option<Complex64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PsVerdict {
    LikelyPs(QgEstimate),
    NotPs(PsWitness),
    Unknown(Option<QgEstimate>),
}

impl PsVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            PsVerdict::LikelyPs(_) => "likely_ps",
            PsVerdict::NotPs(_) => "not_ps",
            PsVerdict::Unknown(_) => "unknown",
        }
    }
}

/// JSON form of a PS estimate and verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsReport {
    pub schema_version: u32,
    pub min_ratio: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub eps: Option<f64>,
    pub level: usize,
    pub verdict: String,
    pub witness: Option<PsWitness>,
}

impl PsReport {
    pub fn new(v: &PsVerdict, level: usize) -> Self {
        let est = match v {
            PsVerdict::LikelyPs(e) | PsVerdict::Unknown(Some(e)) => Some(e),
            _ => None,
        };
        PsReport {
            schema_version: crate::SCHEMA_VERSION,
            min_ratio: est.map(|e| e.min_ratio),
            k: est.map(|e| e.k_hat),
            eps: est.map(|e| e.eps_hat),
            level,
            verdict: v.label().to_string(),
            witness: match v {
                PsVerdict::NotPs(w) => Some(w.clone()),
                _ => None,
            },
        }
    }
}

/// A primitive class with trace in `[-2, 2]` among the tested classes and
/// the regions of `Ω(2)` reachable from the root and the sink.
fn elliptic_primitive(base: &TraceTriple, cfg: &PsConfig) -> Option<PsWitness> {
    let mut candidates: Vec<RegionRef> = level_rationals(cfg.level)
        .into_iter()
        .map(|r| RegionRef {
            address: r,
            trace: region_trace(base, &r),
        })
        .collect();
    candidates.extend(enumerate_omega(base, 2.0, cfg.budget).regions);
    candidates
        .into_iter()
        .find(|r| in_interval(&r.trace, cfg.tol))
        .map(|r| PsWitness {
            word: farey_word(&r.address),
            region: Some(r.address),
            trace: r.trace.finite(),
            reason: "primitive with trace in [-2,2]".into(),
        })
}

pub fn ps_verdict(base: &TraceTriple, cfg: &PsConfig) -> PsVerdict {
    if lift_representation(base).is_err() {
        return PsVerdict::Unknown(None);
    }
    if let Some(w) = elliptic_primitive(base, cfg) {
        return PsVerdict::NotPs(w);
    }
    let top = cfg.level.max(4);
    let mut ests = Vec::new();
    for level in top - 2..=top {
        match ps_estimate(base, level) {
            Ok(e) => ests.push(e),
            Err(_) => return PsVerdict::Unknown(None),
        }
    }
    let first = ests[0].min_ratio;
    let last = ests.pop().expect("three levels");
    let drop = if first > 0.0 {
        (first - last.min_ratio) / first
    } else {
        1.0
    };
    if last.min_ratio >= cfg.floor && drop <= cfg.max_drop {
        PsVerdict::LikelyPs(last)
    } else if last.min_ratio < cfg.floor && last.min_ratio < first {
        PsVerdict::NotPs(PsWitness {
            word: last.min_word.clone(),
            region: None,
            trace: None,
            reason: "displacement ratio collapsing".into(),
        })
    } else {
        PsVerdict::Unknown(Some(last))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BipStatus {
    Intersects,
    /// The axes stay apart; `gap` is their distance.
    NoIntersection {
        gap: f64,
    },
    /// Parabolic image; the degenerate axis meets the hyperelliptic axis at
    /// infinity.
    Parabolic,
    /// Geometry failed (shared endpoints or identity image).
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipRecord {
    pub rational: Rational,
    pub pair: BasicPair,
    pub word: Word,
    pub status: BipStatus,
    pub point: Option<H3Point>,
    pub distance_to_o: Option<f64>,
    /// `|cos θ|` of the crossing angle.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipReport {
    pub schema_version: u32,
    #[serde(rename = "D_hat")]
    pub d_hat: f64,
    pub level: usize,
    pub records: Vec<BipRecord>,
}

impl BipReport {
    pub fn max_residual(&self) -> f64 {
        self.records
            .iter()
            .filter_map(|r| r.residual)
            .fold(0.0, f64::max)
    }
}

fn pair_matrices(lift: &Lift, pair: BasicPair) -> (MoebiusMatrix, MoebiusMatrix) {
    let (x, y) = pair.generators();
    (
        evaluate_word(&x, &lift.a, &lift.b),
        evaluate_word(&y, &lift.a, &lift.b),
    )
}

pub fn bip_report(base: &TraceTriple, level: usize) -> Result<BipReport, PsError> {
    let lift = lift_representation(base)?;
    let [e_ab, e_aab, e_bab] = hyperelliptic_axes(&lift.a, &lift.b)?;
    let mut records = Vec::new();
    for r in level_rationals(level) {
        for pair in BasicPair::admissible(mod2_type(&r)) {
            let e = match pair {
                BasicPair::AB => &e_ab,
                BasicPair::AAb => &e_aab,
                BasicPair::BAb => &e_bab,
            };
            let word = palindromic_representative(&r, pair)?;
            let w = evaluate_word(&word, &lift.a, &lift.b);
            let mut rec = BipRecord {
                rational: r,
                pair,
                word,
                status: BipStatus::Degenerate,
                point: None,
                distance_to_o: None,
                residual: None,
            };
            match complex_half_length(&w) {
                Ok(l) if l.kind == IsometryKind::Parabolic => rec.status = BipStatus::Parabolic,
                Ok(_) => {
                    if let Ok(cp) = axis(&w).and_then(|g| common_perpendicular(&g, &e.geodesic)) {
                        rec.residual = Some(cp.delta.im.cos().abs());
                        if cp.distance() <= INTERSECTION_TOL {
                            let p = cp.midpoint();
                            rec.status = BipStatus::Intersects;
                            rec.distance_to_o = Some(h3_distance(&H3Point::O, &p));
                            rec.point = Some(p);
                        } else {
                            rec.status = BipStatus::NoIntersection { gap: cp.distance() };
                        }
                    }
                }
                Err(_) => {}
            }
            records.push(rec);
        }
    }
    let d_hat = records
        .iter()
        .filter_map(|r| r.distance_to_o)
        .fold(0.0, f64::max);
    Ok(BipReport {
        schema_version: crate::SCHEMA_VERSION,
        d_hat,
        level,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySample {
    pub from: Rational,
    pub to: Rational,
    /// `min(ℓ(U_i), ℓ(U_{i+1}))`.
    pub m: f64,
    /// `d(Ax U_i, Ax U_{i+1})`, the real part of the complex distance.
    pub distance: f64,
    /// `|δ|` for the complex distance `δ = d + iθ` with `θ` reduced mod `π`
    /// into `(-π/2, π/2]`, so that the orientation of the axes drops out.
    pub complex_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub pair: BasicPair,
    pub samples: Vec<DecaySample>,
    /// Least-squares fit of `ln |δ|` against `m`; needs two samples.
    ///
    /// The real part alone vanishes whenever the axes cross, which they do
    /// at every Fuchsian point, so the fit uses the complex distance.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub gap_sum: f64,
    /// Distance between the points where the first and last axes meet the
    /// hyperelliptic axis of `pair`.
    pub end_distance: Option<f64>,
}

/// Distances between consecutive palindromic axes along `path`, whose
/// regions are all palindromic in `pair`.
pub fn perpendicular_decay_probe(
    base: &TraceTriple,
    path: &[RegionRef],
    pair: BasicPair,
) -> Result<DecayReport, PsError> {
    let lift = lift_representation(base)?;
    let (x, y) = pair_matrices(&lift, pair);
    let e = crate::h3geom::common_perpendicular(&axis(&x)?, &axis(&y)?)?;
    let mut axes = Vec::new();
    let mut lengths = Vec::new();
    for r in path {
        let w = palindromic_representative(&r.address, pair)?;
        let m = evaluate_word(&w, &lift.a, &lift.b);
        lengths.push(complex_half_length(&m)?.ell());
        axes.push(axis(&m)?);
    }
    let mut samples = Vec::new();
    for i in 1..path.len() {
        let cp = common_perpendicular(&axes[i - 1], &axes[i])?;
        let theta = cp.delta.im - PI * (cp.delta.im / PI).round();
        samples.push(DecaySample {
            from: path[i - 1].address,
            to: path[i].address,
            m: lengths[i - 1].min(lengths[i]),
            distance: cp.distance(),
            complex_distance: cp.distance().hypot(theta),
        });
    }
    let gap_sum = samples.iter().map(|s| s.distance).sum();
    let meet = |g| {
        common_perpendicular(g, &e.geodesic)
            .ok()
            .map(|cp| cp.midpoint())
    };
    let end_distance = match (axes.first().and_then(meet), axes.last().and_then(meet)) {
        (Some(p), Some(q)) if path.len() > 1 => Some(h3_distance(&p, &q)),
        _ => None,
    };
    let (slope, intercept) = regression(&samples);
    Ok(DecayReport {
        pair,
        samples,
        slope,
        intercept,
        gap_sum,
        end_distance,
    })
}

fn regression(samples: &[DecaySample]) -> (Option<f64>, Option<f64>) {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.complex_distance > 0.0)
        .map(|s| (s.m, s.complex_distance.ln()))
        .collect();
    if pts.len() < 2 {
        return (None, None);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return (None, None);
    }
    let slope = sxy / sxx;
    (Some(slope), Some(my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::h3geom::Geodesic;
    use crate::markoff::descending_path;
    use crate::Mod2Type;

    fn t3() -> TraceTriple {
        TraceTriple::real(3.0, 3.0, 3.0)
    }

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn broken_geodesic_vertices() {
        let l = lift_representation(&t3()).unwrap();
        let g = broken_geodesic(&w("ab"), &l.a, &l.b, &H3Point::O).unwrap();
        assert_eq!(g.vertices.len(), 3);
        assert_eq!(g.vertices[1], apply_moebius(&l.a, &H3Point::O));
        assert_eq!(g.vertices[2], apply_moebius(&l.a.mul(&l.b), &H3Point::O));
        let g = broken_geodesic(&w("a"), &l.a, &l.b, &H3Point::O).unwrap();
        assert_eq!(g.vertices.len(), 2);
        assert!(matches!(
            broken_geodesic(&w("abA"), &l.a, &l.b, &H3Point::O),
            Err(PsError::NotCyclicallyShortest(_))
        ));

        let word = farey_word(&Rational::new(2, 5).unwrap());
        let g = broken_geodesic(&word, &l.a, &l.b, &H3Point::O).unwrap();
        assert_eq!(g.vertices.len(), 8);
        let m = evaluate_word(&word, &l.a, &l.b);
        let direct = h3_distance(&H3Point::O, &apply_moebius(&m, &H3Point::O));
        assert!((h3_distance(&H3Point::O, g.vertices.last().unwrap()) - direct).abs() < 1e-9);
    }

    #[test]
    fn bending_examples() {
        let p = |t: f64| H3Point::new(Complex64::new(0.0, 0.0), t);
        assert!((bending_angle(&p(0.5), &p(1.0), &p(3.0)).unwrap() - PI).abs() < 1e-7);
        assert!(bending_angle(&p(0.5), &p(1.0), &p(0.5)).unwrap().abs() < 1e-7);
        // (0,1) is the top of the unit semicircle over the real axis, which
        // meets the vertical axis at a right angle
        let g = Geodesic::finite(Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)).unwrap();
        let q = g.point_at(0.7);
        let angle = bending_angle(&p(2.0), &p(1.0), &q).unwrap();
        assert!((angle - PI / 2.0).abs() < 1e-9);
        assert!(matches!(
            bending_angle(&p(1.0), &p(1.0), &p(2.0)),
            Err(PsError::DegenerateSegment)
        ));
    }

    #[test]
    fn estimate_examples() {
        let e = ps_estimate(&t3(), 12).unwrap();
        assert!(e.min_ratio > 0.1);
        assert!(e.k_hat >= 1.0);
        let e2 = ps_estimate(&t3(), 2).unwrap();
        assert!(e2.min_ratio >= e.min_ratio);
        assert!(matches!(
            ps_estimate(&t3(), 1),
            Err(PsError::LevelTooSmall(2))
        ));
    }

    #[test]
    fn verdict_examples() {
        assert!(matches!(
            ps_verdict(&t3(), &PsConfig::default()),
            PsVerdict::LikelyPs(_)
        ));
        match ps_verdict(&TraceTriple::real(1.0, 1.0, 1.0), &PsConfig::default()) {
            PsVerdict::NotPs(wit) => {
                assert_eq!(wit.word, w("a"));
                assert_eq!(wit.trace, Some(Complex64::new(1.0, 0.0)));
            }
            other => panic!("expected NotPs, got {other:?}"),
        }
    }

    #[test]
    fn bip_level_two() {
        let r = bip_report(&t3(), 2).unwrap();
        assert_eq!(r.records.len(), 6);
        for rec in &r.records {
            assert_eq!(rec.status, BipStatus::Intersects, "{rec:?}");
            assert!(rec.residual.unwrap() <= 1e-6);
        }
        assert!(r.d_hat.is_finite());
    }

    #[test]
    fn decay_probe_small() {
        let b = t3();
        let path = descending_path(
            &b,
            &Rational::new(1, 3).unwrap(),
            3.0,
            Mod2Type::OneZero,
            20,
        )
        .unwrap();
        let rep = perpendicular_decay_probe(&b, &path[..2], BasicPair::BAb).unwrap();
        assert_eq!(rep.samples.len(), 1);
        assert!(rep.slope.is_none());
        let rep = perpendicular_decay_probe(&b, &path, BasicPair::BAb).unwrap();
        assert!(rep.gap_sum + 1e-9 >= rep.end_distance.unwrap());
    }
}
