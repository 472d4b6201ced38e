//! Semi-decision of the BQ-condition.
//!
//! `bq_test` descends to a sink of the arrow field, then grows a finite
//! subtree around it until every edge leaving the subtree is decisively
//! inward and each such edge's wake is certified free of small traces:
//!
//! * if both regions adjacent to the edge have `|φ| > m >= 2`, every arrow in
//!   the wake points back toward the edge and traces grow outward;
//! * if one adjacent region `u` is small, its boundary sequence past the edge
//!   is certified to increase with `|y_i|² > 2|φ(u)|`, which reduces every
//!   remaining part of the wake to the first case.

use std::collections::{HashMap, VecDeque};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::farey::{is_neighbour, Rational};
use crate::markoff::{
    boundary_tail_certified, others, region_trace, steepest_descent, vertex_of, BoundaryFit,
    Direction, RegionRef, Trace, TraceTriple, Vertex,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BqError {
    #[error("μ = 4: the representation is elementary")]
    ElementaryRepresentation,
    #[error("non-finite trace input")]
    NonFinite,
    #[error("m must be at least 2, got {0}")]
    BadThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BqConfig {
    /// Regions with `|φ| <= m` need an individual tail certificate.
    pub m: f64,
    /// Maximum combinatorial depth from the root.
    pub depth_budget: usize,
    /// Boundary steps allowed per tail certificate.
    pub boundary_budget: usize,
    pub max_vertices: usize,
    /// Interval and `±√μ` proximity tolerance.
    pub tol: f64,
}

impl Default for BqConfig {
    fn default() -> Self {
        BqConfig {
            m: 2.0,
            depth_budget: 50,
            boundary_budget: 100,
            max_vertices: 20_000,
            tol: 1e-9,
        }
    }
}

/// `t ∈ [-2, 2]` up to `tol`.
pub fn in_interval(t: &Trace, tol: f64) -> bool {
    match t {
        Trace::Finite(z) => z.im.abs() <= tol && z.re >= -2.0 - tol && z.re <= 2.0 + tol,
        Trace::Escaped => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessKind {
    PrimitiveInInterval,
    /// `direction` is `+1` or `-1` for one-sided decay along the boundary
    /// (relative to the region's anchor vertex), absent when bounded.
    ExceptionalBoundary {
        direction: Option<i8>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BqWitness {
    #[serde(flatten)]
    pub kind: WitnessKind,
    pub region: Rational,
    pub trace: Complex64,
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeVertex {
    pub regions: [Rational; 3],
    pub traces: [Trace; 3],
    pub depth: usize,
}

impl TreeVertex {
    fn vertex(&self) -> Vertex {
        Vertex {
            regions: self.regions,
            traces: self.traces,
        }
    }
}

/// An edge leaving the tree at `vertex`, opposite `slot`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRecord {
    pub vertex: usize,
    pub slot: usize,
    pub direction: Direction,
    /// The adjacent region with `|φ| <= m`, if any.
    pub small: Option<Rational>,
}

/// Certificate for `SatisfiesBq`. Vertex 0 is the sink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractingTree {
    pub m: f64,
    pub boundary_budget: usize,
    pub vertices: Vec<TreeVertex>,
    pub edges: Vec<[usize; 2]>,
    pub boundary: Vec<BoundaryRecord>,
    /// Regions of the tree with `|φ| <= m`.
    pub omega: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub depth_used: usize,
    pub vertices: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BqVerdict {
    SatisfiesBq(AttractingTree),
    FailsBq(BqWitness),
    Unknown(BudgetReport),
}

/// JSON form of a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BqReport {
    pub schema_version: u32,
    pub verdict: String,
    pub witness: Option<BqWitness>,
    pub certificate_size: usize,
    pub depth_used: usize,
}

impl BqVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            BqVerdict::SatisfiesBq(_) => "bq",
            BqVerdict::FailsBq(_) => "not_bq",
            BqVerdict::Unknown(_) => "unknown",
        }
    }

    pub fn depth_used(&self) -> usize {
        match self {
            BqVerdict::SatisfiesBq(t) => t.vertices.iter().map(|v| v.depth).max().unwrap_or(0),
            BqVerdict::FailsBq(w) => w.depth,
            BqVerdict::Unknown(r) => r.depth_used,
        }
    }

    pub fn report(&self) -> BqReport {
        BqReport {
            schema_version: crate::SCHEMA_VERSION,
            verdict: self.label().to_string(),
            witness: match self {
                BqVerdict::FailsBq(w) => Some(*w),
                _ => None,
            },
            certificate_size: match self {
                BqVerdict::SatisfiesBq(t) => t.vertices.len(),
                _ => 0,
            },
            depth_used: self.depth_used(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryGrowth {
    EscapesBothWays,
    /// Decays in the given direction (`+1` toward the second anchor
    /// neighbour, `-1` toward the first).
    DecaysOneWay(i8),
    Bounded,
    Unknown,
}

/// Growth of the boundary sequence `y_{i+1} = φ(u) y_i - y_{i-1}` around
/// `region`, seeded at its anchor vertex.
///
/// Beyond the interval the sequence is `Aλ^i + Bλ^{-i}` with `|λ| > 1`; it
/// decays one way exactly when `A` or `B` vanishes. The coefficients are
/// read from the first `steps` terms.
pub fn boundary_recurrence(base: &TraceTriple, region: &RegionRef, steps: usize) -> BoundaryGrowth {
    if steps == 0 {
        return BoundaryGrowth::Unknown;
    }
    let Trace::Finite(u) = region.trace else {
        return BoundaryGrowth::EscapesBothWays;
    };
    if in_interval(&region.trace, 1e-9) {
        return BoundaryGrowth::Bounded;
    }
    let anchor = vertex_of(base, &region.address);
    let Some(s) = anchor.slot_of(&region.address) else {
        return BoundaryGrowth::Unknown;
    };
    let (i, j) = others(s);
    let (Some(y0), Some(y1)) = (anchor.traces[i].finite(), anchor.traces[j].finite()) else {
        return BoundaryGrowth::EscapesBothWays;
    };
    let Some(fit) = BoundaryFit::new(u, y0, y1) else {
        return BoundaryGrowth::Bounded;
    };
    let scale = fit.a.norm() + fit.b.norm();
    if scale == 0.0 {
        return BoundaryGrowth::Bounded;
    }
    // Rounding in a vanishing coefficient is amplified by λ^steps; a
    // coefficient counts as zero when it stays below the seeds' scale over
    // the window.
    let horizon = fit.lambda.norm().powi(steps.min(40) as i32);
    let seed_scale = y0.norm().max(y1.norm()).max(1.0);
    let forward_dies = fit.a.norm() * horizon <= 1e-6 * seed_scale && fit.a.norm() <= 1e-8 * scale;
    let backward_dies = fit.b.norm() * horizon <= 1e-6 * seed_scale && fit.b.norm() <= 1e-8 * scale;
    match (forward_dies, backward_dies) {
        (false, false) => BoundaryGrowth::EscapesBothWays,
        (true, false) => BoundaryGrowth::DecaysOneWay(1),
        (false, true) => BoundaryGrowth::DecaysOneWay(-1),
        (true, true) => BoundaryGrowth::Bounded,
    }
}

fn near_sqrt_mu(t: &Complex64, sqrt_mu: &Complex64, tol: f64) -> bool {
    let scale = 1.0 + sqrt_mu.norm();
    (t - sqrt_mu).norm() <= tol * scale || (t + sqrt_mu).norm() <= tol * scale
}

struct Search<'a> {
    base: &'a TraceTriple,
    cfg: &'a BqConfig,
    sqrt_mu: Complex64,
    seen: HashMap<Rational, ()>,
}

impl Search<'_> {
    /// Witness for a region, checked once per region.
    fn classify(&mut self, r: RegionRef, depth: usize) -> Option<BqWitness> {
        if self.seen.insert(r.address, ()).is_some() {
            return None;
        }
        let Trace::Finite(t) = r.trace else {
            return None;
        };
        if near_sqrt_mu(&t, &self.sqrt_mu, self.cfg.tol) {
            match boundary_recurrence(self.base, &r, self.cfg.boundary_budget) {
                BoundaryGrowth::DecaysOneWay(d) => {
                    return Some(BqWitness {
                        kind: WitnessKind::ExceptionalBoundary { direction: Some(d) },
                        region: r.address,
                        trace: t,
                        depth,
                    })
                }
                BoundaryGrowth::Bounded => {
                    return Some(BqWitness {
                        kind: WitnessKind::ExceptionalBoundary { direction: None },
                        region: r.address,
                        trace: t,
                        depth,
                    })
                }
                _ => {}
            }
        }
        if in_interval(&r.trace, self.cfg.tol) {
            return Some(BqWitness {
                kind: WitnessKind::PrimitiveInInterval,
                region: r.address,
                trace: t,
                depth,
            });
        }
        None
    }

    fn classify_vertex(&mut self, v: &Vertex, depth: usize) -> Option<BqWitness> {
        (0..3).find_map(|s| self.classify(v.region(s), depth))
    }
}

/// Certifies the wake of the edge of `v` opposite `slot`, assumed
/// decisively inward. Returns the small adjacent region on success.
fn certify_wake(v: &Vertex, slot: usize, m: f64, budget: usize) -> Result<Option<Rational>, ()> {
    let (i, j) = others(slot);
    let (ni, nj) = (v.traces[i].norm(), v.traces[j].norm());
    let z = v.flip(slot).traces[slot];
    match (ni > m, nj > m) {
        (true, true) => Ok(None),
        (false, false) => Err(()),
        (small_j, _) => {
            // small_j: region i is large, so j is the small one
            let (u, p) = if small_j { (j, i) } else { (i, j) };
            let floor = 2f64.max((2.0 * v.traces[u].norm()).sqrt());
            if boundary_tail_certified(&v.traces[u], &v.traces[p], &z, floor, budget) {
                Ok(Some(v.regions[u]))
            } else {
                Err(())
            }
        }
    }
}

fn is_inward(v: &Vertex, slot: usize) -> bool {
    let e = v.edge(slot);
    e.decisive && e.direction == Direction::TowardW
}

pub fn bq_test(base: &TraceTriple, cfg: &BqConfig) -> Result<BqVerdict, BqError> {
    if !base.is_finite() {
        return Err(BqError::NonFinite);
    }
    if cfg.m.is_nan() || cfg.m < 2.0 {
        return Err(BqError::BadThreshold(cfg.m));
    }
    let mu = base.mu();
    if (mu - 4.0).norm() <= 1e-9 * (1.0 + mu.norm()) {
        return Err(BqError::ElementaryRepresentation);
    }
    let mut search = Search {
        base,
        cfg,
        sqrt_mu: mu.sqrt(),
        seen: HashMap::new(),
    };
    let unknown = |depth: usize, vertices: usize, reason: &str| {
        Ok(BqVerdict::Unknown(BudgetReport {
            depth_used: depth,
            vertices,
            reason: reason.to_string(),
        }))
    };

    let mut v = Vertex::root(base);
    if let Some(w) = search.classify_vertex(&v, 0) {
        return Ok(BqVerdict::FailsBq(w));
    }
    let mut sink_depth = 0;
    loop {
        match steepest_descent(&v) {
            None => break,
            Some(s) => {
                if sink_depth >= cfg.depth_budget {
                    return unknown(sink_depth, 1, "no sink within depth budget");
                }
                sink_depth += 1;
                v = v.flip(s);
                if let Some(w) = search.classify(v.region(s), sink_depth) {
                    return Ok(BqVerdict::FailsBq(w));
                }
            }
        }
    }

    let mut vertices = vec![TreeVertex {
        regions: v.regions,
        traces: v.traces,
        depth: sink_depth,
    }];
    let mut index: HashMap<[Rational; 3], usize> = HashMap::new();
    index.insert(v.key(), 0);
    let mut edges = Vec::new();
    let mut boundary = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    let mut max_depth = sink_depth;
    while let Some(k) = queue.pop_front() {
        let tv = vertices[k];
        let cur = tv.vertex();
        for s in 0..3 {
            let n = cur.flip(s);
            if index.contains_key(&n.key()) {
                continue;
            }
            if is_inward(&cur, s) {
                if let Ok(small) = certify_wake(&cur, s, cfg.m, cfg.boundary_budget) {
                    boundary.push(BoundaryRecord {
                        vertex: k,
                        slot: s,
                        direction: Direction::TowardW,
                        small,
                    });
                    continue;
                }
            }
            let depth = tv.depth + 1;
            if depth > cfg.depth_budget {
                return unknown(max_depth, vertices.len(), "depth budget exhausted");
            }
            if vertices.len() >= cfg.max_vertices {
                return unknown(max_depth, vertices.len(), "vertex budget exhausted");
            }
            if let Some(w) = search.classify(n.region(s), depth) {
                return Ok(BqVerdict::FailsBq(w));
            }
            max_depth = max_depth.max(depth);
            let idx = vertices.len();
            vertices.push(TreeVertex {
                regions: n.regions,
                traces: n.traces,
                depth,
            });
            index.insert(n.key(), idx);
            edges.push([k, idx]);
            queue.push_back(idx);
        }
    }

    let mut omega: Vec<Rational> = vertices
        .iter()
        .flat_map(|v| {
            (0..3)
                .filter(|&s| v.traces[s].norm() <= cfg.m)
                .map(move |s| v.regions[s])
        })
        .collect();
    omega.sort();
    omega.dedup();
    Ok(BqVerdict::SatisfiesBq(AttractingTree {
        m: cfg.m,
        boundary_budget: cfg.boundary_budget,
        vertices,
        edges,
        boundary,
        omega,
    }))
}

fn traces_match(a: &Trace, b: &Trace) -> bool {
    match (a, b) {
        (Trace::Escaped, Trace::Escaped) => true,
        (Trace::Finite(x), Trace::Finite(y)) => (x - y).norm() <= 1e-9 * (1.0 + y.norm()),
        _ => false,
    }
}

/// Recomputes every trace and orientation of `cert` from `base`.
pub fn validate_certificate(base: &TraceTriple, cert: &AttractingTree) -> bool {
    let n = cert.vertices.len();
    if n == 0 || cert.m.is_nan() || cert.m < 2.0 {
        return false;
    }
    let mut index: HashMap<[Rational; 3], usize> = HashMap::new();
    for (k, tv) in cert.vertices.iter().enumerate() {
        let [a, b, c] = tv.regions;
        if !(is_neighbour(&a, &b) && is_neighbour(&b, &c) && is_neighbour(&a, &c)) {
            return false;
        }
        for s in 0..3 {
            if !traces_match(&tv.traces[s], &region_trace(base, &tv.regions[s]))
                || in_interval(&tv.traces[s], 1e-9)
            {
                return false;
            }
        }
        if index.insert(tv.vertex().key(), k).is_some() {
            return false;
        }
    }

    // connectivity through declared edges, which must join adjacent vertices
    let mut adj = vec![Vec::new(); n];
    for &[p, q] in &cert.edges {
        if p >= n || q >= n {
            return false;
        }
        let shared = cert.vertices[p]
            .regions
            .iter()
            .filter(|r| cert.vertices[q].regions.contains(r))
            .count();
        if shared != 2 {
            return false;
        }
        adj[p].push(q);
        adj[q].push(p);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(k) = stack.pop() {
        for &q in &adj[k] {
            if !seen[q] {
                seen[q] = true;
                stack.push(q);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return false;
    }

    // every leaving edge has exactly one valid record
    let mut records: HashMap<(usize, usize), &BoundaryRecord> = HashMap::new();
    for rec in &cert.boundary {
        if rec.vertex >= n || rec.slot > 2 || records.insert((rec.vertex, rec.slot), rec).is_some()
        {
            return false;
        }
    }
    let mut leaving = 0;
    for (k, tv) in cert.vertices.iter().enumerate() {
        let v = tv.vertex();
        for s in 0..3 {
            if index.contains_key(&v.flip(s).key()) {
                continue;
            }
            leaving += 1;
            let Some(rec) = records.get(&(k, s)) else {
                return false;
            };
            let e = v.edge(s);
            if rec.direction != e.direction || !is_inward(&v, s) {
                return false;
            }
            match certify_wake(&v, s, cert.m, cert.boundary_budget) {
                Ok(small) if small == rec.small => {}
                _ => return false,
            }
        }
    }
    leaving == cert.boundary.len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FibonacciReport {
    pub level: usize,
    /// Largest `log⁺|φ| / (p+q)`.
    pub c_upper: f64,
    /// Smallest `log⁺|φ| / (p+q)` outside the exceptional layer.
    pub c_lower: f64,
    /// Regions outside the exceptional layer whose ratio is below the floor.
    pub violations: Vec<Rational>,
}

/// [`fibonacci_growth_report_with`] with the base layer (`p+q <= 2`) as the
/// exceptional set and floor `0.1`.
pub fn fibonacci_growth_report(base: &TraceTriple, level: usize) -> FibonacciReport {
    fibonacci_growth_report_with(base, level, 2, 0.1)
}

pub fn fibonacci_growth_report_with(
    base: &TraceTriple,
    level: usize,
    exceptional_level: usize,
    floor: f64,
) -> FibonacciReport {
    let mut regions = vec![Rational::ZERO, Rational::INFINITY, Rational::ONE];
    for r in crate::farey::rationals_up_to(level) {
        if !regions.contains(&r) {
            regions.push(r);
        }
    }
    let mut c_upper: f64 = 0.0;
    let mut c_lower = f64::INFINITY;
    let mut violations = Vec::new();
    for r in regions {
        let len = r.word_length() as f64;
        let ratio = region_trace(base, &r).norm().ln().max(0.0) / len;
        c_upper = c_upper.max(ratio);
        if r.word_length() > exceptional_level {
            c_lower = c_lower.min(ratio);
            if ratio < floor {
                violations.push(r);
            }
        }
    }
    FibonacciReport {
        level,
        c_upper,
        c_lower: if c_lower.is_finite() { c_lower } else { 0.0 },
        violations,
    }
}
