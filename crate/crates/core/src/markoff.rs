//! The trace-labelled Farey tree.
//!
//! A vertex of the tree is a Farey triangle `{u, v, w}` and carries the three
//! traces `(φ(u), φ(v), φ(w))`. Crossing the edge opposite `w` replaces it by
//! the other third region `z` with `φ(z) = φ(u)φ(v) - φ(w)`; the sum
//! `x² + y² + z² - xyz = μ` is the same at every vertex.
//!
//! Regions are addressed by their Farey label, so the same region reached
//! along different routes compares equal.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::farey::{
    mod2_type, stern_brocot_path, BasicPair, Mod2Type, Rational, Step, SternBrocot,
};

/// Moduli above this saturate to [`Trace::Escaped`].
pub const ESCAPE_BOUND: f64 = 1e150;

/// Relative tolerance below which two moduli count as equal when orienting
/// an edge.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarkoffError {
    #[error("region {region} has |trace| = {modulus} which is not above {bound}")]
    PreconditionViolated {
        region: Rational,
        modulus: f64,
        bound: f64,
    },
    #[error("no plughole of {0} within the search width")]
    NotFound(Rational),
    #[error("{0} is not in the wake of the edge")]
    NotInWake(Rational),
    #[error("descending path did not reach Ω(M) within the budget")]
    BudgetExhausted,
    #[error("pair type {0} equals the type of the starting region")]
    TypeMismatch(Mod2Type),
}

/// A trace value, or the absorbing sentinel for values that overflowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trace {
    Finite(Complex64),
    Escaped,
}

impl Trace {
    pub fn new(z: Complex64) -> Self {
        if z.norm() > ESCAPE_BOUND || !z.re.is_finite() || !z.im.is_finite() {
            Trace::Escaped
        } else {
            Trace::Finite(z)
        }
    }

    pub fn real(x: f64) -> Self {
        Trace::new(Complex64::new(x, 0.0))
    }

    pub fn norm(&self) -> f64 {
        match self {
            Trace::Finite(z) => z.norm(),
            Trace::Escaped => f64::INFINITY,
        }
    }

    pub fn finite(&self) -> Option<Complex64> {
        match self {
            Trace::Finite(z) => Some(*z),
            Trace::Escaped => None,
        }
    }

    pub fn is_escaped(&self) -> bool {
        matches!(self, Trace::Escaped)
    }

    /// `self * other - sub`, saturating.
    pub fn mul_sub(&self, other: &Trace, sub: &Trace) -> Trace {
        match (self, other, sub) {
            (Trace::Finite(a), Trace::Finite(b), Trace::Finite(c)) => Trace::new(a * b - c),
            _ => Trace::Escaped,
        }
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trace::Finite(z) if z.im == 0.0 => write!(f, "{}", z.re),
            Trace::Finite(z) => write!(f, "{}", z),
            Trace::Escaped => write!(f, "escaped"),
        }
    }
}

/// Traces of `(U, V, UV)` at a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceTriple {
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

impl TraceTriple {
    pub fn new(x: Complex64, y: Complex64, z: Complex64) -> Self {
        TraceTriple { x, y, z }
    }

    pub fn real(x: f64, y: f64, z: f64) -> Self {
        TraceTriple::new(x.into(), y.into(), z.into())
    }

    /// `x² + y² + z² - xyz`, always recomputed.
    pub fn mu(&self) -> Complex64 {
        mu_of(self)
    }

    /// The triple of the representation precomposed with `b ↦ b⁻¹`.
    pub fn mirrored(&self) -> Self {
        TraceTriple::new(self.x, self.y, self.x * self.y - self.z)
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.z]
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

pub fn mu_of(t: &TraceTriple) -> Complex64 {
    t.x * t.x + t.y * t.y + t.z * t.z - t.x * t.y * t.z
}

/// Vieta flip of one coordinate (`slot` is 1, 2 or 3).
pub fn neighbour_triple(t: &TraceTriple, slot: usize) -> TraceTriple {
    match slot {
        1 => TraceTriple::new(t.y * t.z - t.x, t.y, t.z),
        2 => TraceTriple::new(t.x, t.x * t.z - t.y, t.z),
        3 => TraceTriple::new(t.x, t.y, t.x * t.y - t.z),
        _ => panic!("slot must be 1, 2 or 3, got {slot}"),
    }
}

/// A region with its trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionRef {
    pub address: Rational,
    pub trace: Trace,
}

/// A vertex of the Farey tree with the traces of its three regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub regions: [Rational; 3],
    pub traces: [Trace; 3],
}

impl Vertex {
    /// The vertex `{0/1, 1/0, 1/1}` carrying `(x, y, z)`.
    pub fn root(base: &TraceTriple) -> Self {
        Vertex {
            regions: [Rational::ZERO, Rational::INFINITY, Rational::ONE],
            traces: [Trace::new(base.x), Trace::new(base.y), Trace::new(base.z)],
        }
    }

    /// The neighbouring vertex across the edge opposite `slot` (0-based).
    pub fn flip(&self, slot: usize) -> Vertex {
        let (i, j) = others(slot);
        let mut out = *self;
        out.regions[slot] =
            Rational::flip_third(&self.regions[i], &self.regions[j], &self.regions[slot]);
        out.traces[slot] = self.traces[i].mul_sub(&self.traces[j], &self.traces[slot]);
        out
    }

    /// Order-independent identity of the vertex.
    pub fn key(&self) -> [Rational; 3] {
        let mut k = self.regions;
        k.sort();
        k
    }

    pub fn slot_of(&self, r: &Rational) -> Option<usize> {
        self.regions.iter().position(|x| x == r)
    }

    pub fn region(&self, slot: usize) -> RegionRef {
        RegionRef {
            address: self.regions[slot],
            trace: self.traces[slot],
        }
    }

    /// The edge opposite `slot`, oriented by the trace rule.
    pub fn edge(&self, slot: usize) -> OrientedEdge {
        let (i, j) = others(slot);
        let n = self.flip(slot);
        let o = orient(&self.traces[i], &self.traces[j], &self.traces[slot]);
        OrientedEdge {
            adjacent: [self.region(i), self.region(j)],
            w: self.region(slot),
            z: n.region(slot),
            direction: o.direction,
            decisive: o.decisive,
        }
    }

    /// `x² + y² + z² - xyz` at this vertex, if all traces are finite.
    pub fn mu(&self) -> Option<Complex64> {
        let [a, b, c] = self.traces;
        Some(TraceTriple::new(a.finite()?, b.finite()?, c.finite()?).mu())
    }
}

pub(crate) fn others(slot: usize) -> (usize, usize) {
    match slot {
        0 => (1, 2),
        1 => (0, 2),
        2 => (0, 1),
        _ => panic!("vertex slot out of range: {slot}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    TowardW,
    TowardZ,
}

/// Result of orienting an edge from its traces alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    pub z: Trace,
    pub direction: Direction,
    pub decisive: bool,
}

/// Compares two moduli with the tie tolerance: `Less` means `a` is
/// decisively smaller.
pub fn compare_moduli(a: &Trace, b: &Trace) -> std::cmp::Ordering {
    use std::cmp::Ordering::*;
    match (a, b) {
        (Trace::Escaped, Trace::Escaped) => Equal,
        (Trace::Escaped, _) => Greater,
        (_, Trace::Escaped) => Less,
        (Trace::Finite(x), Trace::Finite(y)) => {
            let (nx, ny) = (x.norm(), y.norm());
            if (nx - ny).abs() <= TIE_TOLERANCE * (1.0 + nx.max(ny)) {
                Equal
            } else if nx < ny {
                Less
            } else {
                Greater
            }
        }
    }
}

fn orient(u: &Trace, v: &Trace, w: &Trace) -> Orientation {
    let z = u.mul_sub(v, w);
    match compare_moduli(&z, w) {
        std::cmp::Ordering::Less => Orientation {
            z,
            direction: Direction::TowardZ,
            decisive: true,
        },
        std::cmp::Ordering::Greater => Orientation {
            z,
            direction: Direction::TowardW,
            decisive: true,
        },
        std::cmp::Ordering::Equal => Orientation {
            z,
            direction: Direction::TowardW,
            decisive: false,
        },
    }
}

/// Orients the edge with adjacent traces `u, v` and end trace `w`; the other
/// end is `z = uv - w`. The arrow points to the end of smaller modulus; ties
/// point toward `w` and are flagged non-decisive.
pub fn orient_edge(u: Complex64, v: Complex64, w: Complex64) -> Orientation {
    orient(&Trace::new(u), &Trace::new(v), &Trace::new(w))
}

/// An edge of the tree with its arrow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedEdge {
    pub adjacent: [RegionRef; 2],
    pub w: RegionRef,
    pub z: RegionRef,
    pub direction: Direction,
    pub decisive: bool,
}

impl OrientedEdge {
    /// Third region at the head vertex.
    pub fn head(&self) -> &RegionRef {
        match self.direction {
            Direction::TowardW => &self.w,
            Direction::TowardZ => &self.z,
        }
    }

    /// Third region at the tail vertex.
    pub fn tail(&self) -> &RegionRef {
        match self.direction {
            Direction::TowardW => &self.z,
            Direction::TowardZ => &self.w,
        }
    }
}

/// A vertex containing `r`: the Farey triangle in which `r` is the mediant,
/// or the root for the three base regions.
pub fn vertex_of(base: &TraceTriple, r: &Rational) -> Vertex {
    let (negative, steps) = match stern_brocot_path(r) {
        SternBrocot::Zero | SternBrocot::Infinity => return Vertex::root(base),
        SternBrocot::Path { negative, steps } => (negative, steps),
    };
    let t = if negative { base.mirrored() } else { *base };
    let (mut lo, mut hi) = (Rational::ZERO, Rational::INFINITY);
    let (mut lo_t, mut hi_t) = (Trace::new(t.x), Trace::new(t.y));
    let mut m_t = Trace::new(t.z);
    for step in &steps {
        let m = lo.vec_add(&hi);
        match step {
            Step::Left => {
                let next = lo_t.mul_sub(&m_t, &hi_t);
                hi = m;
                hi_t = m_t;
                m_t = next;
            }
            Step::Right => {
                let next = m_t.mul_sub(&hi_t, &lo_t);
                lo = m;
                lo_t = m_t;
                m_t = next;
            }
        }
    }
    let m = lo.vec_add(&hi);
    let fix = |x: Rational| if negative { x.negate() } else { x };
    Vertex {
        regions: [fix(lo), fix(hi), fix(m)],
        traces: [lo_t, hi_t, m_t],
    }
}

/// `φ(r)`, replayed along the Stern–Brocot path from the base triple.
pub fn region_trace(base: &TraceTriple, r: &Rational) -> Trace {
    let v = vertex_of(base, r);
    v.traces[v.slot_of(r).expect("vertex_of contains its region")]
}

/// Closed form `y_j = A λ^j + B λ^{-j}` of the boundary sequence of a region
/// with trace `u`, fitted to `y_0, y_1`. Only defined when `|λ| > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFit {
    pub lambda: Complex64,
    pub a: Complex64,
    pub b: Complex64,
}

impl BoundaryFit {
    pub fn new(u: Complex64, y0: Complex64, y1: Complex64) -> Option<Self> {
        let disc = (u * u - 4.0).sqrt();
        let mut lambda = (u + disc) / 2.0;
        if lambda.norm() < 1.0 {
            lambda = (u - disc) / 2.0;
        }
        if lambda.norm() <= 1.0 + 1e-12 {
            return None;
        }
        let inv = 1.0 / lambda;
        let denom = lambda - inv;
        let a = (y1 - y0 * inv) / denom;
        let b = (y0 * lambda - y1) / denom;
        Some(BoundaryFit { lambda, a, b })
    }

    pub fn value(&self, j: i32) -> Complex64 {
        self.a * self.lambda.powi(j) + self.b * self.lambda.powi(-j)
    }

    /// Lower bound of `|y_j|` valid for every `j >= 1`, from the bound at
    /// `j = 1` (it increases with `j`).
    pub fn forward_floor(&self) -> f64 {
        let r = self.lambda.norm();
        self.a.norm() * r - self.b.norm() / r
    }

    /// Sufficient condition for `|y_{j+1}| > |y_{j-1}|` for every `j >= 1`.
    pub fn forward_increasing(&self) -> bool {
        let r2 = self.lambda.norm_sqr();
        self.a.norm() * r2 * (r2 - 1.0) > self.b.norm() * (r2 + 1.0) * (1.0 + 1e-9)
    }
}

/// Certifies that the boundary sequence of a region with trace `u`, given
/// consecutive values `(y_0, y_1)`, satisfies `|y_j| > floor` and
/// `|y_{j+1}| > |y_{j-1}|` for every `j >= 1`. Checks numerically for up to
/// `max_steps` terms, then needs the closed form to take over.
pub fn boundary_tail_certified(
    u: &Trace,
    y0: &Trace,
    y1: &Trace,
    floor: f64,
    max_steps: usize,
) -> bool {
    let Some(u) = u.finite() else {
        return false;
    };
    let (mut prev, mut cur) = (*y0, *y1);
    for _ in 0..max_steps {
        if let (Some(p), Some(c)) = (prev.finite(), cur.finite()) {
            if let Some(fit) = BoundaryFit::new(u, p, c) {
                if fit.forward_increasing() && fit.forward_floor() > floor * (1.0 + 1e-9) {
                    return true;
                }
            }
        }
        let next = Trace::Finite(u).mul_sub(&cur, &prev);
        if cur.norm() <= floor || compare_moduli(&next, &prev) != std::cmp::Ordering::Greater {
            return false;
        }
        if next.is_escaped() {
            // Saturated values stay above every finite floor.
            return true;
        }
        prev = cur;
        cur = next;
    }
    false
}

/// Walks the regions `y_i` adjacent to a region `u` around its boundary.
#[derive(Debug, Clone)]
pub struct BoundaryWalk {
    u: RegionRef,
    prev: RegionRef,
    cur: RegionRef,
}

impl BoundaryWalk {
    /// Starts at a vertex `{u, prev, cur}`, walking from `prev` toward `cur`.
    pub fn new(u: RegionRef, prev: RegionRef, cur: RegionRef) -> Self {
        BoundaryWalk { u, prev, cur }
    }

    pub fn current(&self) -> (&RegionRef, &RegionRef) {
        (&self.prev, &self.cur)
    }
}

impl Iterator for BoundaryWalk {
    type Item = RegionRef;

    fn next(&mut self) -> Option<RegionRef> {
        let address = Rational::flip_third(&self.u.address, &self.cur.address, &self.prev.address);
        let trace = self.u.trace.mul_sub(&self.cur.trace, &self.prev.trace);
        let next = RegionRef { address, trace };
        self.prev = self.cur;
        self.cur = next;
        Some(next)
    }
}

/// Outcome of [`enumerate_omega`].
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaSet {
    pub regions: Vec<RegionRef>,
    /// True when the enumeration provably contains every region of `Ω(m)`.
    pub complete: bool,
}

/// Regions with `|φ| <= m`, found by walking region boundaries from seeds at
/// the root and along the descent to a sink. `budget` bounds the total number
/// of boundary steps.
pub fn enumerate_omega(base: &TraceTriple, m: f64, budget: usize) -> OmegaSet {
    let root = Vertex::root(base);
    let sink = find_sink(base, &root, budget.max(1));
    let mut seeds: Vec<Vertex> = vec![root];
    seeds.extend(sink.path.iter().copied());

    let mut found: BTreeMap<Rational, (RegionRef, Vertex)> = BTreeMap::new();
    for v in &seeds {
        for s in 0..3 {
            if v.traces[s].norm() <= m {
                found.entry(v.regions[s]).or_insert((v.region(s), *v));
            }
        }
    }

    if found.is_empty() {
        // Every edge at a strict sink points in and its adjacent traces exceed
        // m >= 2, so every wake stays above m.
        let complete = match &sink.outcome {
            SinkOutcome::Found(v) => {
                m >= 2.0
                    && v.traces.iter().all(|t| t.norm() > m)
                    && (0..3).all(|s| {
                        let e = v.edge(s);
                        e.decisive && e.direction == Direction::TowardW
                    })
            }
            SinkOutcome::Unknown => false,
        };
        return OmegaSet {
            regions: Vec::new(),
            complete,
        };
    }

    let mut steps_left = budget;
    let mut complete = true;
    let mut queue: VecDeque<Rational> = found.keys().copied().collect();
    let mut done: HashSet<Rational> = HashSet::new();
    while let Some(r) = queue.pop_front() {
        if !done.insert(r) {
            continue;
        }
        let (u, anchor) = found[&r];
        let s = anchor.slot_of(&r).expect("anchor contains region");
        let (i, j) = others(s);
        for (a, b) in [(i, j), (j, i)] {
            let mut walk = BoundaryWalk::new(u, anchor.region(a), anchor.region(b));
            // the two anchor neighbours themselves
            for y in [anchor.region(a), anchor.region(b)] {
                if y.trace.norm() <= m && !found.contains_key(&y.address) {
                    let v = Vertex {
                        regions: [u.address, anchor.regions[a], anchor.regions[b]],
                        traces: [u.trace, anchor.traces[a], anchor.traces[b]],
                    };
                    found.insert(y.address, (y, v));
                    queue.push_back(y.address);
                }
            }
            loop {
                let (prev, cur) = walk.current();
                let settled = cur.trace.norm() > m
                    && match (u.trace.finite(), prev.trace.finite(), cur.trace.finite()) {
                        (Some(uu), Some(p), Some(c)) => {
                            BoundaryFit::new(uu, p, c).is_some_and(|f| f.forward_floor() > m)
                        }
                        _ => cur.trace.is_escaped(),
                    };
                if settled {
                    break;
                }
                if steps_left == 0 {
                    complete = false;
                    break;
                }
                steps_left -= 1;
                let prev = *walk.current().1;
                let y = walk.next().expect("infinite walk");
                if y.trace.norm() <= m && !found.contains_key(&y.address) {
                    let v = Vertex {
                        regions: [u.address, prev.address, y.address],
                        traces: [u.trace, prev.trace, y.trace],
                    };
                    found.insert(y.address, (y, v));
                    queue.push_back(y.address);
                }
            }
        }
    }
    OmegaSet {
        regions: found.into_values().map(|(r, _)| r).collect(),
        complete,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SinkOutcome {
    /// A vertex with no decisive outgoing arrow.
    Found(Vertex),
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinkSearch {
    pub outcome: SinkOutcome,
    /// Every vertex visited, starting with `start`.
    pub path: Vec<Vertex>,
    /// Smallest trace modulus seen along the path.
    pub min_trace: f64,
}

/// The decisive descent from `v` with the smallest new trace, if any.
pub fn steepest_descent(v: &Vertex) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for s in 0..3 {
        let e = v.edge(s);
        if e.decisive && e.direction == Direction::TowardZ {
            let n = e.z.trace.norm();
            if best.is_none_or(|(_, b)| n < b) {
                best = Some((s, n));
            }
        }
    }
    best.map(|(s, _)| s)
}

/// Follows decisively decreasing arrows from `start` for at most `budget`
/// steps.
pub fn find_sink(_base: &TraceTriple, start: &Vertex, budget: usize) -> SinkSearch {
    let mut path = vec![*start];
    let mut min_trace = start
        .traces
        .iter()
        .map(Trace::norm)
        .fold(f64::INFINITY, f64::min);
    let mut v = *start;
    for _ in 0..budget {
        match steepest_descent(&v) {
            None => {
                return SinkSearch {
                    outcome: SinkOutcome::Found(v),
                    path,
                    min_trace,
                }
            }
            Some(s) => {
                v = v.flip(s);
                min_trace = min_trace.min(v.traces[s].norm());
                path.push(v);
            }
        }
    }
    SinkSearch {
        outcome: SinkOutcome::Unknown,
        path,
        min_trace,
    }
}

/// Finds a plughole of `region`: a boundary vertex where the two boundary
/// arrows meet, whose third edge points out of the region. Boundary
/// positions are scanned outward from the region's anchor vertex, up to
/// `search_width` on each side.
pub fn plughole(
    base: &TraceTriple,
    region: &Rational,
    bound: f64,
    search_width: usize,
) -> Result<OrientedEdge, MarkoffError> {
    let anchor = vertex_of(base, region);
    let s = anchor.slot_of(region).expect("anchor contains region");
    let u = anchor.region(s);
    if u.trace.norm() <= bound {
        return Err(MarkoffError::PreconditionViolated {
            region: *region,
            modulus: u.trace.norm(),
            bound,
        });
    }
    let (i, j) = others(s);
    // y[k] holds y_{k - off}; y_0 = anchor i, y_1 = anchor j.
    let w = search_width as i64;
    let off = w + 1;
    let mut fwd: Vec<RegionRef> = vec![anchor.region(i), anchor.region(j)];
    fwd.extend(BoundaryWalk::new(u, anchor.region(i), anchor.region(j)).take(search_width + 1));
    let back: Vec<RegionRef> = BoundaryWalk::new(u, anchor.region(j), anchor.region(i))
        .take(search_width + 1)
        .collect();
    let mut y: Vec<RegionRef> = back.into_iter().rev().collect();
    y.extend(fwd);
    let at = |k: i64| y[(k + off) as usize];

    use std::cmp::Ordering::Less;
    let mut order = vec![0i64];
    for d in 1..=w {
        order.push(-d);
        order.push(d);
    }
    for r in order {
        let (ym, y0, y1, y2) = (at(r - 1), at(r), at(r + 1), at(r + 2));
        let heads_meet = compare_moduli(&y1.trace, &ym.trace) == Less
            && compare_moduli(&y0.trace, &y2.trace) == Less;
        if !heads_meet {
            continue;
        }
        let q = Vertex {
            regions: [y0.address, y1.address, u.address],
            traces: [y0.trace, y1.trace, u.trace],
        };
        let e = q.edge(2);
        if e.decisive && e.direction == Direction::TowardZ {
            return Ok(e);
        }
    }
    Err(MarkoffError::NotFound(*region))
}

fn ccw_between(a: &Rational, x: &Rational, b: &Rational) -> bool {
    if a < b {
        a < x && x < b
    } else {
        x > a || x < b
    }
}

/// `x` lies in the open arc of the projective line from `a` to `b` that
/// contains `through`.
fn in_arc(a: &Rational, b: &Rational, through: &Rational, x: &Rational) -> bool {
    if ccw_between(a, through, b) {
        ccw_between(a, x, b)
    } else {
        ccw_between(b, x, a)
    }
}

/// True iff `region` is one of the two regions adjacent to `edge` or lies on
/// its tail side.
pub fn in_wake(edge: &OrientedEdge, region: &Rational) -> bool {
    let [u, v] = edge.adjacent;
    if *region == u.address || *region == v.address {
        return true;
    }
    in_arc(&u.address, &v.address, &edge.tail().address, region)
}

/// Fibonacci weight of a region in the wake of `edge`: 1 on the adjacent
/// regions, otherwise the sum over the two neighbours closer to the edge.
pub fn fib_weight(edge: &OrientedEdge, region: &Rational) -> Result<u64, MarkoffError> {
    if !in_wake(edge, region) {
        return Err(MarkoffError::NotInWake(*region));
    }
    let [u, v] = edge.adjacent;
    let (mut l, mut r) = (u.address, v.address);
    let (mut wl, mut wr) = (1u64, 1u64);
    let mut m = edge.tail().address;
    loop {
        if *region == l {
            return Ok(wl);
        }
        if *region == r {
            return Ok(wr);
        }
        let wm = wl.saturating_add(wr);
        if *region == m {
            return Ok(wm);
        }
        if in_arc(&l, &m, &Rational::flip_third(&l, &m, &r), region) {
            let next = Rational::flip_third(&l, &m, &r);
            r = m;
            wr = wm;
            m = next;
        } else {
            let next = Rational::flip_third(&m, &r, &l);
            l = m;
            wl = wm;
            m = next;
        }
    }
}

/// A path `u_0 = from, ..., u_k` of neighbouring regions leaving each `u_i`
/// through a plughole, alternating between the type of `from` and
/// `pair_type`, and stopping at the first region with `|φ| <= bound`.
pub fn descending_path(
    base: &TraceTriple,
    from: &Rational,
    bound: f64,
    pair_type: Mod2Type,
    budget: usize,
) -> Result<Vec<RegionRef>, MarkoffError> {
    let start_type = mod2_type(from);
    if start_type == pair_type {
        return Err(MarkoffError::TypeMismatch(pair_type));
    }
    let pair = BasicPair::from_types(start_type, pair_type).expect("distinct types");
    let mut path = vec![RegionRef {
        address: *from,
        trace: region_trace(base, from),
    }];
    for _ in 0..=budget {
        let cur = *path.last().expect("nonempty");
        if cur.trace.norm() <= bound {
            return Ok(path);
        }
        let e = plughole(base, &cur.address, bound, budget.max(8))?;
        let cur_type = mod2_type(&cur.address);
        let next = e
            .adjacent
            .into_iter()
            .find(|r| {
                let t = mod2_type(&r.address);
                t != cur_type && pair.contains(t)
            })
            .expect("a Farey triangle realises all three types");
        path.push(next);
    }
    Err(MarkoffError::BudgetExhausted)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q).unwrap()
    }

    fn t3() -> TraceTriple {
        TraceTriple::real(3.0, 3.0, 3.0)
    }

    fn re(t: Trace) -> f64 {
        t.finite().unwrap().re
    }

    #[test]
    fn mu_examples() {
        assert_eq!(mu_of(&t3()), Complex64::new(0.0, 0.0));
        assert_eq!(
            mu_of(&TraceTriple::real(0.0, 0.0, 0.0)),
            Complex64::new(0.0, 0.0)
        );
        assert_eq!(
            mu_of(&TraceTriple::real(2.0, 2.0, 2.0)),
            Complex64::new(4.0, 0.0)
        );
    }

    #[test]
    fn neighbour_examples() {
        assert_eq!(neighbour_triple(&t3(), 3), TraceTriple::real(3.0, 3.0, 6.0));
        assert_eq!(
            neighbour_triple(&TraceTriple::real(1.0, 1.0, 1.0), 3),
            TraceTriple::real(1.0, 1.0, 0.0)
        );
        let t = TraceTriple::new(
            Complex64::new(1.5, 0.3),
            Complex64::new(-2.0, 1.0),
            Complex64::new(0.7, -0.2),
        );
        for s in 1..=3 {
            let back = neighbour_triple(&neighbour_triple(&t, s), s);
            assert!((back.x - t.x).norm() + (back.y - t.y).norm() + (back.z - t.z).norm() < 1e-12);
        }
    }

    #[test]
    fn orientation_examples() {
        let o = orient_edge(3.0.into(), 3.0.into(), 3.0.into());
        assert_eq!(re(o.z), 6.0);
        assert_eq!(o.direction, Direction::TowardW);
        assert!(o.decisive);

        let w = Complex64::new(0.4, 1.1);
        let o = orient_edge(0.0.into(), Complex64::new(2.0, 5.0), w);
        assert!(!o.decisive);

        let o = orient_edge(2.0.into(), 2.0.into(), 2.0.into());
        assert_eq!(re(o.z), 2.0);
        assert!(!o.decisive);
        assert_eq!(o.direction, Direction::TowardW);
    }

    #[test]
    fn region_trace_examples() {
        let b = t3();
        assert_eq!(re(region_trace(&b, &r(1, 1))), 3.0);
        assert_eq!(re(region_trace(&b, &r(1, 2))), 6.0);
        assert_eq!(re(region_trace(&b, &r(1, 3))), 15.0);
        // 2/5 = 1/3 ⊕ 1/2 : 15 * 6 - 3
        assert_eq!(re(region_trace(&b, &r(2, 5))), 87.0);
        assert_eq!(re(region_trace(&b, &r(-1, 1))), 6.0);
    }

    #[test]
    fn vertex_flip_keeps_mu() {
        let b = TraceTriple::new(
            Complex64::new(2.1, 0.4),
            Complex64::new(1.3, -0.9),
            Complex64::new(-0.5, 2.2),
        );
        let mu = b.mu();
        let mut v = Vertex::root(&b);
        for s in [0, 1, 2, 0, 2, 1, 1, 0] {
            v = v.flip(s);
            let m = v.mu().unwrap();
            let n: Vec<f64> = v.traces.iter().map(Trace::norm).collect();
            let scale = n.iter().map(|x| x * x).sum::<f64>() + n[0] * n[1] * n[2];
            assert!((m - mu).norm() <= 1e-12 * (1.0 + scale));
        }
    }

    #[test]
    fn escaped_saturates() {
        let t = Trace::new(Complex64::new(1e200, 0.0));
        assert!(t.is_escaped());
        assert!(Trace::real(2.0).mul_sub(&t, &Trace::real(1.0)).is_escaped());
        assert_eq!(
            compare_moduli(&Trace::Escaped, &Trace::real(1e100)),
            std::cmp::Ordering::Greater
        );
    }

    #[test]
    fn omega_examples() {
        let o = enumerate_omega(&t3(), 3.0, 100);
        assert!(o.complete);
        let mut got: Vec<_> = o.regions.iter().map(|x| x.address).collect();
        got.sort();
        assert_eq!(got, vec![r(0, 1), r(1, 1), r(1, 0)]);

        let o = enumerate_omega(&t3(), 2.0, 100);
        assert!(o.complete);
        assert!(o.regions.is_empty());

        let o = enumerate_omega(&TraceTriple::real(1.0, 1.0, 1.0), 2.0, 100);
        assert!(!o.complete);
    }

    #[test]
    fn sink_examples() {
        let b = t3();
        let root = Vertex::root(&b);
        let s = find_sink(&b, &root, 10);
        assert_eq!(s.outcome, SinkOutcome::Found(root));
        assert_eq!(find_sink(&b, &root, 0).outcome, SinkOutcome::Unknown);

        // five flips out along 1/1 -> 1/2 -> 1/3 -> ...
        let mut v = root;
        let mut slot = 1;
        for _ in 0..5 {
            v = v.flip(slot);
            slot = if slot == 1 { 2 } else { 1 };
        }
        let s = find_sink(&b, &v, 20);
        match s.outcome {
            SinkOutcome::Found(sink) => assert_eq!(sink.key(), root.key()),
            SinkOutcome::Unknown => panic!("expected sink"),
        }
        assert_eq!(s.min_trace, 3.0);
    }

    #[test]
    fn plughole_examples() {
        let b = t3();
        let e = plughole(&b, &r(1, 2), 3.0, 8).unwrap();
        let mut adj: Vec<_> = e.adjacent.iter().map(|x| x.address).collect();
        adj.sort();
        assert_eq!(adj, vec![r(0, 1), r(1, 1)]);
        assert_eq!(e.tail().address, r(1, 2));
        assert_eq!(e.head().address, r(1, 0));
        assert!(matches!(
            plughole(&b, &r(0, 1), 3.0, 8),
            Err(MarkoffError::PreconditionViolated { .. })
        ));
    }

    #[test]
    fn plughole_at_generic_point() {
        let b = TraceTriple::new(
            Complex64::new(2.6, 0.4),
            Complex64::new(3.1, -0.3),
            Complex64::new(2.9, 0.8),
        );
        let target = r(5, 13);
        assert!(region_trace(&b, &target).norm() > 3.0);
        let e = plughole(&b, &target, 3.0, 16).unwrap();
        assert_eq!(e.tail().address, target);
        assert!(e.decisive);
        assert!(e.head().trace.norm() < e.tail().trace.norm());
    }

    #[test]
    fn wake_and_weights() {
        let b = t3();
        // Edge between 0/1 and 1/1, oriented toward 1/0 (the root side).
        let root = Vertex::root(&b);
        let e = root.edge(1);
        assert_eq!(e.head().address, r(1, 0));
        assert!(in_wake(&e, &r(0, 1)));
        assert!(in_wake(&e, &r(1, 1)));
        assert!(!in_wake(&e, &r(2, 1)));
        assert!(!in_wake(&e, &r(1, 0)));
        assert!(in_wake(&e, &r(3, 7)));
        assert_eq!(fib_weight(&e, &r(0, 1)).unwrap(), 1);
        assert_eq!(fib_weight(&e, &r(1, 2)).unwrap(), 2);
        assert_eq!(fib_weight(&e, &r(1, 3)).unwrap(), 3);
        assert_eq!(fib_weight(&e, &r(2, 3)).unwrap(), 3);
        assert_eq!(fib_weight(&e, &r(2, 5)).unwrap(), 5);
        assert!(matches!(
            fib_weight(&e, &r(2, 1)),
            Err(MarkoffError::NotInWake(_))
        ));
    }

    #[test]
    fn descending_examples() {
        let b = t3();
        let p = descending_path(&b, &r(1, 3), 3.0, Mod2Type::OneZero, 20).unwrap();
        let got: Vec<_> = p.iter().map(|x| (x.address, re(x.trace))).collect();
        assert_eq!(got, vec![(r(1, 3), 15.0), (r(1, 2), 6.0), (r(1, 1), 3.0)]);

        let p = descending_path(&b, &r(0, 1), 3.0, Mod2Type::OneZero, 20).unwrap();
        assert_eq!(p.len(), 1);

        let one = TraceTriple::real(1.0, 1.0, 1.0);
        let p = descending_path(&one, &r(0, 1), 2.0, Mod2Type::OneZero, 5).unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn boundary_fit_matches_recurrence() {
        let u = Complex64::new(2.5, 0.7);
        let (y0, y1) = (Complex64::new(1.0, 2.0), Complex64::new(-0.3, 0.4));
        let fit = BoundaryFit::new(u, y0, y1).unwrap();
        let (mut p, mut c) = (y0, y1);
        for j in 2..10 {
            let n = u * c - p;
            assert!((fit.value(j) - n).norm() < 1e-9 * (1.0 + n.norm()));
            p = c;
            c = n;
        }
        assert!(BoundaryFit::new(Complex64::new(1.0, 0.0), y0, y1).is_none());
    }
}
