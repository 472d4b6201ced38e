//! Matrices in SL(2,C) and the geometry of upper half-space H³.
//!
//! Points of H³ are pairs `(w, t)` with `w` complex and height `t > 0`; the
//! base point is `O = (0, 1)`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::farey::{Letter, Word};
use crate::markoff::TraceTriple;

/// Relative tolerance for the identity, parabolic and shared-endpoint tests.
pub const GEOM_TOL: f64 = 1e-10;

/// Threshold on `Re λ` beyond which the length/trace comparison holds.
pub const L0: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("the triple has μ = 4 and lifts to a reducible representation")]
    ElementaryRepresentation,
    #[error("non-finite trace input")]
    NonFinite,
    #[error("matrix is ±identity")]
    IdentityMatrix,
    #[error("parabolic matrix has no axis")]
    ParabolicNoAxis,
    #[error("geodesics share an endpoint")]
    SharedEndpoint,
    #[error("geodesic endpoints coincide")]
    DegenerateGeodesic,
    #[error("matrix is not loxodromic")]
    NonLoxodromic,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoebiusMatrix {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl MoebiusMatrix {
    pub const IDENTITY: MoebiusMatrix = MoebiusMatrix {
        a: Complex64::new(1.0, 0.0),
        b: Complex64::new(0.0, 0.0),
        c: Complex64::new(0.0, 0.0),
        d: Complex64::new(1.0, 0.0),
    };

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        MoebiusMatrix { a, b, c, d }
    }

    pub fn diagonal(l: Complex64) -> Self {
        MoebiusMatrix::new(l, c(0.0, 0.0), c(0.0, 0.0), 1.0 / l)
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    /// Rescales to determinant 1.
    pub fn normalised(&self) -> Self {
        let s = self.det().sqrt();
        MoebiusMatrix::new(self.a / s, self.b / s, self.c / s, self.d / s)
    }

    /// Adjugate; the inverse when `det = 1`.
    pub fn inverse(&self) -> Self {
        MoebiusMatrix::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn mul(&self, o: &MoebiusMatrix) -> Self {
        MoebiusMatrix::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn is_plus_minus_identity(&self) -> bool {
        let scale = 1.0 + self.a.norm().max(self.d.norm());
        self.b.norm() <= GEOM_TOL * scale
            && self.c.norm() <= GEOM_TOL * scale
            && (self.a - self.d).norm() <= GEOM_TOL * scale
    }

    /// Action on the Riemann sphere.
    pub fn apply_endpoint(&self, e: &Endpoint) -> Endpoint {
        match e {
            Endpoint::Infinity => {
                if self.c == c(0.0, 0.0) {
                    Endpoint::Infinity
                } else {
                    Endpoint::Finite(self.a / self.c)
                }
            }
            Endpoint::Finite(z) => {
                let den = self.c * z + self.d;
                if den == c(0.0, 0.0) {
                    Endpoint::Infinity
                } else {
                    Endpoint::Finite((self.a * z + self.b) / den)
                }
            }
        }
    }
}

impl fmt::Display for MoebiusMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// Generator images `A = ρ(a)`, `B = ρ(b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lift {
    pub a: MoebiusMatrix,
    pub b: MoebiusMatrix,
    /// `z = ±2`: the quadratic for ζ has a double root.
    pub degenerate: bool,
}

/// Normal form `A = [[x, 1], [-1, 0]]`, `B = [[0, ζ], [-1/ζ, y]]` with
/// `ζ² + zζ + 1 = 0`, `|ζ| <= 1`.
pub fn lift_representation(t: &TraceTriple) -> Result<Lift, GeomError> {
    if !t.is_finite() {
        return Err(GeomError::NonFinite);
    }
    let mu = t.mu();
    if (mu - 4.0).norm() <= 1e-9 * (1.0 + mu.norm()) {
        return Err(GeomError::ElementaryRepresentation);
    }
    let disc = (t.z * t.z - 4.0).sqrt();
    let r1 = (-t.z + disc) / 2.0;
    let r2 = (-t.z - disc) / 2.0;
    let (n1, n2) = (r1.norm(), r2.norm());
    let zeta = if (n1 - n2).abs() <= 1e-12 * (1.0 + n1.max(n2)) {
        if r1.im >= r2.im {
            r1
        } else {
            r2
        }
    } else if n1 < n2 {
        r1
    } else {
        r2
    };
    let degenerate = disc.norm() <= 1e-9 * (1.0 + t.z.norm());
    Ok(Lift {
        a: MoebiusMatrix::new(t.x, c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)),
        b: MoebiusMatrix::new(c(0.0, 0.0), zeta, -1.0 / zeta, t.y),
        degenerate,
    })
}

/// Ordered product of the letter images, left to right.
pub fn evaluate_word(w: &Word, a: &MoebiusMatrix, b: &MoebiusMatrix) -> MoebiusMatrix {
    let (ai, bi) = (a.inverse(), b.inverse());
    w.letters().iter().fold(MoebiusMatrix::IDENTITY, |acc, l| {
        acc.mul(match l {
            Letter::A => a,
            Letter::AInv => &ai,
            Letter::B => b,
            Letter::BInv => &bi,
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H3Point {
    pub w: Complex64,
    pub t: f64,
}

impl H3Point {
    pub const O: H3Point = H3Point {
        w: Complex64::new(0.0, 0.0),
        t: 1.0,
    };

    pub fn new(w: Complex64, t: f64) -> Self {
        assert!(t > 0.0, "height must be positive, got {t}");
        H3Point { w, t }
    }
}

/// Poincaré extension of the Möbius action.
pub fn apply_moebius(m: &MoebiusMatrix, p: &H3Point) -> H3Point {
    let cw_d = m.c * p.w + m.d;
    let t2 = p.t * p.t;
    let den = cw_d.norm_sqr() + m.c.norm_sqr() * t2;
    let w = ((m.a * p.w + m.b) * cw_d.conj() + m.a * m.c.conj() * t2) / den;
    H3Point { w, t: p.t / den }
}

pub fn h3_distance(p: &H3Point, q: &H3Point) -> f64 {
    let dw = (p.w - q.w).norm_sqr();
    let dt = p.t - q.t;
    2.0 * ((dw + dt * dt).sqrt() / (2.0 * (p.t * q.t).sqrt())).asinh()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IsometryKind {
    Loxodromic,
    Parabolic,
    Elliptic,
}

/// Half the complex length: `Tr = 2 cosh(lambda)`, `Re lambda >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexLength {
    pub lambda: Complex64,
    pub kind: IsometryKind,
}

impl ComplexLength {
    /// Real translation length `2 Re lambda`.
    pub fn ell(&self) -> f64 {
        2.0 * self.lambda.re
    }
}

pub fn complex_half_length(m: &MoebiusMatrix) -> Result<ComplexLength, GeomError> {
    if m.is_plus_minus_identity() {
        return Err(GeomError::IdentityMatrix);
    }
    let tr = m.trace();
    let mut lambda = (tr / 2.0).acosh();
    if lambda.re < 0.0 {
        lambda = -lambda;
    }
    let kind = if (tr * tr - 4.0).norm() <= GEOM_TOL * (1.0 + tr.norm_sqr()) {
        lambda = c(0.0, lambda.im);
        IsometryKind::Parabolic
    } else if tr.im.abs() <= GEOM_TOL * (1.0 + tr.norm()) && tr.re.abs() < 2.0 {
        IsometryKind::Elliptic
    } else {
        IsometryKind::Loxodromic
    };
    Ok(ComplexLength { lambda, kind })
}

/// A point of `C ∪ {∞}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Endpoint {
    Finite(Complex64),
    Infinity,
}

impl Endpoint {
    pub fn approx_eq(&self, o: &Endpoint) -> bool {
        match (self, o) {
            (Endpoint::Infinity, Endpoint::Infinity) => true,
            (Endpoint::Finite(a), Endpoint::Finite(b)) => {
                (a - b).norm() <= GEOM_TOL * (1.0 + a.norm().max(b.norm()))
            }
            _ => false,
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Finite(z) => write!(f, "{z}"),
            Endpoint::Infinity => write!(f, "∞"),
        }
    }
}

/// A geodesic given by its ideal endpoints. Axes are returned ordered from
/// the repelling to the attracting fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geodesic {
    pub ends: [Endpoint; 2],
}

impl Geodesic {
    pub fn new(p: Endpoint, q: Endpoint) -> Result<Self, GeomError> {
        if p.approx_eq(&q) {
            return Err(GeomError::DegenerateGeodesic);
        }
        Ok(Geodesic { ends: [p, q] })
    }

    pub fn finite(p: Complex64, q: Complex64) -> Result<Self, GeomError> {
        Geodesic::new(Endpoint::Finite(p), Endpoint::Finite(q))
    }

    pub fn image(&self, m: &MoebiusMatrix) -> Geodesic {
        Geodesic {
            ends: [
                m.apply_endpoint(&self.ends[0]),
                m.apply_endpoint(&self.ends[1]),
            ],
        }
    }

    /// A point on the geodesic, `s` the signed arclength from the top of
    /// the semicircle (or from height 1 on a vertical line).
    pub fn point_at(&self, s: f64) -> H3Point {
        let n = frame_to_vertical(self).inverse();
        apply_moebius(&n, &H3Point::new(c(0.0, 0.0), s.exp()))
    }

    pub fn shares_endpoint(&self, o: &Geodesic) -> bool {
        self.ends
            .iter()
            .any(|e| o.ends.iter().any(|f| e.approx_eq(f)))
    }
}

/// Fixed points `(repelling, attracting)`; elliptic axes keep root order.
pub fn axis(m: &MoebiusMatrix) -> Result<Geodesic, GeomError> {
    if m.is_plus_minus_identity() {
        return Err(GeomError::IdentityMatrix);
    }
    let tr = m.trace();
    if (tr * tr - 4.0).norm() <= GEOM_TOL * (1.0 + tr.norm_sqr()) {
        return Err(GeomError::ParabolicNoAxis);
    }
    let s = (tr * tr - 4.0).sqrt();
    let dma = m.d - m.a;
    let q1 = -(dma + s) / 2.0;
    let q2 = -(dma - s) / 2.0;
    let q = if q1.norm() >= q2.norm() { q1 } else { q2 };
    let zero = c(0.0, 0.0);
    let p1 = if m.c == zero {
        Endpoint::Infinity
    } else {
        Endpoint::Finite(q / m.c)
    };
    let p2 = Endpoint::Finite(-m.b / q);
    let attracting = |e: &Endpoint| match e {
        Endpoint::Infinity => m.a.norm() > m.d.norm(),
        Endpoint::Finite(w) => (m.c * w + m.d).norm() > 1.0,
    };
    let (p, r) = if attracting(&p1) && !attracting(&p2) {
        (p2, p1)
    } else {
        (p1, p2)
    };
    Geodesic::new(p, r)
}

/// A determinant-one matrix taking `g` to the vertical line `(0, ∞)`, with
/// `g.ends[0] ↦ 0` and `g.ends[1] ↦ ∞`.
pub fn frame_to_vertical(g: &Geodesic) -> MoebiusMatrix {
    let one = c(1.0, 0.0);
    let zero = c(0.0, 0.0);
    let i = c(0.0, 1.0);
    match g.ends {
        [Endpoint::Finite(p), Endpoint::Infinity] => MoebiusMatrix::new(one, -p, zero, one),
        [Endpoint::Infinity, Endpoint::Finite(q)] => MoebiusMatrix::new(zero, i, i, -i * q),
        [Endpoint::Finite(p), Endpoint::Finite(q)] => {
            MoebiusMatrix::new(one, -p, one, -q).normalised()
        }
        [Endpoint::Infinity, Endpoint::Infinity] => unreachable!("distinct endpoints"),
    }
}

/// Rotation by π about `g`.
pub fn pi_rotation(g: &Geodesic) -> MoebiusMatrix {
    let t = frame_to_vertical(g);
    let r = MoebiusMatrix::new(c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0));
    t.inverse().mul(&r).mul(&t)
}

/// The common perpendicular of two geodesics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perpendicular {
    pub geodesic: Geodesic,
    /// Complex distance `d + iθ`, `d >= 0`.
    pub delta: Complex64,
    /// Feet on the first and second geodesic.
    pub feet: [H3Point; 2],
}

impl Perpendicular {
    pub fn distance(&self) -> f64 {
        self.delta.re
    }

    pub fn midpoint(&self) -> H3Point {
        let t = frame_to_vertical(&self.geodesic);
        let (a, b) = (
            apply_moebius(&t, &self.feet[0]),
            apply_moebius(&t, &self.feet[1]),
        );
        let h = (a.t * b.t).sqrt();
        apply_moebius(&t.inverse(), &H3Point::new(c(0.0, 0.0), h))
    }
}

pub fn common_perpendicular(g1: &Geodesic, g2: &Geodesic) -> Result<Perpendicular, GeomError> {
    if g1.shares_endpoint(g2) {
        return Err(GeomError::SharedEndpoint);
    }
    let t1 = frame_to_vertical(g1);
    let img = g2.image(&t1);
    let (r, s) = match img.ends {
        [Endpoint::Finite(r), Endpoint::Finite(s)] => (r, s),
        _ => return Err(GeomError::SharedEndpoint),
    };
    let k = (r * s).sqrt();
    if k.norm() == 0.0 {
        return Err(GeomError::SharedEndpoint);
    }
    let scale = MoebiusMatrix::diagonal(1.0 / k.sqrt());
    let r1 = r / k;
    let t2 = MoebiusMatrix::new(c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)).normalised();
    let m = t2.mul(&scale).mul(&t1);
    let cc = (r1 - 1.0) / (r1 + 1.0);
    let theta = (-cc).arg();
    let d = cc.norm().ln().abs();
    let back = m.inverse();
    let geodesic = Geodesic::new(
        back.apply_endpoint(&Endpoint::Finite(c(0.0, 0.0))),
        back.apply_endpoint(&Endpoint::Infinity),
    )?;
    let feet = [
        apply_moebius(&back, &H3Point::new(c(0.0, 0.0), 1.0)),
        apply_moebius(&back, &H3Point::new(c(0.0, 0.0), cc.norm())),
    ];
    Ok(Perpendicular {
        geodesic,
        delta: c(d, theta),
        feet,
    })
}

/// `E(A,B)`, `E(A,AB)`, `E(B,AB)`.
pub fn hyperelliptic_axes(
    a: &MoebiusMatrix,
    b: &MoebiusMatrix,
) -> Result<[Perpendicular; 3], GeomError> {
    let ab = a.mul(b);
    let (xa, xb, xab) = (axis(a)?, axis(b)?, axis(&ab)?);
    Ok([
        common_perpendicular(&xa, &xb)?,
        common_perpendicular(&xa, &xab)?,
        common_perpendicular(&xb, &xab)?,
    ])
}

/// `|cosh σ₃ / (sinh σ₁ sinh σ₅)| + |1 - coth σ₁ coth σ₅|` with `σ₁, σ₃, σ₅`
/// the half complex lengths of `U`, `UV⁻¹`, `V⁻¹`.
///
/// Only moduli enter, so the `iπ` ambiguity in the side lengths is
/// irrelevant; the bare half lengths are used.
pub fn hexagon_bound(u: &MoebiusMatrix, v: &MoebiusMatrix) -> Result<f64, GeomError> {
    let lox = |m: &MoebiusMatrix| -> Result<Complex64, GeomError> {
        let l = complex_half_length(m).map_err(|_| GeomError::NonLoxodromic)?;
        if l.kind != IsometryKind::Loxodromic || l.lambda.re <= GEOM_TOL {
            return Err(GeomError::NonLoxodromic);
        }
        Ok(l.lambda)
    };
    let s1 = lox(u)?;
    let s5 = lox(&v.inverse())?;
    // average of UV⁻¹ and VU⁻¹ so that swapping U and V is exact
    let m1 = u.mul(&v.inverse());
    let m2 = v.mul(&u.inverse());
    let tr = (m1.trace() + m2.trace()) / 2.0;
    let sym = MoebiusMatrix::new(tr, c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
    let s3 = lox(&sym)?;
    let p = s1.sinh() * s5.sinh();
    let q = s1.cosh() * s5.cosh() / p;
    Ok((s3.cosh() / p).norm() + (1.0 - q).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn lift_333() {
        let l = lift_representation(&TraceTriple::real(3.0, 3.0, 3.0)).unwrap();
        assert_eq!(
            l.a,
            MoebiusMatrix::new(c(3.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0))
        );
        let zeta = (-3.0 + 5f64.sqrt()) / 2.0;
        assert!(close(l.b.b, c(zeta, 0.0), 1e-12));
        assert!(close(l.a.mul(&l.b).trace(), c(3.0, 0.0), 1e-12));
        assert!(close(l.b.det(), c(1.0, 0.0), 1e-12));
        assert!(!l.degenerate);
    }

    #[test]
    fn lift_guards() {
        assert_eq!(
            lift_representation(&TraceTriple::real(2.0, 2.0, 2.0)),
            Err(GeomError::ElementaryRepresentation)
        );
        assert_eq!(
            lift_representation(&TraceTriple::real(f64::NAN, 1.0, 1.0)),
            Err(GeomError::NonFinite)
        );
        // (2, 0, 0) sits on μ = 4 itself
        assert_eq!(
            lift_representation(&TraceTriple::real(2.0, 0.0, 0.0)),
            Err(GeomError::ElementaryRepresentation)
        );
        let l = lift_representation(&TraceTriple::real(2.0, 0.0, 1.0)).unwrap();
        assert_eq!(l.a.trace(), c(2.0, 0.0));
        let l = lift_representation(&TraceTriple::real(3.0, 4.0, 2.0)).unwrap();
        assert!(l.degenerate);
    }

    #[test]
    fn words() {
        let l = lift_representation(&TraceTriple::real(3.0, 2.5, 1.0)).unwrap();
        let w = |s: &str| s.parse::<Word>().unwrap();
        assert_eq!(evaluate_word(&w("1"), &l.a, &l.b), MoebiusMatrix::IDENTITY);
        assert!(close(
            evaluate_word(&w("ab"), &l.a, &l.b).trace(),
            c(1.0, 0.0),
            1e-12
        ));
        let m = l.a.mul(&l.a.inverse()).mul(&l.b);
        for (x, y) in [(m.a, l.b.a), (m.b, l.b.b), (m.c, l.b.c), (m.d, l.b.d)] {
            assert!(close(x, y, 1e-12));
        }
    }

    #[test]
    fn moebius_action() {
        let p = H3Point::new(c(0.3, -0.2), 0.7);
        assert_eq!(apply_moebius(&MoebiusMatrix::IDENTITY, &p), p);
        let q = apply_moebius(&MoebiusMatrix::diagonal(c(2.0, 0.0)), &H3Point::O);
        assert!(close(q.w, c(0.0, 0.0), 1e-15));
        assert!((q.t - 4.0).abs() < 1e-12);
    }

    #[test]
    fn distances() {
        let d = h3_distance(&H3Point::O, &H3Point::new(c(0.0, 0.0), E));
        assert!((d - 1.0).abs() < 1e-12);
        assert_eq!(h3_distance(&H3Point::O, &H3Point::O), 0.0);
    }

    #[test]
    fn half_lengths() {
        let m = |tr: Complex64| MoebiusMatrix::new(tr, c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
        let l = complex_half_length(&m(c(3.0, 0.0))).unwrap();
        assert!((l.lambda.re - 1.5f64.acosh()).abs() < 1e-12);
        assert!((l.ell() - 2.0 * 1.5f64.acosh()).abs() < 1e-12);
        assert_eq!(l.kind, IsometryKind::Loxodromic);
        let l = complex_half_length(&m(c(2.0, 0.0))).unwrap();
        assert_eq!(l.kind, IsometryKind::Parabolic);
        assert_eq!(l.ell(), 0.0);
        let l = complex_half_length(&m(c(1.0, 0.0))).unwrap();
        assert_eq!(l.kind, IsometryKind::Elliptic);
        let target = c(1.0, 1.0);
        let l = complex_half_length(&m(2.0 * target.cosh())).unwrap();
        assert!(close(l.lambda, target, 1e-12));
        assert_eq!(
            complex_half_length(&MoebiusMatrix::IDENTITY),
            Err(GeomError::IdentityMatrix)
        );
    }

    #[test]
    fn axes() {
        let a = MoebiusMatrix::new(c(3.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0));
        let g = axis(&a).unwrap();
        let s5 = 5f64.sqrt();
        let mut ends: Vec<f64> = g
            .ends
            .iter()
            .map(|e| match e {
                Endpoint::Finite(z) => z.re,
                Endpoint::Infinity => panic!(),
            })
            .collect();
        ends.sort_by(f64::total_cmp);
        assert!((ends[0] - (-3.0 - s5) / 2.0).abs() < 1e-12);
        assert!((ends[1] - (-3.0 + s5) / 2.0).abs() < 1e-12);
        for e in &g.ends {
            assert!(a.apply_endpoint(e).approx_eq(e));
        }

        let g = axis(&MoebiusMatrix::diagonal(c(2.0, 0.0))).unwrap();
        assert_eq!(g.ends, [Endpoint::Finite(c(0.0, 0.0)), Endpoint::Infinity]);
        let g = axis(&MoebiusMatrix::diagonal(c(0.5, 0.0))).unwrap();
        assert_eq!(g.ends, [Endpoint::Infinity, Endpoint::Finite(c(0.0, 0.0))]);

        let p = MoebiusMatrix::new(c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        assert_eq!(axis(&p), Err(GeomError::ParabolicNoAxis));
    }

    #[test]
    fn concentric_perpendicular() {
        let r = 3.5;
        let g1 = Geodesic::finite(c(-1.0, 0.0), c(1.0, 0.0)).unwrap();
        let g2 = Geodesic::finite(c(-r, 0.0), c(r, 0.0)).unwrap();
        let p = common_perpendicular(&g1, &g2).unwrap();
        assert!((p.distance() - r.ln()).abs() < 1e-12);
        let ends: Vec<_> = p.geodesic.ends.to_vec();
        assert!(ends.contains(&Endpoint::Infinity));
        assert!(ends
            .iter()
            .any(|e| e.approx_eq(&Endpoint::Finite(c(0.0, 0.0)))));
        assert!((p.feet[0].t - 1.0).abs() < 1e-12);
        assert!((p.feet[1].t - r).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_crossing() {
        let g1 = Geodesic::finite(c(-1.0, 0.0), c(1.0, 0.0)).unwrap();
        let g2 = Geodesic::finite(c(0.0, -1.0), c(0.0, 1.0)).unwrap();
        let p = common_perpendicular(&g1, &g2).unwrap();
        assert!(p.distance().abs() < 1e-12);
        assert!((p.delta.im.abs() - PI / 2.0).abs() < 1e-12);
        assert!(h3_distance(&p.feet[0], &p.feet[1]) < 1e-12);

        let g3 = Geodesic::finite(c(1.0, 0.0), c(5.0, 0.0)).unwrap();
        assert_eq!(
            common_perpendicular(&g1, &g3),
            Err(GeomError::SharedEndpoint)
        );
    }

    #[test]
    fn perpendicular_hits_both_orthogonally() {
        let g1 = Geodesic::new(Endpoint::Finite(c(0.3, 0.1)), Endpoint::Infinity).unwrap();
        let g2 = Geodesic::finite(c(2.0, -1.0), c(-0.5, 1.7)).unwrap();
        let p = common_perpendicular(&g1, &g2).unwrap();
        let q1 = common_perpendicular(&p.geodesic, &g1).unwrap();
        let q2 = common_perpendicular(&p.geodesic, &g2).unwrap();
        assert!(q1.distance() < 1e-9 && q1.delta.im.cos().abs() < 1e-9);
        assert!(q2.distance() < 1e-9 && q2.delta.im.cos().abs() < 1e-9);
        assert!((h3_distance(&p.feet[0], &p.feet[1]) - p.distance()).abs() < 1e-9);
    }

    #[test]
    fn pi_rotation_inverts_a() {
        let l =
            lift_representation(&TraceTriple::new(c(2.5, 0.4), c(3.0, -0.2), c(2.2, 0.9))).unwrap();
        let [e_ab, _, _] = hyperelliptic_axes(&l.a, &l.b).unwrap();
        let r = pi_rotation(&e_ab.geodesic);
        let conj = r.mul(&l.a).mul(&r.inverse());
        let inv = l.a.inverse();
        assert!(close(conj.trace(), inv.trace(), 1e-9));
        let ax = axis(&l.a).unwrap();
        let img = ax.image(&r);
        assert!(img.ends[0].approx_eq(&ax.ends[1]) || img.ends[0].approx_eq(&ax.ends[0]));
        // fixed points are swapped
        assert!(img.ends[0].approx_eq(&ax.ends[1]));
    }

    #[test]
    fn hexagon_symmetric_and_finite() {
        let l = lift_representation(&TraceTriple::real(3.0, 3.0, 3.0)).unwrap();
        let h = hexagon_bound(&l.a, &l.b).unwrap();
        assert!(h.is_finite() && h > 0.0);
        assert_eq!(h, hexagon_bound(&l.b, &l.a).unwrap());

        // σ₁ = σ₅ = arccosh(3/2); tr AB⁻¹ = xy - z = 6 gives σ₃ = arccosh 3
        let s = 1.5f64.acosh();
        let s3 = 3f64.acosh();
        let expected =
            (s3.cosh() / (s.sinh() * s.sinh())).abs() + (1.0 - 1.0 / (s.tanh() * s.tanh())).abs();
        assert!((h - expected).abs() < 1e-9);
    }
}
