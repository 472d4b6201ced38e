//! Checks against computations that do not share code with the library:
//! exact integer Markoff triples and brute-force geodesic distances.

use std::collections::HashMap;

use num_bigint::BigInt;
use primstab::farey::{farey_word, rationals_up_to};
use primstab::h3geom::{
    common_perpendicular, evaluate_word, h3_distance, lift_representation, Endpoint, Geodesic,
};
use primstab::markoff::region_trace;
use primstab::{Complex64, Rational, Trace, TraceTriple};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Markoff numbers of the regions `p/q >= 0` with `p + q <= level`, by the
/// Stern–Brocot recursion `c' = 3ab - c` on exact integers.
fn markoff_numbers(level: i64) -> HashMap<(i64, i64), BigInt> {
    let one = BigInt::from(1);
    let mut out = HashMap::new();
    out.insert((0, 1), one.clone());
    out.insert((1, 0), one.clone());
    // (left, right, values, value across the edge) for each mediant to
    // visit. Across 0/1 | 1/0 from 1/1 sits -1/1, the other root of
    // z² - 3z + 2 = 0.
    let mut stack = vec![(
        (0i64, 1i64),
        (1i64, 0i64),
        one.clone(),
        one.clone(),
        BigInt::from(2),
    )];
    while let Some((l, r, ml, mr, opp)) = stack.pop() {
        let m = (l.0 + r.0, l.1 + r.1);
        if m.0 + m.1 > level {
            continue;
        }
        let mm = BigInt::from(3) * &ml * &mr - &opp;
        out.insert(m, mm.clone());
        stack.push((l, m, ml.clone(), mm.clone(), mr.clone()));
        stack.push((m, r, mm, mr, ml));
    }
    out
}

#[test]
fn markoff_traces_are_three_times_markoff_numbers() {
    let base = TraceTriple::real(3.0, 3.0, 3.0);
    let exact = markoff_numbers(8);
    assert_eq!(exact[&(1, 1)], BigInt::from(1));
    assert_eq!(exact[&(1, 3)], BigInt::from(5));
    assert_eq!(exact[&(2, 5)], BigInt::from(29));
    for r in rationals_up_to(8) {
        let want = BigInt::from(3) * &exact[&(r.numer(), r.denom())];
        let Trace::Finite(t) = region_trace(&base, &r) else {
            panic!("escaped at {r}");
        };
        assert_eq!(t.im, 0.0);
        assert_eq!(BigInt::from(t.re as i64), want, "{r}");
    }
}

#[test]
fn region_traces_match_word_traces() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let mut c = || Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let base = TraceTriple::new(c(), c(), c());
        let lift = lift_representation(&base).unwrap();
        let mut rs = rationals_up_to(12);
        rs.extend(
            rationals_up_to(12)
                .iter()
                .filter(|r| r.numer() > 0 && !r.is_infinite())
                .map(Rational::negate),
        );
        for r in rs {
            let m = evaluate_word(&farey_word(&r), &lift.a, &lift.b);
            let t = region_trace(&base, &r).finite().unwrap();
            let scale = 1.0 + t.norm();
            assert!(
                (m.trace() - t).norm() <= 1e-6 * scale,
                "{r}: {} vs {t}",
                m.trace()
            );
        }
    }
}

fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    f((a + b) / 2.0)
}

/// Brute-force distance between two geodesics. The distance between points
/// on two geodesics is convex in both arclength parameters, so nested
/// golden-section search finds the minimum.
fn brute_distance(g1: &Geodesic, g2: &Geodesic) -> f64 {
    golden(
        |s| {
            golden(
                |t| h3_distance(&g1.point_at(s), &g2.point_at(t)),
                -40.0,
                40.0,
                1e-9,
            )
        },
        -40.0,
        40.0,
        1e-9,
    )
}

fn random_geodesic(rng: &mut ChaCha8Rng) -> Geodesic {
    let mut e = || {
        if rng.gen_bool(0.1) {
            Endpoint::Infinity
        } else {
            Endpoint::Finite(Complex64::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            ))
        }
    };
    loop {
        if let Ok(g) = Geodesic::new(e(), e()) {
            return g;
        }
    }
}

#[test]
fn perpendicular_distance_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut done = 0;
    while done < 200 {
        let (g1, g2) = (random_geodesic(&mut rng), random_geodesic(&mut rng));
        let Ok(p) = common_perpendicular(&g1, &g2) else {
            continue;
        };
        let brute = brute_distance(&g1, &g2);
        assert!(
            (p.distance() - brute).abs() <= 1e-6,
            "{g1:?} {g2:?}: {} vs {brute}",
            p.distance()
        );
        done += 1;
    }
}
