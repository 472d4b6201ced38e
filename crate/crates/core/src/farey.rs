//! Farey addressing of primitive conjugacy classes and their words.
//!
//! Extended conjugacy classes of primitive elements of `F2 = <a, b>` are in
//! bijection with `Q ∪ {∞}`. The base assignment is `a ↔ 0/1`, `b ↔ 1/0`,
//! `ab ↔ 1/1`; every other class is reached by Farey addition, and its
//! canonical word is the concatenation of its two parents' words, the parent
//! with the smaller value first.
//!
//! Exponent sums follow `(e_a, e_b) = (q, p)` for the class `p/q`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FareyError {
    #[error("0/0 is not a rational")]
    ZeroOverZero,
    #[error("{0} and {1} are not Farey neighbours")]
    NotNeighbours(Rational, Rational),
    #[error("{rational} has type {found}, which is not one of the types of {pair}")]
    TypeMismatch {
        rational: Rational,
        found: Mod2Type,
        pair: BasicPair,
    },
    #[error("no palindromic representative found for {0} in {1}")]
    NotFound(Rational, BasicPair),
    #[error("cannot parse {0:?}")]
    Parse(String),
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// A point of `Q ∪ {∞}` in lowest terms, `q ≥ 0`.
///
/// `1/0` and `-1/0` are the same point and both normalise to `1/0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Rational {
    p: i64,
    q: i64,
}

impl Rational {
    pub const ZERO: Rational = Rational { p: 0, q: 1 };
    pub const ONE: Rational = Rational { p: 1, q: 1 };
    pub const INFINITY: Rational = Rational { p: 1, q: 0 };

    pub fn new(p: i64, q: i64) -> Result<Self, FareyError> {
        if p == 0 && q == 0 {
            return Err(FareyError::ZeroOverZero);
        }
        Ok(Self::normalised(p, q))
    }

    // Caller guarantees (p, q) != (0, 0).
    fn normalised(p: i64, q: i64) -> Self {
        let g = gcd(p, q);
        let (mut p, mut q) = (p / g, q / g);
        if q < 0 || (q == 0 && p < 0) {
            p = -p;
            q = -q;
        }
        Rational { p, q }
    }

    pub fn numer(&self) -> i64 {
        self.p
    }

    pub fn denom(&self) -> i64 {
        self.q
    }

    pub fn is_infinite(&self) -> bool {
        self.q == 0
    }

    /// Word length of every element of the class: `|p| + q`.
    pub fn word_length(&self) -> usize {
        (self.p.unsigned_abs() + self.q as u64) as usize
    }

    pub fn to_f64(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// The mirror point `-p/q`.
    pub fn negate(&self) -> Self {
        Self::normalised(-self.p, self.q)
    }

    /// `(p + r)/(q + s)` as vectors, up to sign.
    pub(crate) fn vec_add(&self, other: &Self) -> Self {
        let p = self.p.checked_add(other.p).expect("rational overflow");
        let q = self.q.checked_add(other.q).expect("rational overflow");
        Self::normalised(p, q)
    }

    /// `(p - r)/(q - s)` as vectors, up to sign.
    pub(crate) fn vec_sub(&self, other: &Self) -> Self {
        let p = self.p.checked_sub(other.p).expect("rational overflow");
        let q = self.q.checked_sub(other.q).expect("rational overflow");
        Self::normalised(p, q)
    }

    /// Given a Farey triangle `{u, v, w}`, the third vertex of the other
    /// triangle on the edge `{u, v}`.
    pub fn flip_third(u: &Self, v: &Self, w: &Self) -> Self {
        let sum = u.vec_add(v);
        if sum == *w {
            u.vec_sub(v)
        } else {
            sum
        }
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.q == 0, other.q == 0) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => {
                let lhs = self.p as i128 * other.q as i128;
                let rhs = other.p as i128 * self.q as i128;
                lhs.cmp(&rhs)
            }
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl From<Rational> for String {
    fn from(r: Rational) -> String {
        r.to_string()
    }
}

impl TryFrom<String> for Rational {
    type Error = FareyError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl FromStr for Rational {
    type Err = FareyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parse = |t: &str| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| FareyError::Parse(s.into()))
        };
        match s.split_once('/') {
            Some((p, q)) => Rational::new(parse(p)?, parse(q)?),
            None => Rational::new(parse(s)?, 1),
        }
    }
}

/// True iff `|ps - qr| = 1`.
pub fn is_neighbour(l: &Rational, r: &Rational) -> bool {
    let det = l.p as i128 * r.q as i128 - l.q as i128 * r.p as i128;
    det.abs() == 1
}

/// Farey addition of two neighbours. `∞` is taken as `1/0`, so
/// `mediant(∞, 0/1) = 1/1`.
pub fn mediant(l: &Rational, r: &Rational) -> Result<Rational, FareyError> {
    if !is_neighbour(l, r) {
        return Err(FareyError::NotNeighbours(*l, *r));
    }
    Ok(l.vec_add(r))
}

/// All non-negative classes with `p + q <= level`, ordered by word length
/// and then by value.
pub fn rationals_up_to(level: usize) -> Vec<Rational> {
    let level = level as i64;
    let mut out = Vec::new();
    for n in 1..=level {
        for p in 0..=n {
            let q = n - p;
            if gcd(p, q) == 1 {
                out.push(Rational { p, q });
            }
        }
    }
    out.sort_by(|a, b| a.word_length().cmp(&b.word_length()).then(a.cmp(b)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Step {
    Left,
    Right,
}

/// Stern–Brocot address of a class relative to the base triple.
///
/// `Path` replays mediants starting from the interval `(0/1, 1/0)`, whose
/// mediant `1/1` is the empty path. Negative classes use the mirror image of
/// the path of `|p|/q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SternBrocot {
    Zero,
    Infinity,
    Path { negative: bool, steps: Vec<Step> },
}

pub fn stern_brocot_path(r: &Rational) -> SternBrocot {
    if *r == Rational::ZERO {
        return SternBrocot::Zero;
    }
    if r.is_infinite() {
        return SternBrocot::Infinity;
    }
    let negative = r.p < 0;
    let target = Rational {
        p: r.p.abs(),
        q: r.q,
    };
    let (mut l, mut h) = (Rational::ZERO, Rational::INFINITY);
    let mut steps = Vec::new();
    loop {
        let m = l.vec_add(&h);
        match target.cmp(&m) {
            Ordering::Equal => break,
            Ordering::Less => {
                h = m;
                steps.push(Step::Left);
            }
            Ordering::Greater => {
                l = m;
                steps.push(Step::Right);
            }
        }
    }
    SternBrocot::Path { negative, steps }
}

/// Replays a path of mediants from `(0/1, 1/0)`, returning the final
/// `(left, right, mediant)` triangle.
pub fn replay_path(steps: &[Step]) -> (Rational, Rational, Rational) {
    let (mut l, mut h) = (Rational::ZERO, Rational::INFINITY);
    for step in steps {
        let m = l.vec_add(&h);
        match step {
            Step::Left => h = m,
            Step::Right => l = m,
        }
    }
    (l, h, l.vec_add(&h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Letter {
    A,
    AInv,
    B,
    BInv,
}

impl Letter {
    pub fn inverse(self) -> Self {
        match self {
            Letter::A => Letter::AInv,
            Letter::AInv => Letter::A,
            Letter::B => Letter::BInv,
            Letter::BInv => Letter::B,
        }
    }

    fn as_char(self) -> char {
        match self {
            Letter::A => 'a',
            Letter::AInv => 'A',
            Letter::B => 'b',
            Letter::BInv => 'B',
        }
    }
}

/// A freely reduced word in two generators and their inverses.
///
/// Printed with `a, b` for the generators and `A, B` for their inverses.
/// When a word is the result of [`rewrite_in_pair`], `a` stands for the
/// first generator of the pair and `b` for the second.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Builds the free reduction of `letters`.
    pub fn reduced<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(e_a, e_b)`.
    pub fn exponent_sums(&self) -> (i64, i64) {
        self.0.iter().fold((0, 0), |(ea, eb), l| match l {
            Letter::A => (ea + 1, eb),
            Letter::AInv => (ea - 1, eb),
            Letter::B => (ea, eb + 1),
            Letter::BInv => (ea, eb - 1),
        })
    }

    pub fn inverse(&self) -> Self {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn concat(&self, other: &Word) -> Self {
        Word::reduced(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.0.first(), self.0.last()) {
            (Some(f), Some(l)) => self.0.len() == 1 || *f != l.inverse(),
            _ => true,
        }
    }

    /// The word starting at position `k`.
    pub fn rotate(&self, k: usize) -> Self {
        let mut v = self.0.clone();
        if !v.is_empty() {
            let k = k % v.len();
            v.rotate_left(k);
        }
        Word(v)
    }

    pub fn is_palindrome(&self) -> bool {
        self.0.iter().eq(self.0.iter().rev())
    }

    /// Replaces `b` by `b⁻¹` throughout.
    pub fn mirror_b(&self) -> Self {
        Word(
            self.0
                .iter()
                .map(|l| match l {
                    Letter::B => Letter::BInv,
                    Letter::BInv => Letter::B,
                    other => *other,
                })
                .collect(),
        )
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for l in &self.0 {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl From<Word> for String {
    fn from(w: Word) -> String {
        w.to_string()
    }
}

impl TryFrom<String> for Word {
    type Error = FareyError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl FromStr for Word {
    type Err = FareyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "1" {
            return Ok(Word::empty());
        }
        let letters = s
            .chars()
            .map(|c| match c {
                'a' => Ok(Letter::A),
                'A' => Ok(Letter::AInv),
                'b' => Ok(Letter::B),
                'B' => Ok(Letter::BInv),
                _ => Err(FareyError::Parse(s.into())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Word::reduced(letters))
    }
}

/// The canonical cyclically reduced word `w_{p/q}`.
pub fn farey_word(r: &Rational) -> Word {
    match stern_brocot_path(r) {
        SternBrocot::Zero => Word(vec![Letter::A]),
        SternBrocot::Infinity => Word(vec![Letter::B]),
        SternBrocot::Path { negative, steps } => {
            let mut lo = Word(vec![Letter::A]);
            let mut hi = Word(vec![Letter::B]);
            for step in &steps {
                let m = Word([lo.0.as_slice(), hi.0.as_slice()].concat());
                match step {
                    Step::Left => hi = m,
                    Step::Right => lo = m,
                }
            }
            let w = Word([lo.0, hi.0].concat());
            if negative {
                w.mirror_b()
            } else {
                w
            }
        }
    }
}

/// Parity class of a rational, one of `0/1`, `1/0`, `1/1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mod2Type {
    #[serde(rename = "0/1")]
    ZeroOne,
    #[serde(rename = "1/0")]
    OneZero,
    #[serde(rename = "1/1")]
    OneOne,
}

impl fmt::Display for Mod2Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mod2Type::ZeroOne => "0/1",
            Mod2Type::OneZero => "1/0",
            Mod2Type::OneOne => "1/1",
        };
        f.write_str(s)
    }
}

pub fn mod2_type(r: &Rational) -> Mod2Type {
    match (r.p.rem_euclid(2), r.q.rem_euclid(2)) {
        (0, 1) => Mod2Type::ZeroOne,
        (1, 0) => Mod2Type::OneZero,
        (1, 1) => Mod2Type::OneOne,
        _ => unreachable!("reduced rationals have a odd entry"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Colour {
    #[serde(rename = "r")]
    Red,
    #[serde(rename = "g")]
    Green,
    #[serde(rename = "b")]
    Blue,
}

/// Colour of the Farey edge joining two neighbours.
pub fn edge_colour(l: &Rational, r: &Rational) -> Result<Colour, FareyError> {
    if !is_neighbour(l, r) {
        return Err(FareyError::NotNeighbours(*l, *r));
    }
    let pair = BasicPair::from_types(mod2_type(l), mod2_type(r))
        .expect("neighbours have distinct parity types");
    Ok(match pair {
        BasicPair::AB => Colour::Red,
        BasicPair::AAb => Colour::Green,
        BasicPair::BAb => Colour::Blue,
    })
}

/// The three basic generator pairs `(a,b)`, `(a,ab)`, `(b,ab)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BasicPair {
    #[serde(rename = "a,b")]
    AB,
    #[serde(rename = "a,ab")]
    AAb,
    #[serde(rename = "b,ab")]
    BAb,
}

impl BasicPair {
    pub const ALL: [BasicPair; 3] = [BasicPair::AB, BasicPair::AAb, BasicPair::BAb];

    pub fn types(&self) -> (Mod2Type, Mod2Type) {
        match self {
            BasicPair::AB => (Mod2Type::ZeroOne, Mod2Type::OneZero),
            BasicPair::AAb => (Mod2Type::ZeroOne, Mod2Type::OneOne),
            BasicPair::BAb => (Mod2Type::OneZero, Mod2Type::OneOne),
        }
    }

    pub fn from_types(s: Mod2Type, t: Mod2Type) -> Option<Self> {
        BasicPair::ALL.into_iter().find(|p| {
            let (x, y) = p.types();
            (x == s && y == t) || (x == t && y == s)
        })
    }

    pub fn contains(&self, t: Mod2Type) -> bool {
        let (x, y) = self.types();
        x == t || y == t
    }

    /// The two generators as words in `a, b`.
    pub fn generators(&self) -> (Word, Word) {
        let a = Word(vec![Letter::A]);
        let b = Word(vec![Letter::B]);
        let ab = Word(vec![Letter::A, Letter::B]);
        match self {
            BasicPair::AB => (a, b),
            BasicPair::AAb => (a, ab),
            BasicPair::BAb => (b, ab),
        }
    }

    /// The pairs containing a given type.
    pub fn admissible(t: Mod2Type) -> [BasicPair; 2] {
        match t {
            Mod2Type::ZeroOne => [BasicPair::AB, BasicPair::AAb],
            Mod2Type::OneZero => [BasicPair::AB, BasicPair::BAb],
            Mod2Type::OneOne => [BasicPair::AAb, BasicPair::BAb],
        }
    }
}

impl fmt::Display for BasicPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BasicPair::AB => "(a,b)",
            BasicPair::AAb => "(a,ab)",
            BasicPair::BAb => "(b,ab)",
        };
        f.write_str(s)
    }
}

/// Rewrites `w` in the generators of `pair`. In the result `a` is the first
/// generator of the pair and `b` the second.
pub fn rewrite_in_pair(w: &Word, pair: BasicPair) -> Word {
    use Letter::*;
    // Images of a and b in (X, Y) = (first, second).
    let (img_a, img_b): (&[Letter], &[Letter]) = match pair {
        BasicPair::AB => (&[A], &[B]),
        // b = a⁻¹ (ab)
        BasicPair::AAb => (&[A], &[AInv, B]),
        // a = (ab) b⁻¹
        BasicPair::BAb => (&[B, AInv], &[A]),
    };
    let inv = |s: &[Letter]| s.iter().rev().map(|l| l.inverse()).collect::<Vec<_>>();
    let (inv_a, inv_b) = (inv(img_a), inv(img_b));
    Word::reduced(w.0.iter().flat_map(|l| {
        match l {
            A => img_a.to_vec(),
            AInv => inv_a.clone(),
            B => img_b.to_vec(),
            BInv => inv_b.clone(),
        }
        .into_iter()
    }))
}

/// Every cyclic permutation of `w_{p/q}` and of its inverse whose rewrite in
/// `pair` is a palindrome.
pub fn palindromic_candidates(r: &Rational, pair: BasicPair) -> Vec<Word> {
    let w = farey_word(r);
    let wi = w.inverse();
    (0..w.len())
        .flat_map(|k| [w.rotate(k), wi.rotate(k)])
        .filter(|c| rewrite_in_pair(c, pair).is_palindrome())
        .collect()
}

/// The cyclically reduced conjugate of `w_{p/q}` (up to inverse) that is a
/// palindrome in the letters of `pair`. Of a word and its inverse, the
/// lexicographically smaller under `a < a⁻¹ < b < b⁻¹` is returned.
pub fn palindromic_representative(r: &Rational, pair: BasicPair) -> Result<Word, FareyError> {
    let t = mod2_type(r);
    if !pair.contains(t) {
        return Err(FareyError::TypeMismatch {
            rational: *r,
            found: t,
            pair,
        });
    }
    palindromic_candidates(r, pair)
        .into_iter()
        .min()
        .ok_or(FareyError::NotFound(*r, pair))
}
