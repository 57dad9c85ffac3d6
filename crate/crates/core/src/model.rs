//! Axisymmetric Hamiltonians and triangulated scalar fields on the sphere.
//!
//! Coordinates are `(θ, z)` with `ω = (1/4π) dθ∧dz`, so the area of
//! `{z' ≤ z}` is `(1+z)/2` and the sphere has area 1. A profile
//! `h: [-1, 1] → ℝ` defines `H(θ, z) = h(z)`. The disc is `{z ≤ 0}`, with
//! the pole `z = -1` at its centre.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, structural, Error, Result};
use crate::interval::Interval;
use crate::quad;
use crate::rational::{from_f64_grid, q, qi, to_f64, RatStr, Q};
use crate::smooth::{step, step_complement_interval, step_jet};

/// Area of `{z' ≤ z}`, a bijection `[-1, 1] → [0, 1]`.
pub fn area_of_sublevel(z: &Q) -> Q {
    (qi(1) + z) / qi(2)
}

/// Inverse of [`area_of_sublevel`].
pub fn height_of_area(a: &Q) -> Q {
    qi(2) * a - qi(1)
}

pub fn area_of_sublevel_f64(z: f64) -> f64 {
    0.5 * (1.0 + z)
}

pub fn height_of_area_f64(a: f64) -> f64 {
    2.0 * a - 1.0
}

/// Whether `h` is compactly supported in the disc `{z < 0}` or lives on the
/// whole sphere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Support {
    Disc,
    Sphere,
}

/// A number that is exact whenever the inputs allowed it.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Q),
    Approx(f64),
}

impl Value {
    pub fn zero() -> Value {
        Value::Exact(Q::zero())
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(x) => to_f64(x),
            Value::Approx(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&Q> {
        match self {
            Value::Exact(x) => Some(x),
            Value::Approx(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    pub fn add(&self, o: &Value) -> Value {
        match (self, o) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a + b),
            _ => Value::Approx(self.to_f64() + o.to_f64()),
        }
    }

    pub fn sub(&self, o: &Value) -> Value {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Value {
        match self {
            Value::Exact(a) => Value::Exact(-a),
            Value::Approx(a) => Value::Approx(-a),
        }
    }

    pub fn mul_q(&self, c: &Q) -> Value {
        match self {
            Value::Exact(a) => Value::Exact(a * c),
            Value::Approx(a) => Value::Approx(a * to_f64(c)),
        }
    }

    /// Exact rational when exact, else the float rounded to the `2^-60` grid.
    pub fn to_q(&self) -> Q {
        match self {
            Value::Exact(x) => x.clone(),
            Value::Approx(x) => from_f64_grid(*x),
        }
    }
}

/// The closed form of `h` on one piece. `s = (z - from)/(to - from)` and
/// `E` is the flat smooth step of [`crate::smooth`].
#[derive(Clone, Debug, PartialEq)]
pub enum PieceKind {
    Zero,
    /// `Σ coeffs[j] z^j`.
    Poly { coeffs: Vec<Q> },
    /// `lo + (hi - lo) E(s)`.
    Step { lo: Q, hi: Q },
    /// `sqrt(scale / (1 + z))`, singular at the pole.
    InvSqrt { scale: Q },
    /// `sqrt(scale / (1 + z)) (1 - E(s))`.
    InvSqrtCutoff { scale: Q },
    /// The constant `sqrt(radicand)`.
    SqrtConst { radicand: Q },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub from: Q,
    pub to: Q,
    pub kind: PieceKind,
}

/// Direction of `h` along a segment, in increasing `z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Monotone {
    Increasing,
    Decreasing,
    Constant,
}

/// A maximal sub-interval of one piece on which `h` is constant or
/// strictly monotone.
#[derive(Clone, Debug)]
pub struct Segment {
    pub z0: Q,
    pub z1: Q,
    pub h0: Value,
    pub h1: Value,
    pub dir: Monotone,
    pub piece: usize,
}

fn sqrt_q(x: &Q) -> Option<Q> {
    if x.is_negative() {
        return None;
    }
    let (n, d) = (x.numer(), x.denom());
    let (rn, rd) = (n.sqrt(), d.sqrt());
    (&rn * &rn == *n && &rd * &rd == *d).then(|| Q::new(rn, rd))
}

fn horner_q(c: &[Q], z: &Q) -> Q {
    c.iter().rev().fold(Q::zero(), |acc, a| acc * z + a)
}

fn horner(c: &[f64], z: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * z + a)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(j, a)| a * j as f64).collect()
}

impl Piece {
    pub fn new(from: Q, to: Q, kind: PieceKind) -> Piece {
        Piece { from, to, kind }
    }

    fn len_f64(&self) -> f64 {
        to_f64(&(&self.to - &self.from))
    }

    fn s(&self, z: f64) -> f64 {
        (z - to_f64(&self.from)) / self.len_f64()
    }

    fn coeffs_f64(c: &[Q]) -> Vec<f64> {
        c.iter().map(to_f64).collect()
    }

    pub fn eval_f64(&self, z: f64) -> f64 {
        FloatPiece::new(self).eval(z)
    }

    /// `(h, h', h'')` at `z`.
    pub fn jet_f64(&self, z: f64) -> (f64, f64, f64) {
        FloatPiece::new(self).jet(z)
    }

    /// Exact value at a rational point, when the closed form allows it.
    pub fn eval_exact(&self, z: &Q) -> Option<Q> {
        match &self.kind {
            PieceKind::Zero => Some(Q::zero()),
            PieceKind::Poly { coeffs } => Some(horner_q(coeffs, z)),
            PieceKind::Step { lo, hi } => {
                if lo == hi || *z == self.from {
                    Some(lo.clone())
                } else if *z == self.to {
                    Some(hi.clone())
                } else {
                    None
                }
            }
            PieceKind::InvSqrt { scale } => sqrt_q(&(scale / (qi(1) + z))),
            PieceKind::InvSqrtCutoff { scale } => {
                if *z == self.to {
                    Some(Q::zero())
                } else if *z == self.from {
                    sqrt_q(&(scale / (qi(1) + z)))
                } else {
                    None
                }
            }
            PieceKind::SqrtConst { radicand } => sqrt_q(radicand),
        }
    }

    /// Enclosure of the value at a rational point.
    ///
    /// Rigorous for the polynomial, radical and constant forms. The flat
    /// step is evaluated in floats and widened by 64 ulps plus `1e-300`.
    pub fn eval_interval(&self, z: &Q) -> Interval {
        if let Some(x) = self.eval_exact(z) {
            return Interval::from_q(&x);
        }
        match &self.kind {
            PieceKind::InvSqrt { scale } => Interval::from_q(&(scale / (qi(1) + z))).sqrt(),
            PieceKind::SqrtConst { radicand } => Interval::from_q(radicand).sqrt(),
            PieceKind::InvSqrtCutoff { scale } => {
                let f = Interval::from_q(&(scale / (qi(1) + z))).sqrt();
                let zf = to_f64(z);
                // Rounding of z, the shift and the division, relative to the piece length.
                let s_err = 8.0 * f64::EPSILON * (zf.abs() + to_f64(&self.from).abs() + 1.0) / self.len_f64();
                f * step_complement_interval(self.s(zf), s_err)
            }
            _ => Interval::around(self.eval_f64(to_f64(z)), 64).widen(1e-300),
        }
    }

    /// `∫ h dz` over the piece.
    pub fn integral(&self) -> Value {
        let len = &self.to - &self.from;
        match &self.kind {
            PieceKind::Zero => Value::zero(),
            PieceKind::Poly { coeffs } => {
                let anti = |z: &Q| {
                    coeffs
                        .iter()
                        .enumerate()
                        .fold(Q::zero(), |acc, (j, c)| acc + c * num_traits::pow(z.clone(), j + 1) / qi(j as i64 + 1))
                };
                Value::Exact(anti(&self.to) - anti(&self.from))
            }
            // E(s) + E(1-s) = 1 makes the step integrate to the mean of its ends.
            PieceKind::Step { lo, hi } => Value::Exact(len * (lo + hi) / qi(2)),
            PieceKind::InvSqrt { scale } => {
                let a = |z: &Q| Value::Approx(2.0 * (to_f64(scale) * to_f64(&(qi(1) + z))).sqrt());
                match (sqrt_q(&(scale * (qi(1) + &self.to))), sqrt_q(&(scale * (qi(1) + &self.from)))) {
                    (Some(t), Some(f)) => Value::Exact(qi(2) * (t - f)),
                    _ => a(&self.to).sub(&a(&self.from)),
                }
            }
            PieceKind::SqrtConst { radicand } => match sqrt_q(radicand) {
                Some(r) => Value::Exact(r * len),
                None => Value::Approx(to_f64(radicand).sqrt() * to_f64(&len)),
            },
            PieceKind::InvSqrtCutoff { .. } => {
                let r = quad::integrate(&|z| self.eval_f64(z), to_f64(&self.from), to_f64(&self.to), 1e-14);
                Value::Approx(r.value)
            }
        }
    }

    /// Enclosure of `∫ h dz` over the piece.
    ///
    /// Quadrature-based pieces are widened by ten times the reported error
    /// estimate plus `1e-13`.
    pub fn integral_interval(&self) -> Interval {
        match (&self.kind, self.integral()) {
            (_, Value::Exact(x)) => Interval::from_q(&x),
            (PieceKind::InvSqrt { scale }, _) => {
                let s = |z: &Q| Interval::from_q(&(scale * (qi(1) + z))).sqrt();
                (s(&self.to) - s(&self.from)).scale(2.0)
            }
            (PieceKind::SqrtConst { radicand }, _) => {
                Interval::from_q(radicand).sqrt() * Interval::from_q(&(&self.to - &self.from))
            }
            _ => {
                let r = quad::integrate(&|z| self.eval_f64(z), to_f64(&self.from), to_f64(&self.to), 1e-14);
                Interval::point(r.value).widen(10.0 * r.error + 1e-13)
            }
        }
    }

    /// True for the inverse square root reaching the pole.
    pub fn is_singular(&self) -> bool {
        matches!(self.kind, PieceKind::InvSqrt { .. }) && self.from == qi(-1)
    }

    pub fn is_constant(&self) -> bool {
        match &self.kind {
            PieceKind::Zero | PieceKind::SqrtConst { .. } => true,
            PieceKind::Poly { coeffs } => coeffs.iter().skip(1).all(Zero::is_zero),
            PieceKind::Step { lo, hi } => lo == hi,
            _ => false,
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match &self.kind {
            PieceKind::Zero => true,
            PieceKind::Poly { coeffs } => coeffs.iter().all(Zero::is_zero),
            PieceKind::Step { lo, hi } => lo.is_zero() && hi.is_zero(),
            PieceKind::SqrtConst { radicand } => radicand.is_zero(),
            _ => false,
        }
    }

    fn value_at(&self, z: &Q) -> Value {
        match self.eval_exact(z) {
            Some(x) => Value::Exact(x),
            None => Value::Approx(self.eval_f64(to_f64(z))),
        }
    }

    /// Splits the piece into constant or strictly monotone segments.
    fn segments(&self, index: usize) -> Vec<Segment> {
        let seg = |z0: Q, z1: Q, dir: Monotone| {
            let (h0, h1) = (self.value_at(&z0), self.value_at(&z1));
            Segment { z0, z1, h0, h1, dir, piece: index }
        };
        if self.is_constant() {
            return vec![seg(self.from.clone(), self.to.clone(), Monotone::Constant)];
        }
        match &self.kind {
            PieceKind::Step { lo, hi } => {
                let dir = if hi > lo { Monotone::Increasing } else { Monotone::Decreasing };
                vec![seg(self.from.clone(), self.to.clone(), dir)]
            }
            PieceKind::InvSqrt { .. } => {
                let mut s = seg(self.from.clone(), self.to.clone(), Monotone::Decreasing);
                if self.from == qi(-1) {
                    s.h0 = Value::Approx(f64::INFINITY);
                }
                vec![s]
            }
            PieceKind::InvSqrtCutoff { .. } => vec![seg(self.from.clone(), self.to.clone(), Monotone::Decreasing)],
            PieceKind::Poly { coeffs } => {
                let c1 = derivative(&Self::coeffs_f64(coeffs));
                let (a, b) = (to_f64(&self.from), to_f64(&self.to));
                let mut cuts: Vec<Q> = vec![self.from.clone()];
                for r in sign_changes(&c1, a, b) {
                    let zr = from_f64_grid(r);
                    if zr > *cuts.last().unwrap() && zr < self.to {
                        cuts.push(zr);
                    }
                }
                cuts.push(self.to.clone());
                cuts.windows(2)
                    .map(|w| {
                        let mid = 0.5 * (to_f64(&w[0]) + to_f64(&w[1]));
                        let dir = if horner(&c1, mid) > 0.0 { Monotone::Increasing } else { Monotone::Decreasing };
                        seg(w[0].clone(), w[1].clone(), dir)
                    })
                    .collect()
            }
            _ => unreachable!("constant kinds handled above"),
        }
    }
}

/// Double-precision copy of a piece for fast evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatPiece {
    pub from: f64,
    pub to: f64,
    kind: FloatKind,
}

#[derive(Clone, Debug, PartialEq)]
enum FloatKind {
    Const(f64),
    Poly([Vec<f64>; 3]),
    Step { lo: f64, hi: f64 },
    InvSqrt(f64),
    Cutoff(f64),
}

impl FloatPiece {
    pub fn new(p: &Piece) -> Self {
        let kind = match &p.kind {
            PieceKind::Zero => FloatKind::Const(0.0),
            PieceKind::SqrtConst { radicand } => FloatKind::Const(to_f64(radicand).sqrt()),
            PieceKind::Poly { coeffs } => {
                let c = Piece::coeffs_f64(coeffs);
                let c1 = derivative(&c);
                let c2 = derivative(&c1);
                FloatKind::Poly([c, c1, c2])
            }
            PieceKind::Step { lo, hi } => FloatKind::Step { lo: to_f64(lo), hi: to_f64(hi) },
            PieceKind::InvSqrt { scale } => FloatKind::InvSqrt(to_f64(scale)),
            PieceKind::InvSqrtCutoff { scale } => FloatKind::Cutoff(to_f64(scale)),
        };
        FloatPiece { from: to_f64(&p.from), to: to_f64(&p.to), kind }
    }

    fn len(&self) -> f64 {
        self.to - self.from
    }

    fn s(&self, z: f64) -> f64 {
        (z - self.from) / self.len()
    }

    pub fn eval(&self, z: f64) -> f64 {
        match &self.kind {
            FloatKind::Const(c) => *c,
            FloatKind::Poly([c, _, _]) => horner(c, z),
            FloatKind::Step { lo, hi } => lo + (hi - lo) * step(self.s(z)),
            FloatKind::InvSqrt(c) => (c / (1.0 + z)).sqrt(),
            FloatKind::Cutoff(c) => (c / (1.0 + z)).sqrt() * (1.0 - step(self.s(z))),
        }
    }

    pub fn jet(&self, z: f64) -> (f64, f64, f64) {
        match &self.kind {
            FloatKind::Const(c) => (*c, 0.0, 0.0),
            FloatKind::Poly([c, c1, c2]) => (horner(c, z), horner(c1, z), horner(c2, z)),
            FloatKind::Step { lo, hi } => {
                let l = self.len();
                let j = step_jet(self.s(z));
                (lo + (hi - lo) * j.e, (hi - lo) * j.d1 / l, (hi - lo) * j.d2 / (l * l))
            }
            FloatKind::InvSqrt(c) => inv_sqrt_jet(*c, z),
            FloatKind::Cutoff(c) => {
                let (f, f1, f2) = inv_sqrt_jet(*c, z);
                let l = self.len();
                let j = step_jet(self.s(z));
                let g = 1.0 - j.e;
                (f * g, f1 * g - f * j.d1 / l, f2 * g - 2.0 * f1 * j.d1 / l - f * j.d2 / (l * l))
            }
        }
    }
}

fn inv_sqrt_jet(c: f64, z: f64) -> (f64, f64, f64) {
    let u = 1.0 + z;
    let f = (c / u).sqrt();
    (f, -0.5 * f / u, 0.75 * f / (u * u))
}

/// Roots of a polynomial in `(a, b)` where it changes sign.
fn sign_changes(c: &[f64], a: f64, b: f64) -> Vec<f64> {
    const N: usize = 4096;
    let mut out = Vec::new();
    let x = |i: usize| a + (b - a) * i as f64 / N as f64;
    let mut prev = horner(c, x(0));
    for i in 1..=N {
        let cur = horner(c, x(i));
        if prev != 0.0 && cur != 0.0 && (prev < 0.0) != (cur < 0.0) {
            let (mut lo, mut hi) = (x(i - 1), x(i));
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if (horner(c, m) < 0.0) == (horner(c, lo) < 0.0) {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        if cur != 0.0 {
            prev = cur;
        }
    }
    out
}

/// A piecewise-defined profile `h` on `[-1, 1]`.
///
/// Invariants: pieces are contiguous and cover `[-1, 1]`; `h` is continuous;
/// a disc profile vanishes on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileDoc", into = "ProfileDoc")]
pub struct AxisymmetricProfile {
    support: Support,
    pieces: Vec<Piece>,
    fast: Vec<FloatPiece>,
}

impl AxisymmetricProfile {
    pub fn new(support: Support, pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return domain("profile has no pieces");
        }
        if pieces[0].from != qi(-1) || pieces.last().unwrap().to != qi(1) {
            return domain("pieces must cover [-1, 1]");
        }
        for (i, p) in pieces.iter().enumerate() {
            if p.from >= p.to {
                return domain(format!("piece {i} has empty range"));
            }
            if i > 0 && pieces[i - 1].to != p.from {
                return domain(format!("pieces {} and {i} are not contiguous", i - 1));
            }
            match &p.kind {
                PieceKind::InvSqrt { scale } if !scale.is_positive() => {
                    return domain("inverse-square-root scale must be positive");
                }
                PieceKind::InvSqrtCutoff { scale } if !scale.is_positive() => {
                    return domain("cutoff scale must be positive");
                }
                PieceKind::SqrtConst { radicand } if radicand.is_negative() => {
                    return domain("negative radicand");
                }
                _ => {}
            }
        }
        for w in pieces.windows(2) {
            let (l, r) = (w[0].value_at(&w[0].to), w[1].value_at(&w[1].from));
            let ok = match (&l, &r) {
                (Value::Exact(a), Value::Exact(b)) => a == b,
                _ => (l.to_f64() - r.to_f64()).abs() <= 1e-9 * l.to_f64().abs().max(1.0),
            };
            if !ok {
                return domain(format!(
                    "discontinuity at z = {}: {} vs {}",
                    crate::rational::fmt_q(&w[0].to),
                    l.to_f64(),
                    r.to_f64()
                ));
            }
        }
        if support == Support::Disc {
            for p in &pieces {
                if p.to > Q::zero() && !p.is_identically_zero() {
                    return domain("a disc profile must vanish on [0, 1]");
                }
            }
        }
        let fast = pieces.iter().map(FloatPiece::new).collect();
        Ok(AxisymmetricProfile { support, pieces, fast })
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_singular(&self) -> bool {
        self.pieces.iter().any(Piece::is_singular)
    }

    /// Indices of the pieces whose closed range contains `z`.
    fn pieces_at(&self, z: &Q) -> Vec<usize> {
        let i = self.pieces.partition_point(|p| p.to < *z);
        let mut out = Vec::with_capacity(2);
        if i < self.pieces.len() && self.pieces[i].from <= *z {
            out.push(i);
            if i + 1 < self.pieces.len() && self.pieces[i + 1].from == *z {
                out.push(i + 1);
            }
        }
        out
    }

    fn piece_at_f64(&self, z: f64) -> &FloatPiece {
        let i = self.fast.partition_point(|p| p.to < z);
        &self.fast[i.min(self.fast.len() - 1)]
    }

    /// `h(z)`, exact when the piece containing `z` allows it.
    pub fn eval(&self, z: &Q) -> Result<Value> {
        let idx = self.pieces_at(z);
        if idx.is_empty() {
            return domain(format!("z = {} outside [-1, 1]", crate::rational::fmt_q(z)));
        }
        for &i in &idx {
            if let Some(x) = self.pieces[i].eval_exact(z) {
                return Ok(Value::Exact(x));
            }
        }
        let p = &self.pieces[idx[0]];
        if p.is_singular() && *z == qi(-1) {
            return domain("profile is singular at the pole");
        }
        Ok(Value::Approx(p.eval_f64(to_f64(z))))
    }

    pub fn eval_f64(&self, z: f64) -> f64 {
        self.piece_at_f64(z).eval(z)
    }

    /// `(h, h', h'')` at `z`, taken from the piece containing `z`.
    pub fn jet_f64(&self, z: f64) -> (f64, f64, f64) {
        self.piece_at_f64(z).jet(z)
    }

    pub fn eval_interval(&self, z: &Q) -> Result<Interval> {
        let idx = self.pieces_at(z);
        let Some(&i) = idx.first() else {
            return domain("z outside [-1, 1]");
        };
        if let Value::Exact(x) = self.eval(z)? {
            return Ok(Interval::from_q(&x));
        }
        Ok(self.pieces[i].eval_interval(z))
    }

    /// `∫_{-1}^{1} h dz`.
    pub fn integral(&self) -> Value {
        self.pieces.iter().fold(Value::zero(), |acc, p| acc.add(&p.integral()))
    }

    pub fn integral_interval(&self) -> Interval {
        self.pieces.iter().fold(Interval::point(0.0), |acc, p| acc + p.integral_interval())
    }

    /// Breakpoints between pieces, excluding `±1`.
    pub fn breakpoints(&self) -> Vec<Q> {
        self.pieces.iter().skip(1).map(|p| p.from.clone()).collect()
    }

    /// Decomposition of `[-1, 1]` into constant or strictly monotone segments,
    /// in increasing `z`.
    pub fn segments(&self) -> Vec<Segment> {
        self.pieces.iter().enumerate().flat_map(|(i, p)| p.segments(i)).collect()
    }

    /// `h + c`; the result lives on the sphere unless `c = 0`.
    pub fn shift(&self, c: &Q) -> Result<Self> {
        if c.is_zero() {
            return Ok(self.clone());
        }
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let kind = match &p.kind {
                    PieceKind::Zero => PieceKind::Poly { coeffs: vec![c.clone()] },
                    PieceKind::Poly { coeffs } => {
                        let mut cs = coeffs.clone();
                        if cs.is_empty() {
                            cs.push(Q::zero());
                        }
                        cs[0] += c;
                        PieceKind::Poly { coeffs: cs }
                    }
                    PieceKind::Step { lo, hi } => PieceKind::Step { lo: lo + c, hi: hi + c },
                    _ => return domain("shift is defined for polynomial and step pieces only"),
                };
                Ok(Piece::new(p.from.clone(), p.to.clone(), kind))
            })
            .collect::<Result<Vec<_>>>()?;
        AxisymmetricProfile::new(Support::Sphere, pieces)
    }

    /// `c h`.
    pub fn scale(&self, c: &Q) -> Result<Self> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let kind = match &p.kind {
                    PieceKind::Zero => PieceKind::Zero,
                    PieceKind::Poly { coeffs } => PieceKind::Poly { coeffs: coeffs.iter().map(|a| a * c).collect() },
                    PieceKind::Step { lo, hi } => PieceKind::Step { lo: lo * c, hi: hi * c },
                    _ => return domain("scale is defined for polynomial and step pieces only"),
                };
                Ok(Piece::new(p.from.clone(), p.to.clone(), kind))
            })
            .collect::<Result<Vec<_>>>()?;
        AxisymmetricProfile::new(self.support, pieces)
    }

    /// `h + g`, defined when on every common sub-interval one summand is
    /// polynomial and the other polynomial or (for a constant summand) a step.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut cuts: Vec<Q> = self.breakpoints().into_iter().chain(other.breakpoints()).collect();
        cuts.push(qi(-1));
        cuts.push(qi(1));
        cuts.sort();
        cuts.dedup();
        let mut pieces = Vec::new();
        for w in cuts.windows(2) {
            let mid = (&w[0] + &w[1]) / qi(2);
            let a = &self.pieces[self.pieces_at(&mid)[0]];
            let b = &other.pieces[other.pieces_at(&mid)[0]];
            let kind = sum_kinds(&a.kind, &b.kind, a, b)?;
            pieces.push(Piece::new(w[0].clone(), w[1].clone(), kind));
        }
        let support = if self.support == Support::Disc && other.support == Support::Disc {
            Support::Disc
        } else {
            Support::Sphere
        };
        AxisymmetricProfile::new(support, pieces)
    }
}

fn poly_of(k: &PieceKind) -> Option<Vec<Q>> {
    match k {
        PieceKind::Zero => Some(vec![]),
        PieceKind::Poly { coeffs } => Some(coeffs.clone()),
        _ => None,
    }
}

fn sum_kinds(a: &PieceKind, b: &PieceKind, pa: &Piece, pb: &Piece) -> Result<PieceKind> {
    if let (Some(x), Some(y)) = (poly_of(a), poly_of(b)) {
        let n = x.len().max(y.len());
        let coeffs = (0..n)
            .map(|j| x.get(j).cloned().unwrap_or_else(Q::zero) + y.get(j).cloned().unwrap_or_else(Q::zero))
            .collect();
        return Ok(PieceKind::Poly { coeffs });
    }
    let step_plus_const = |s: &PieceKind, sp: &Piece, c: &PieceKind, cp: &Piece| -> Option<PieceKind> {
        if let PieceKind::Step { lo, hi } = s {
            if cp.is_constant() && poly_of(c).is_some() && sp.from >= cp.from && sp.to <= cp.to {
                let k = cp.eval_exact(&sp.from)?;
                return Some(PieceKind::Step { lo: lo + &k, hi: hi + &k });
            }
        }
        None
    };
    if let Some(k) = step_plus_const(a, pa, b, pb).or_else(|| step_plus_const(b, pb, a, pa)) {
        return Ok(k);
    }
    domain("sum of these piece kinds is not representable")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum KindDoc {
    Zero,
    Poly { coeffs: Vec<RatStr> },
    Step { lo: RatStr, hi: RatStr },
    InvSqrt { scale: RatStr },
    InvSqrtCutoff { scale: RatStr },
    SqrtConst { radicand: RatStr },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PieceDoc {
    from: RatStr,
    to: RatStr,
    #[serde(flatten)]
    kind: KindDoc,
}

/// Wire form of [`AxisymmetricProfile`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileDoc {
    support: Support,
    pieces: Vec<PieceDoc>,
}

impl TryFrom<ProfileDoc> for AxisymmetricProfile {
    type Error = Error;
    fn try_from(d: ProfileDoc) -> Result<Self> {
        let pieces = d
            .pieces
            .into_iter()
            .map(|p| {
                let kind = match p.kind {
                    KindDoc::Zero => PieceKind::Zero,
                    KindDoc::Poly { coeffs } => PieceKind::Poly { coeffs: coeffs.into_iter().map(|c| c.0).collect() },
                    KindDoc::Step { lo, hi } => PieceKind::Step { lo: lo.0, hi: hi.0 },
                    KindDoc::InvSqrt { scale } => PieceKind::InvSqrt { scale: scale.0 },
                    KindDoc::InvSqrtCutoff { scale } => PieceKind::InvSqrtCutoff { scale: scale.0 },
                    KindDoc::SqrtConst { radicand } => PieceKind::SqrtConst { radicand: radicand.0 },
                };
                Piece::new(p.from.0, p.to.0, kind)
            })
            .collect();
        AxisymmetricProfile::new(d.support, pieces)
    }
}

impl From<AxisymmetricProfile> for ProfileDoc {
    fn from(p: AxisymmetricProfile) -> Self {
        let r = |x: Q| RatStr(x);
        ProfileDoc {
            support: p.support,
            pieces: p
                .pieces
                .into_iter()
                .map(|pc| PieceDoc {
                    from: r(pc.from),
                    to: r(pc.to),
                    kind: match pc.kind {
                        PieceKind::Zero => KindDoc::Zero,
                        PieceKind::Poly { coeffs } => KindDoc::Poly { coeffs: coeffs.into_iter().map(r).collect() },
                        PieceKind::Step { lo, hi } => KindDoc::Step { lo: r(lo), hi: r(hi) },
                        PieceKind::InvSqrt { scale } => KindDoc::InvSqrt { scale: r(scale) },
                        PieceKind::InvSqrtCutoff { scale } => KindDoc::InvSqrtCutoff { scale: r(scale) },
                        PieceKind::SqrtConst { radicand } => KindDoc::SqrtConst { radicand: r(radicand) },
                    },
                })
                .collect(),
        }
    }
}

/// One triangle of a [`TriangleMesh`], with its `ω`-area.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub v: [usize; 3],
    pub area: RatStr,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeshVertexDoc {
    h: RatStr,
}

/// Wire form of [`TriangleMesh`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeshDoc {
    vertices: Vec<MeshVertexDoc>,
    triangles: Vec<Triangle>,
}

/// A piecewise-linear field on a closed triangulated sphere of total area 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeshDoc", into = "MeshDoc")]
pub struct TriangleMesh {
    pub values: Vec<Q>,
    pub triangles: Vec<Triangle>,
}

impl TryFrom<MeshDoc> for TriangleMesh {
    type Error = Error;
    fn try_from(d: MeshDoc) -> Result<Self> {
        let m = TriangleMesh { values: d.vertices.into_iter().map(|v| v.h.0).collect(), triangles: d.triangles };
        m.validate()?;
        Ok(m)
    }
}

impl From<TriangleMesh> for MeshDoc {
    fn from(m: TriangleMesh) -> Self {
        MeshDoc { vertices: m.values.into_iter().map(|h| MeshVertexDoc { h: RatStr(h) }).collect(), triangles: m.triangles }
    }
}

impl TriangleMesh {
    /// Checks the mesh is a closed connected genus-0 surface of area 1.
    pub fn validate(&self) -> Result<()> {
        let n = self.values.len();
        if self.triangles.is_empty() {
            return structural("mesh has no triangles");
        }
        let mut total = Q::zero();
        let mut edges: HashMap<(usize, usize), u32> = HashMap::new();
        let mut used = vec![false; n];
        for (t, tri) in self.triangles.iter().enumerate() {
            let [a, b, c] = tri.v;
            if a >= n || b >= n || c >= n {
                return structural(format!("triangle {t} references a missing vertex"));
            }
            if a == b || b == c || a == c {
                return structural(format!("triangle {t} is degenerate"));
            }
            if !tri.area.0.is_positive() {
                return structural(format!("triangle {t} has non-positive area"));
            }
            total += &tri.area.0;
            for (x, y) in [(a, b), (b, c), (c, a)] {
                *edges.entry((x.min(y), x.max(y))).or_default() += 1;
            }
            used[a] = true;
            used[b] = true;
            used[c] = true;
        }
        if total != qi(1) {
            return structural(format!("total area is {}, not 1", crate::rational::fmt_q(&total)));
        }
        if used.iter().any(|u| !u) {
            return structural("mesh has isolated vertices");
        }
        if let Some(((x, y), c)) = edges.iter().find(|(_, &c)| c != 2) {
            return structural(format!("edge ({x}, {y}) lies on {c} triangles; the surface is not closed"));
        }
        let mut uf = crate::reeb::UnionFind::new(n);
        for &(x, y) in edges.keys() {
            uf.union(x, y);
        }
        if (0..n).any(|v| uf.find(v) != uf.find(0)) {
            return structural("mesh is not connected");
        }
        let euler = n as i64 - edges.len() as i64 + self.triangles.len() as i64;
        if euler != 2 {
            return structural(format!("Euler characteristic {euler}; only genus 0 is supported"));
        }
        Ok(())
    }

    /// A sphere made of rings of constant value.
    ///
    /// `values` lists the south pole, each ring, then the north pole.
    /// `bands[j]` is the area between consecutive entries of `values`.
    pub fn rings(values: &[Q], bands: &[Q], n_theta: usize) -> Result<Self> {
        if values.len() < 2 || bands.len() != values.len() - 1 || n_theta < 3 {
            return domain("ring mesh needs two poles, one band per gap and n_theta >= 3");
        }
        let m = values.len() - 2;
        let mut vals = vec![values[0].clone()];
        for r in 0..m {
            vals.extend(std::iter::repeat_n(values[r + 1].clone(), n_theta));
        }
        vals.push(values[m + 1].clone());
        let north = vals.len() - 1;
        let ring = |r: usize, j: usize| 1 + r * n_theta + (j % n_theta);
        let nt = Q::from_integer(BigInt::from(n_theta));
        let mut tris = Vec::new();
        if m == 0 {
            return domain("ring mesh needs at least one ring");
        }
        for j in 0..n_theta {
            tris.push(Triangle { v: [0, ring(0, j + 1), ring(0, j)], area: RatStr(&bands[0] / &nt) });
        }
        for r in 0..m - 1 {
            let a = RatStr(&bands[r + 1] / (&nt * qi(2)));
            for j in 0..n_theta {
                tris.push(Triangle { v: [ring(r, j), ring(r, j + 1), ring(r + 1, j)], area: a.clone() });
                tris.push(Triangle { v: [ring(r, j + 1), ring(r + 1, j + 1), ring(r + 1, j)], area: a.clone() });
            }
        }
        for j in 0..n_theta {
            tris.push(Triangle { v: [ring(m - 1, j), ring(m - 1, j + 1), north], area: RatStr(&bands[m] / &nt) });
        }
        let mesh = TriangleMesh { values: vals, triangles: tris };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Axisymmetric sampling of a profile on `n_rings` equally spaced rings
    /// plus the profile's breakpoints.
    ///
    /// Values are exact wherever the profile is; the field is linear in `z`
    /// between rings, which reproduces piecewise-linear profiles exactly.
    pub fn sample_profile(p: &AxisymmetricProfile, n_theta: usize, n_rings: usize) -> Result<Self> {
        if p.is_singular() {
            return domain("cannot sample a singular profile");
        }
        let mut zs: Vec<Q> = (1..=n_rings).map(|j| q(2 * j as i64, n_rings as i64 + 1) - qi(1)).collect();
        zs.extend(p.breakpoints());
        zs.push(qi(-1));
        zs.push(qi(1));
        zs.sort();
        zs.dedup();
        let values = zs.iter().map(|z| p.eval(z).map(|v| v.to_q())).collect::<Result<Vec<_>>>()?;
        let bands: Vec<Q> = zs.windows(2).map(|w| (&w[1] - &w[0]) / qi(2)).collect();
        TriangleMesh::rings(&values, &bands, n_theta)
    }
}

/// The frozen profiles used throughout the tests and the CLI examples.
pub mod fixtures {
    use super::*;

    fn poly(from: Q, to: Q, coeffs: &[Q]) -> Piece {
        Piece::new(from, to, PieceKind::Poly { coeffs: coeffs.to_vec() })
    }

    fn zero(from: Q, to: Q) -> Piece {
        Piece::new(from, to, PieceKind::Zero)
    }

    fn stepp(from: Q, to: Q, lo: Q, hi: Q) -> Piece {
        Piece::new(from, to, PieceKind::Step { lo, hi })
    }

    /// `h = -2(z + 1/2)` on `[-1, -1/2]`, zero after.
    pub fn ramp() -> AxisymmetricProfile {
        AxisymmetricProfile::new(
            Support::Disc,
            vec![poly(qi(-1), q(-1, 2), &[qi(-1), qi(-2)]), zero(q(-1, 2), qi(1))],
        )
        .unwrap()
    }

    /// Zero outside `[-9/10, -1/10]`, linear up to `1` at `-1/2` and back.
    pub fn tent() -> AxisymmetricProfile {
        AxisymmetricProfile::new(
            Support::Disc,
            vec![
                zero(qi(-1), q(-9, 10)),
                poly(q(-9, 10), q(-1, 2), &[q(9, 4), q(5, 2)]),
                poly(q(-1, 2), q(-1, 10), &[q(-1, 4), q(-5, 2)]),
                zero(q(-1, 10), qi(1)),
            ],
        )
        .unwrap()
    }

    /// `h = z` on the sphere.
    pub fn height() -> AxisymmetricProfile {
        AxisymmetricProfile::new(Support::Sphere, vec![poly(qi(-1), qi(1), &[qi(0), qi(1)])]).unwrap()
    }

    pub fn zero_profile() -> AxisymmetricProfile {
        AxisymmetricProfile::new(Support::Disc, vec![zero(qi(-1), qi(1))]).unwrap()
    }

    /// Flat step from `height` at the pole down to zero at `end`.
    pub fn smooth_cap(height: Q, end: Q) -> AxisymmetricProfile {
        AxisymmetricProfile::new(Support::Disc, vec![stepp(qi(-1), end.clone(), height, qi(0)), zero(end, qi(1))])
            .unwrap()
    }

    /// Smooth monotone relative of [`ramp`] with the same tree shape.
    pub fn smooth_ramp() -> AxisymmetricProfile {
        smooth_cap(qi(1), q(-1, 2))
    }

    /// Smooth relative of [`tent`] with the same breakpoints.
    pub fn smooth_tent() -> AxisymmetricProfile {
        AxisymmetricProfile::new(
            Support::Disc,
            vec![
                zero(qi(-1), q(-9, 10)),
                stepp(q(-9, 10), q(-1, 2), qi(0), qi(1)),
                stepp(q(-1, 2), q(-1, 10), qi(1), qi(0)),
                zero(q(-1, 10), qi(1)),
            ],
        )
        .unwrap()
    }

    /// Value `1/2` at the pole, rising to `1` on a circle, then down to zero.
    pub fn offset_bump() -> AxisymmetricProfile {
        AxisymmetricProfile::new(
            Support::Disc,
            vec![
                stepp(qi(-1), q(-3, 5), q(1, 2), qi(1)),
                stepp(q(-3, 5), q(-1, 5), qi(1), qi(0)),
                zero(q(-1, 5), qi(1)),
            ],
        )
        .unwrap()
    }

    /// Two PL bumps of heights 1 and 2 separated by a flat band.
    ///
    /// Rings from the south pole: apex at 1, a ring at 0, a flat band at 0,
    /// a ring at 1, apex at 2. Each of the four bands has area 1/4.
    pub fn two_bump_mesh(n_theta: usize) -> TriangleMesh {
        let values = [qi(1), qi(0), qi(0), qi(1), qi(2)];
        let bands = [q(1, 4), q(1, 4), q(1, 4), q(1, 4)];
        TriangleMesh::rings(&values, &bands, n_theta).unwrap()
    }

    /// All frozen profiles by name, for the CLI and the demo.
    pub fn by_name(name: &str) -> Option<AxisymmetricProfile> {
        Some(match name {
            "ramp" => ramp(),
            "tent" => tent(),
            "height" => height(),
            "zero" => zero_profile(),
            "smooth-ramp" => smooth_ramp(),
            "smooth-tent" => smooth_tent(),
            "offset-bump" => offset_bump(),
            "twist" => crate::twists::twist_t_profile(),
            "sphere-twist" => crate::twists::sphere_twist_profile(),
            _ => return None,
        })
    }

    pub const NAMES: &[&str] =
        &["ramp", "tent", "height", "zero", "smooth-ramp", "smooth-tent", "offset-bump", "twist", "sphere-twist"];
}
