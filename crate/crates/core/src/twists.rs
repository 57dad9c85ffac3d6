//! Singular twist maps and the prescribed-sequence construction.
//!
//! The disc twist `T` has profile `sqrt(2/(1+z))` near the pole, cut off to
//! zero by `z = -1/2`. Its Weyl sequence `2(k f_k - (k+1) Cal)` is bounded
//! above by `-sqrt(k+1)` and so diverges. The sphere twist `T'` uses the
//! same profile on all of `(-1, 1]`, and `(2^k - 1) g_k(T')` diverges.

use num_traits::{Signed, Zero};

use crate::error::{domain, Error, Result};
use crate::interval::Interval;
use crate::model::{AxisymmetricProfile, Piece, PieceKind, Support, Value};
use crate::rational::{q, qi, Q};
use crate::smooth::STEP_SLOPE_BOUND;

pub fn twist_t_profile() -> AxisymmetricProfile {
    AxisymmetricProfile::new(
        Support::Disc,
        vec![
            Piece::new(qi(-1), q(-3, 4), PieceKind::InvSqrt { scale: qi(2) }),
            Piece::new(q(-3, 4), q(-1, 2), PieceKind::InvSqrtCutoff { scale: qi(2) }),
            Piece::new(q(-1, 2), qi(1), PieceKind::Zero),
        ],
    )
    .expect("twist profile is valid")
}

pub fn sphere_twist_profile() -> AxisymmetricProfile {
    AxisymmetricProfile::new(Support::Sphere, vec![Piece::new(qi(-1), qi(1), PieceKind::InvSqrt { scale: qi(2) })])
        .expect("sphere twist profile is valid")
}

/// Member `n ≥ 1` of the smoothing sequence of a profile singular at the pole.
///
/// On the cap `[-1, -1 + 4^-n]` the profile is replaced by its value at the
/// cap edge, `sqrt(scale 4^n)`; elsewhere it is unchanged. The result is
/// monotone on the cap, has sup norm `sqrt(scale) 2^n` there, and
/// consecutive members differ by at most `sqrt(scale) 2^n` in sup norm.
/// A nonsingular profile is returned unchanged.
pub fn make_smoothing(base: &AxisymmetricProfile, n: i64) -> Result<AxisymmetricProfile> {
    if n <= 0 {
        return domain("smoothing index must be positive");
    }
    if !base.is_singular() {
        return Ok(base.clone());
    }
    let first = &base.pieces()[0];
    let PieceKind::InvSqrt { scale } = &first.kind else {
        return domain("only inverse-square-root singularities can be smoothed");
    };
    let four_n = Q::from_integer(num_traits::pow(num_bigint::BigInt::from(4), n as usize));
    let cap = qi(-1) + qi(1) / &four_n;
    if cap > first.to {
        return domain("smoothing cap extends past the singular piece");
    }
    let mut pieces = vec![Piece::new(qi(-1), cap.clone(), PieceKind::SqrtConst { radicand: scale * &four_n })];
    if cap < first.to {
        pieces.push(Piece::new(cap, first.to.clone(), first.kind.clone()));
    }
    pieces.extend(base.pieces()[1..].iter().cloned());
    AxisymmetricProfile::new(base.support(), pieces)
}

/// Outcome of one certified inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Certified,
    Failed,
}

impl Verdict {
    pub fn label(&self, success: &'static str) -> &'static str {
        match self {
            Verdict::Certified => success,
            Verdict::Failed => "failed",
        }
    }
}

/// One row of the disc-twist sequence.
#[derive(Clone, Debug)]
pub struct TwistRow {
    pub k: usize,
    /// Enclosure of `2(k f_k(T) - (k+1) Cal(T))`.
    pub value: Interval,
    /// `-sqrt(k+1)`, the value of `-h(a_1)`.
    pub bound: f64,
    pub verdict: Verdict,
}

/// Enclosures of `1/sqrt(i)` for `i = 0..n` (entry 0 unused).
fn inv_sqrt_table(n: usize) -> Vec<Interval> {
    let mut t = Vec::with_capacity(n + 1);
    t.push(Interval::point(0.0));
    for i in 1..=n {
        t.push(Interval::point(i as f64).sqrt().recip());
    }
    t
}

/// Enclosure of `2 Σ_{i≤k} h(a_i) - (k+1) ∫ h dz` for the disc twist, with
/// `a_i = -1 + 2i/(k+1)`.
///
/// Points with `a_i ≤ -3/4` use `h(a_i) = sqrt((k+1)/i)`. Points on the
/// cutoff use a float step value widened by 64 ulps plus the slope bound
/// times the rounding of the step argument.
fn twist_value(k: usize, inv_sqrt: &[Interval], prefix: &[Interval], integral: Interval) -> Interval {
    let kp1 = (k + 1) as f64;
    let root = Interval::point(kp1).sqrt();
    // a_i ≤ -3/4  ⇔  8i ≤ k+1.
    let m = (k + 1) / 8;
    let mut sum = root * prefix[m];
    // a_i < -1/2  ⇔  4i ≤ k.
    let upper = k / 4;
    // Nonnegative terms summed in floats; recursive summation of n terms
    // with one product each is off by at most (n+1)u times the true sum.
    let inv = 1.0 / kp1;
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    let terms = upper.saturating_sub(m);
    for (i, a) in inv_sqrt.iter().enumerate().take(upper + 1).skip(m + 1) {
        // |s - fl(s)| ≤ 3u|s| with the reciprocal precomputed.
        let s = ((8 * i) as f64 - kp1) * inv;
        let g = 1.0 - step_fast(s);
        let e = 64.0 * f64::EPSILON + STEP_SLOPE_BOUND * 3.0 * f64::EPSILON * s.abs() + 1e-300;
        lo += a.lo * (g - e).max(0.0);
        hi += a.hi * (g + e).min(1.0);
    }
    let gamma = (terms as f64 + 2.0) * f64::EPSILON * 1.01;
    let cut = Interval::new((lo * (1.0 - gamma)).max(0.0), hi * (1.0 + gamma));
    sum = sum + root * cut;
    sum.scale(2.0) - integral.scale(kp1)
}

/// `E(s)` for `0 < s < 1` with one division for the exponent.
#[inline]
fn step_fast(s: f64) -> f64 {
    let g = (2.0 * s - 1.0) / (s * (1.0 - s));
    if g >= 0.0 {
        1.0 / (1.0 + (-g).exp())
    } else {
        let t = g.exp();
        t / (1.0 + t)
    }
}

/// Certified disc-twist sequence for `7 ≤ k ≤ k_max`.
pub fn twist_t_sequence(k_max: usize) -> Result<Vec<TwistRow>> {
    if k_max < 7 {
        return domain("the twist certificate starts at k = 7");
    }
    let integral = twist_t_profile().integral_interval();
    let n = (k_max + 1) / 4 + 1;
    let inv_sqrt = inv_sqrt_table(n);
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(Interval::point(0.0));
    for i in 1..=n {
        let next = prefix[i - 1] + inv_sqrt[i];
        prefix.push(next);
    }
    let row = |k: usize| {
        let value = twist_value(k, &inv_sqrt, &prefix, integral);
        let root = Interval::point((k + 1) as f64).sqrt();
        let verdict = if value.hi <= -root.hi { Verdict::Certified } else { Verdict::Failed };
        TwistRow { k, value, bound: -((k + 1) as f64).sqrt(), verdict }
    };
    #[cfg(feature = "parallel")]
    let rows = {
        use rayon::prelude::*;
        (7..=k_max).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows = (7..=k_max).map(row).collect();
    Ok(rows)
}

/// Smallest `K` such that the rows from `K` on are certified strictly
/// decreasing (each upper end below the previous lower end).
pub fn decreasing_from(rows: &[TwistRow]) -> Option<usize> {
    let mut from = rows.last()?.k;
    for w in rows.windows(2).rev() {
        if w[1].value.hi < w[0].value.lo {
            from = w[0].k;
        } else {
            break;
        }
    }
    Some(from)
}

/// Exact-precision oracle for the sphere twist sums.
///
/// `H(n) = Σ_{i=1}^{n} i^{-1/2}`, enclosed by direct outward-rounded
/// summation up to `2^20` and by Euler-Maclaurin from `2^16` beyond.
pub struct HarmonicHalf {
    head: Vec<Interval>,
}

const DIRECT_LIMIT: usize = 1 << 20;
const EM_BASE: usize = 1 << 16;

impl HarmonicHalf {
    pub fn new() -> Self {
        let mut head = Vec::with_capacity(DIRECT_LIMIT + 1);
        head.push(Interval::point(0.0));
        for i in 1..=DIRECT_LIMIT {
            let t = Interval::point(i as f64).sqrt().recip();
            let next = head[i - 1] + t;
            head.push(next);
        }
        HarmonicHalf { head }
    }

    /// Enclosure of `H(n)`.
    pub fn sum(&self, n: u64) -> Interval {
        if (n as usize) <= DIRECT_LIMIT {
            return self.head[n as usize];
        }
        let m = EM_BASE as f64;
        let nn = n as f64;
        let sm = Interval::point(m).sqrt();
        let sn = Interval::point(nn).sqrt();
        // f = x^{-1/2}, f' = -x^{-3/2}/2, f''' = -15 x^{-7/2}/8.
        let f = |s: Interval| s.recip();
        let f1 = |x: f64, s: Interval| (s * Interval::point(x)).recip().scale(-0.5);
        let f3 = |x: f64, s: Interval| (s * Interval::point(x * x * x)).recip().scale(-15.0 / 8.0);
        let integral = (sn - sm).scale(2.0);
        let trap = (f(sn) - f(sm)).scale(0.5);
        let b2 = (f1(nn, sn) - f1(m, sm)) * Interval::point(1.0).div(&Interval::point(12.0));
        let b4 = (f3(nn, sn) - f3(m, sm)) * Interval::point(-1.0).div(&Interval::point(720.0));
        // Remainder after two correction terms is below 1e-16 for M = 2^16.
        (self.head[EM_BASE] + integral + trap + b2 + b4).widen(1e-15)
    }

    /// `S(k) = sqrt(2^k) H(2^k - 1)`.
    pub fn s(&self, k: u32) -> Interval {
        pow2_sqrt(k) * self.sum((1u64 << k) - 1)
    }

    /// Enclosure of `Σ_{i=1}^{n} (-1)^{i+1} i^{-1/2}` for odd `n`.
    ///
    /// Direct for `n ≤ 2^20`; beyond that, partial sums with an odd number
    /// of terms decrease to the limit and those with an even number
    /// increase to it, so the value lies between the sums at `2^20` and
    /// `2^20 - 1` terms.
    pub fn alternating(&self, n: u64) -> Interval {
        assert!(n % 2 == 1, "odd number of terms expected");
        let direct = |n: usize| {
            let mut acc = Interval::point(0.0);
            for j in (1..n).step_by(2) {
                let a = Interval::point(j as f64).sqrt().recip();
                let b = Interval::point((j + 1) as f64).sqrt().recip();
                acc = acc + (a - b);
            }
            if n % 2 == 1 {
                acc = acc + Interval::point(n as f64).sqrt().recip();
            }
            acc
        };
        if (n as usize) <= DIRECT_LIMIT {
            return direct(n as usize);
        }
        let even = direct(DIRECT_LIMIT);
        let odd = direct(DIRECT_LIMIT - 1);
        Interval::new(even.lo, odd.hi)
    }
}

impl Default for HarmonicHalf {
    fn default() -> Self {
        Self::new()
    }
}

fn pow2_sqrt(k: u32) -> Interval {
    let base = Interval::point(2f64.powi((k / 2) as i32));
    if k.is_multiple_of(2) { base } else { base * Interval::point(2.0).sqrt() }
}

/// One row of the sphere-twist table.
#[derive(Clone, Debug)]
pub struct SphereTwistRow {
    pub k: u32,
    /// Enclosure of `(2^k - 1) g_k(T')`.
    pub value: Interval,
    /// Certified lower bound `sqrt(2^k)(1 - 1/sqrt 2) - C_k`.
    pub bound: f64,
    /// Enclosure of `S(k) - 2 S(k-1)`.
    pub leading: Interval,
    /// Enclosure of `C_k = S(k-1) / (2^{k-1} - 1)`.
    pub tail: Interval,
    pub verdict: Verdict,
}

/// Sphere-twist rows for `2 ≤ k ≤ k_max` (`k_max ≤ 62`).
///
/// `(2^k-1) g_k(T') = S(k) - 2S(k-1) - S(k-1)/(2^{k-1}-1)` and
/// `S(k) - 2S(k-1) = sqrt(2^k) Σ_{i<2^k} (-1)^{i+1} i^{-1/2}`.
pub fn sphere_twist_table(k_max: u32) -> Result<Vec<SphereTwistRow>> {
    if !(2..=62).contains(&k_max) {
        return domain("sphere twist table needs 2 ≤ k_max ≤ 62");
    }
    let hh = HarmonicHalf::new();
    let c0 = Interval::point(1.0) - Interval::point(2.0).sqrt().recip();
    let mut rows = Vec::new();
    for k in 2..=k_max {
        let n = 1u64 << k;
        let leading = pow2_sqrt(k) * hh.alternating(n - 1);
        let tail = hh.s(k - 1).div(&Interval::point(((1u64 << (k - 1)) - 1) as f64));
        let value = leading - tail;
        let lower = pow2_sqrt(k) * c0 - tail;
        let ok = leading.lo >= (pow2_sqrt(k) * c0).hi && value.lo >= lower.lo;
        rows.push(SphereTwistRow {
            k,
            value,
            bound: lower.lo,
            leading,
            tail,
            verdict: if ok { Verdict::Certified } else { Verdict::Failed },
        });
    }
    Ok(rows)
}

/// A profile whose link sequence is prescribed: `f_i = s_i` exactly for
/// `2 ≤ i ≤ K`, where `seq = [s_2, ..., s_K]`.
///
/// `H = 0` on `[-1, 0]`. Stage `k` fixes `H` at `w = -1 + (2k+2)/(k+2)` so
/// that `f_{k+1}` comes out right, and joins the previous value at
/// `-1 + 2k/(k+1)` to it by a flat smooth step. The step is placed inside
/// a gap of the sample points `-1 + 2i/(m+1)`, `m ≤ K`, so every sample
/// point lies where `H` is constant and the `f_i` are exact.
pub fn prescribe_fk_sequence(seq: &[Q]) -> Result<AxisymmetricProfile> {
    let kmax = seq.len() + 1;
    let mut samples: Vec<Q> = Vec::new();
    for m in 1..=kmax {
        for i in 1..=m {
            samples.push(qi(-1) + q(2 * i as i64, m as i64 + 1));
        }
    }
    samples.sort();
    samples.dedup();

    // Anchors (z, H(z)) at which H is known, in increasing z.
    let mut pieces = vec![Piece::new(qi(-1), qi(0), PieceKind::Zero)];
    let mut known: Vec<(Q, Q)> = vec![(qi(0), Q::zero())];
    let value_at = |pieces: &[Piece], z: &Q| -> Q {
        let p = pieces.iter().find(|p| p.from <= *z && *z <= p.to).expect("point is covered");
        p.eval_exact(z).expect("sample points avoid step interiors")
    };
    for k in 1..kmax {
        let zk = qi(-1) + q(2 * k as i64, k as i64 + 1);
        let w = qi(-1) + q(2 * k as i64 + 2, k as i64 + 2);
        let kk = Q::from_integer((k as i64 + 1).into());
        let mut rest = Q::zero();
        for i in 1..=k {
            let z = qi(-1) + q(2 * i as i64, k as i64 + 2);
            rest += value_at(&pieces, &z);
        }
        let hw = kk * &seq[k - 1] - rest;
        let hz = known.last().unwrap().1.clone();
        debug_assert_eq!(known.last().unwrap().0, zk);

        let mut cuts: Vec<Q> = vec![zk.clone()];
        cuts.extend(samples.iter().filter(|s| **s > zk && **s < w).cloned());
        cuts.push(w.clone());
        let (ga, gb) = cuts
            .windows(2)
            .max_by(|x, y| (&x[1] - &x[0]).cmp(&(&y[1] - &y[0])))
            .map(|x| (x[0].clone(), x[1].clone()))
            .expect("two cut points");
        let quarter = (&gb - &ga) / qi(4);
        let (sa, sb) = (&ga + &quarter, &gb - &quarter);
        pieces.push(Piece::new(zk.clone(), sa.clone(), PieceKind::Poly { coeffs: vec![hz.clone()] }));
        pieces.push(Piece::new(sa, sb.clone(), PieceKind::Step { lo: hz, hi: hw.clone() }));
        pieces.push(Piece::new(sb, w.clone(), PieceKind::Poly { coeffs: vec![hw.clone()] }));
        known.push((w, hw));
    }
    let (zl, hl) = known.last().unwrap().clone();
    if zl < qi(1) {
        pieces.push(Piece::new(zl, qi(1), PieceKind::Poly { coeffs: vec![hl] }));
    }
    AxisymmetricProfile::new(Support::Sphere, pieces).map_err(|e| match e {
        Error::Domain(m) => Error::Domain(format!("prescribed profile invalid: {m}")),
        other => other,
    })
}

/// `true` when `v` is exactly `x`.
pub fn is_exactly(v: &Value, x: &Q) -> bool {
    v.exact().is_some_and(|y| y == x)
}

/// Sign helper for verdict messages.
pub fn describe_sign(x: &Q) -> &'static str {
    if x.is_positive() {
        "positive"
    } else if x.is_zero() {
        "zero"
    } else {
        "negative"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::to_f64;
    use crate::smooth::step;

    #[test]
    fn fast_step_tracks_reference() {
        for j in 1..100_000 {
            let s = j as f64 / 100_000.0;
            assert!((step_fast(s) - step(s)).abs() <= 8.0 * f64::EPSILON, "s = {s}");
        }
    }

    #[test]
    fn twist_profile_is_continuous_and_monotone() {
        let p = twist_t_profile();
        let mut prev = f64::INFINITY;
        for j in 1..=2000 {
            let z = -1.0 + 1.5 * j as f64 / 2000.0;
            let v = p.eval_f64(z);
            assert!(v <= prev + 1e-15, "not monotone at {z}");
            prev = v;
        }
        assert!((p.eval_f64(-0.75) - 8f64.sqrt()).abs() < 1e-14);
        assert_eq!(p.eval_f64(-0.5), 0.0);
    }

    #[test]
    fn smoothing_sup_norms_and_steps() {
        let t = twist_t_profile();
        assert!(make_smoothing(&t, 0).is_err());
        let mut prev: Option<AxisymmetricProfile> = None;
        for n in 1..=6 {
            let h = make_smoothing(&t, n).unwrap();
            let plateau = 2f64.powi(n as i32) * 2f64.sqrt();
            assert!((h.eval_f64(-1.0) - plateau).abs() < 1e-12);
            assert!(!h.is_singular());
            if let Some(p) = prev {
                let mut worst: f64 = 0.0;
                for j in 0..=4000 {
                    let z = -1.0 + 0.5 * j as f64 / 4000.0;
                    worst = worst.max((h.eval_f64(z) - p.eval_f64(z)).abs());
                }
                let allowed = 2f64.powi(n as i32 - 1) * 2f64.sqrt();
                assert!(worst <= allowed * (1.0 + 1e-12), "n={n}: {worst} > {allowed}");
            }
            prev = Some(h);
        }
        let ramp = crate::model::fixtures::ramp();
        assert_eq!(make_smoothing(&ramp, 3).unwrap(), ramp);
    }

    #[test]
    fn step_slope_bound_holds() {
        let mut worst: f64 = 0.0;
        for j in 1..100_000 {
            worst = worst.max(crate::smooth::step_jet(j as f64 / 100_000.0).d1.abs());
        }
        assert!(worst < crate::smooth::STEP_SLOPE_BOUND, "{worst}");
    }

    #[test]
    fn twist_small_k_matches_float_recomputation() {
        let p = twist_t_profile();
        let integral = p.integral().to_f64();
        let rows = twist_t_sequence(60).unwrap();
        for r in rows {
            let k = r.k;
            let sum: f64 = (1..=k).map(|i| p.eval_f64(-1.0 + 2.0 * i as f64 / (k + 1) as f64)).sum();
            let direct = 2.0 * sum - (k + 1) as f64 * integral;
            assert!(r.value.contains(direct) || (r.value.mid() - direct).abs() < 1e-9, "k={k}: {:?} vs {direct}", r.value);
            assert!(r.value.width() < 1e-8);
        }
    }

    #[test]
    fn harmonic_half_matches_direct_sum() {
        let hh = HarmonicHalf::new();
        for n in [1u64, 2, 3, 100, 65_537, 1 << 20] {
            let direct: f64 = (1..=n).map(|i| 1.0 / (i as f64).sqrt()).sum();
            assert!(hh.sum(n).contains(direct) || (hh.sum(n).mid() - direct).abs() < 1e-9);
        }
        // The Euler-Maclaurin branch agrees with direct summation past 2^20.
        let n = (1u64 << 20) + 12_345;
        let direct: f64 = (1..=n).map(|i| 1.0 / (i as f64).sqrt()).sum();
        assert!((hh.sum(n).mid() - direct).abs() < 1e-8);
    }

    #[test]
    fn prescription_hits_anchor() {
        let p = prescribe_fk_sequence(&[qi(1)]).unwrap();
        assert_eq!(p.eval(&q(1, 3)).unwrap(), Value::Exact(qi(2)));
        assert_eq!(p.eval(&q(-1, 3)).unwrap(), Value::Exact(qi(0)));
        let z = prescribe_fk_sequence(&[qi(0), qi(0), qi(0)]).unwrap();
        assert!((-10..=10).all(|j| to_f64(&z.eval(&q(j, 10)).unwrap().to_q()) == 0.0));
    }
}
