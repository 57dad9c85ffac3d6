//! The flat smooth step used for every cutoff and interpolation.
//!
//! `E(s) = σ(1/(1-s) - 1/s)` on `(0,1)`, `0` for `s ≤ 0`, `1` for `s ≥ 1`,
//! with `σ` the logistic function. `E` is C^∞, strictly increasing on
//! `(0,1)`, all derivatives vanish at both ends, and `E(s) + E(1-s) = 1`,
//! hence `∫₀¹ E = 1/2`.

use crate::interval::Interval;

/// Value and first two derivatives of `E` at `s`.
#[derive(Clone, Copy, Debug)]
pub struct StepJet {
    pub e: f64,
    pub d1: f64,
    pub d2: f64,
}

pub fn step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        logistic(1.0 / (1.0 - s) - 1.0 / s)
    }
}

pub fn step_jet(s: f64) -> StepJet {
    if s <= 0.0 || s >= 1.0 {
        return StepJet { e: step(s), d1: 0.0, d2: 0.0 };
    }
    let g = 1.0 / (1.0 - s) - 1.0 / s;
    let g1 = 1.0 / ((1.0 - s) * (1.0 - s)) + 1.0 / (s * s);
    let g2 = 2.0 / ((1.0 - s).powi(3)) - 2.0 / (s * s * s);
    let e = logistic(g);
    // σ' = e^{-|g|}/(1+e^{-|g|})² avoids overflow for large |g|.
    let t = (-g.abs()).exp();
    let sp = t / ((1.0 + t) * (1.0 + t));
    let spp = sp * (1.0 - 2.0 * e);
    StepJet { e, d1: sp * g1, d2: spp * g1 * g1 + sp * g2 }
}

/// Upper bound on `|E'|`, checked by a dense scan in the tests.
pub const STEP_SLOPE_BOUND: f64 = 2.5;

/// Enclosure of `1 - E(s*)` for any `s*` with `|s* - s| ≤ s_err`.
pub fn step_complement_interval(s: f64, s_err: f64) -> Interval {
    let g = 1.0 - step(s);
    let e = 64.0 * f64::EPSILON + STEP_SLOPE_BOUND * s_err + 1e-300;
    Interval::new((g - e).max(0.0), (g + e).min(1.0))
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let t = x.exp();
        t / (1.0 + t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_symmetry() {
        assert_eq!(step(0.0), 0.0);
        assert_eq!(step(1.0), 1.0);
        assert!((step(0.5) - 0.5).abs() < 1e-15);
        for i in 1..100 {
            let s = i as f64 / 100.0;
            assert!((step(s) + step(1.0 - s) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for i in 1..50 {
            let s = i as f64 / 50.0;
            let h = 1e-5;
            let j = step_jet(s);
            let d1 = (step(s + h) - step(s - h)) / (2.0 * h);
            let d2 = (step(s + h) - 2.0 * step(s) + step(s - h)) / (h * h);
            assert!((j.d1 - d1).abs() < 1e-6 * (1.0 + d1.abs()), "s={s}");
            assert!((j.d2 - d2).abs() < 1e-3 * (1.0 + d2.abs()), "s={s}");
        }
    }

    #[test]
    fn monotone() {
        let mut prev = 0.0;
        for i in 1..=1000 {
            let v = step(i as f64 / 1000.0);
            assert!(v >= prev);
            prev = v;
        }
    }
}
