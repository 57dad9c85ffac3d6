//! Browser bindings: three operations, each returning a JSON string.
//!
//! The `*_json` functions hold the logic and run natively in tests; the
//! exported wrappers only convert errors for JavaScript.

use serde_json::json;
use wasm_bindgen::prelude::*;

use ruelle_weyl::model::fixtures;
use ruelle_weyl::rational::{fmt_q, to_f64};
use ruelle_weyl::reeb::tree_from_profile;
use ruelle_weyl::spectral::{audit, extrapolate_limit, place_link, weyl_sequence, WeylInput, WeylMode};
use ruelle_weyl::twists::{twist_t_sequence, Verdict};
use ruelle_weyl::{AxisymmetricProfile, Support};

/// Limits on `k` that keep the page responsive on the main thread.
pub const K_LIMIT: usize = 2000;
pub const TWIST_LIMIT: usize = 20_000;

fn fixture(name: &str) -> Result<AxisymmetricProfile, String> {
    fixtures::by_name(name).ok_or_else(|| format!("unknown fixture `{name}`"))
}

/// Fixtures with a finite Weyl limit, as a JSON array.
pub fn fixture_names_json() -> String {
    let names: Vec<&str> =
        fixtures::NAMES.iter().copied().filter(|n| !matches!(*n, "twist" | "sphere-twist")).collect();
    json!(names).to_string()
}

/// `{"mode", "target", "limit", "error", "converged", "points": [[k, lo, hi], ...]}`.
pub fn weyl_curve_json(name: &str, k_max: usize) -> Result<String, String> {
    let p = fixture(name)?;
    if !(4..=K_LIMIT).contains(&k_max) {
        return Err(format!("k_max must lie in 4..={K_LIMIT}"));
    }
    let mode = if p.support() == Support::Disc { WeylMode::Disc } else { WeylMode::Sphere };
    let ks: Vec<usize> = (1..=k_max).collect();
    let seq = weyl_sequence(WeylInput::Profile(&p), &ks, mode).map_err(|e| e.to_string())?;
    let ex = extrapolate_limit(&seq.entries).map_err(|e| e.to_string())?;
    let points: Vec<_> = seq.entries.iter().map(|e| json!([e.k, e.lo, e.hi])).collect();
    Ok(json!({
        "mode": mode,
        "target": to_f64(&seq.target),
        "target_exact": fmt_q(&seq.target),
        "limit": ex.limit,
        "error": if ex.error.is_finite() { json!(ex.error) } else { json!(null) },
        "converged": ex.converged,
        "points": points,
    })
    .to_string())
}

/// `{"rows": [[k, value_lo, value_hi, bound, certified], ...], "all_certified"}`.
pub fn twist_curve_json(k_max: usize) -> Result<String, String> {
    if !(7..=TWIST_LIMIT).contains(&k_max) {
        return Err(format!("k_max must lie in 7..={TWIST_LIMIT}"));
    }
    let rows = twist_t_sequence(k_max).map_err(|e| e.to_string())?;
    let all = rows.iter().all(|r| r.verdict == Verdict::Certified);
    let rows: Vec<_> = rows
        .iter()
        .map(|r| json!([r.k, r.value.lo, r.value.hi, r.bound, r.verdict == Verdict::Certified]))
        .collect();
    Ok(json!({ "rows": rows, "all_certified": all }).to_string())
}

/// The tree of a fixture with a placed, audited link:
/// `{"tree": {...}, "placement": {...}, "bounds": [lo, hi], "audit": "ok" | message}`.
pub fn link_placement_json(name: &str, k: usize) -> Result<String, String> {
    let p = fixture(name)?;
    if k == 0 || k > K_LIMIT {
        return Err(format!("k must lie in 1..={K_LIMIT}"));
    }
    let t = tree_from_profile(&p).map_err(|e| e.to_string())?;
    let lp = place_link(&t, k).map_err(|e| e.to_string())?;
    let verdict = match audit(&t, &lp) {
        Ok(()) => "ok".to_owned(),
        Err(m) => m,
    };
    let (mut lo, mut hi) = (0.0, 0.0);
    for c in &lp.circles {
        let (a, b) = c.h.bounds();
        lo += to_f64(&a);
        hi += to_f64(&b);
    }
    Ok(json!({
        "tree": t,
        "placement": lp,
        "bounds": [lo / k as f64, hi / k as f64],
        "audit": verdict,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn fixture_names() -> String {
    fixture_names_json()
}

#[wasm_bindgen]
pub fn weyl_curve(name: &str, k_max: usize) -> Result<String, JsError> {
    weyl_curve_json(name, k_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn twist_curve(k_max: usize) -> Result<String, JsError> {
    twist_curve_json(k_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn link_placement(name: &str, k: usize) -> Result<String, JsError> {
    link_placement_json(name, k).map_err(|e| JsError::new(&e))
}
