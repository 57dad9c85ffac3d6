//! Calabi, Hofer and Ruelle invariants, and the action primitive.
//!
//! Coordinates on the disc `{z ≤ 0}`: `1 + z = 2π r²`, `x = r cos θ`,
//! `y = -r sin θ`. In them the flow of `H = h(z)` is a rotation with angular
//! velocity `ω(z) = -4π h'(z)`, positive for a profile decreasing away from
//! the pole.

use log::warn;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{AxisymmetricProfile, FloatPiece, Monotone, Piece, PieceKind, Support, Value};
use crate::quad;
use crate::rational::{fmt_q, parse_q, qi, to_f64, Q};
use crate::reeb::MeasuredReebTree;

/// `Cal = ∫_{D²} H ω = ½ ∫ h dz` for a disc profile.
pub fn calabi(p: &AxisymmetricProfile) -> Result<Value> {
    if p.support() != Support::Disc {
        return domain("Calabi is defined for disc-supported profiles only");
    }
    if p.is_singular() {
        // The pole singularity is integrable.
        return Ok(Value::Approx(p.integral_interval().mid() / 2.0));
    }
    Ok(p.integral().mul_q(&Q::new(1.into(), 2.into())))
}

/// Calabi of a tree: `∫ H_G dμ`, which requires a boundary vertex.
pub fn calabi_tree(t: &MeasuredReebTree) -> Result<Q> {
    if t.boundary().is_none() {
        return domain("Calabi of a tree needs a boundary vertex");
    }
    Ok(t.integral())
}

/// `∫_{S²} H ω = ½ ∫ h dz`, defined for any profile.
pub fn mean_value(p: &AxisymmetricProfile) -> Value {
    if p.is_singular() {
        return Value::Approx(p.integral_interval().mid() / 2.0);
    }
    p.integral().mul_q(&Q::new(1.into(), 2.into()))
}

#[derive(Clone, Debug, PartialEq)]
pub enum HoferNorm {
    Finite(Value),
    Unbounded,
}

/// `max h - min h`.
pub fn hofer_norm(p: &AxisymmetricProfile) -> HoferNorm {
    if p.is_singular() {
        return HoferNorm::Unbounded;
    }
    let mut vals: Vec<Value> = Vec::new();
    for s in p.segments() {
        vals.push(s.h0);
        vals.push(s.h1);
    }
    let cmp = |a: &Value, b: &Value| match (a, b) {
        (Value::Exact(x), Value::Exact(y)) => x.cmp(y),
        _ => a.to_f64().total_cmp(&b.to_f64()),
    };
    let max = vals.iter().max_by(|a, b| cmp(a, b)).cloned().unwrap_or_else(Value::zero);
    let min = vals.iter().min_by(|a, b| cmp(a, b)).cloned().unwrap_or_else(Value::zero);
    HoferNorm::Finite(max.sub(&min))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Tree,
    LevelCount,
    Morse,
    Numeric,
}

/// A value of the Ruelle invariant with its provenance.
///
/// `exact` is set iff the route is combinatorial and all inputs were
/// rational; then `error_bound` is 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuelleEstimate {
    pub value: f64,
    #[serde(with = "opt_q")]
    pub exact: Option<Q>,
    pub route: Route,
    pub error_bound: f64,
}

mod opt_q {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(&fmt_q(x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Q>, D::Error> {
        let o: Option<String> = Option::deserialize(d)?;
        o.map(|s| parse_q(&s).map_err(serde::de::Error::custom)).transpose()
    }
}

impl RuelleEstimate {
    fn from_value(v: Value, route: Route) -> Self {
        match v {
            Value::Exact(x) => RuelleEstimate { value: to_f64(&x), exact: Some(x), route, error_bound: 0.0 },
            Value::Approx(x) => RuelleEstimate { value: x, exact: None, route, error_bound: 0.0 },
        }
    }
}

/// `Σ_i χ_i H_G(v_i)`.
pub fn chi_weighted_sum(t: &MeasuredReebTree) -> Q {
    t.vertices().iter().enumerate().map(|(i, v)| Q::from_integer(t.chi(i).into()) * &v.h).sum()
}

/// `Σ_e (H_G(∂⁺e) - H_G(∂⁻e))` with edges oriented away from vertex `root`.
pub fn edge_sum(t: &MeasuredReebTree, root: usize) -> Q {
    let inc = t.incidence();
    let mut acc = Q::zero();
    let mut stack = vec![(root, usize::MAX)];
    while let Some((v, via)) = stack.pop() {
        for &e in &inc[v] {
            if e == via {
                continue;
            }
            let w = t.edges()[e].other(v);
            acc += &t.vertices()[w].h - &t.vertices()[v].h;
            stack.push((w, e));
        }
    }
    acc
}

/// Ruelle invariant of a disc Hamiltonian from its tree.
pub fn ruelle_tree(t: &MeasuredReebTree) -> Result<RuelleEstimate> {
    let Some(b) = t.boundary() else {
        return domain("the Ruelle invariant needs a boundary vertex");
    };
    let chi = chi_weighted_sum(t);
    let edges = edge_sum(t, b);
    if chi != edges {
        return Err(Error::Structural(format!(
            "χ-sum {} and edge sum {} disagree",
            fmt_q(&chi),
            fmt_q(&edges)
        )));
    }
    Ok(RuelleEstimate::from_value(Value::Exact(chi), Route::Tree))
}

/// `∫ n_H(ξ) dξ`, where each level circle counts `sign(-h')`.
///
/// A strictly monotone segment from `h0` to `h1` contributes one circle per
/// level in between, so its share is `h0 - h1`.
pub fn ruelle_levelcount(p: &AxisymmetricProfile) -> Result<RuelleEstimate> {
    if p.support() != Support::Disc {
        return domain("the level-count route needs a disc-supported profile");
    }
    if p.is_singular() {
        return domain("the Ruelle invariant of a singular profile is unbounded");
    }
    let mut acc = Value::zero();
    for s in p.segments() {
        match s.dir {
            Monotone::Constant => {}
            Monotone::Increasing | Monotone::Decreasing => acc = acc.add(&s.h0.sub(&s.h1)),
        }
    }
    Ok(RuelleEstimate::from_value(acc, Route::LevelCount))
}

/// A nondegenerate critical point: value and Morse index.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPoint {
    pub h: Q,
    pub index: u8,
}

/// `Σ (-1)^{ind} H(p)` over the critical points of a Morse function.
pub fn ruelle_morse(points: &[CriticalPoint]) -> Result<RuelleEstimate> {
    let mut acc = Q::zero();
    for p in points {
        match p.index {
            0 | 2 => acc += &p.h,
            1 => acc -= &p.h,
            i => return domain(format!("Morse index {i} is not in {{0, 1, 2}}")),
        }
    }
    Ok(RuelleEstimate::from_value(Value::Exact(acc), Route::Morse))
}

/// Morse critical points of the function encoded by a tree: leaves are
/// extrema (index 0 or 2), valence-3 vertices are saddles. The boundary
/// vertex and valence-2 vertices contribute nothing.
pub fn morse_points_of_tree(t: &MeasuredReebTree) -> Result<Vec<CriticalPoint>> {
    let mut out = Vec::new();
    for (i, v) in t.vertices().iter().enumerate() {
        if Some(i) == t.boundary() {
            continue;
        }
        match t.valence(i) {
            0 | 2 => {}
            1 => out.push(CriticalPoint { h: v.h.clone(), index: 2 }),
            3 => out.push(CriticalPoint { h: v.h.clone(), index: 1 }),
            d => return domain(format!("vertex {i} of valence {d} is not a Morse critical circle")),
        }
    }
    Ok(out)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Pairwise sum, independent of thread scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// Winding, in turns, of `Dφ_t e₁` over `t ∈ [0, depth]` at the circle of
/// height `z`, by RK4 on the flow and its variational equation.
///
/// Returns the winding computed with step `dt` and with `dt / 2`.
fn winding_turns(p: &AxisymmetricProfile, z: f64, depth: f64) -> (f64, f64) {
    let r2 = (1.0 + z) / (2.0 * std::f64::consts::PI);
    let (_, h1, h2) = p.jet_f64(z);
    let omega = -4.0 * std::f64::consts::PI * h1;
    let rate = omega.abs() + 16.0 * std::f64::consts::PI.powi(2) * r2 * h2.abs() + 1.0;
    let dt = (0.2 / rate).min(1.0 / 8.0);
    let steps = (depth / dt).ceil() as usize;
    (integrate_winding(p, r2, depth, steps), integrate_winding(p, r2, depth, 2 * steps))
}

fn integrate_winding(p: &AxisymmetricProfile, r2: f64, depth: f64, steps: usize) -> f64 {
    let four_pi = 4.0 * std::f64::consts::PI;
    // State (x, y, v1, v2); H(x, y) = h(-1 + 2π(x² + y²)).
    let field = |s: [f64; 4]| -> [f64; 4] {
        let (x, y) = (s[0], s[1]);
        let z = -1.0 + 2.0 * std::f64::consts::PI * (x * x + y * y);
        let (_, h1, h2) = p.jet_f64(z);
        // H_x = 4π h' x, H_y = 4π h' y; ẋ = H_y, ẏ = -H_x.
        let g = four_pi * h1;
        let gz = four_pi * h2 * four_pi;
        let hxx = g + gz * x * x;
        let hxy = gz * x * y;
        let hyy = g + gz * y * y;
        [g * y, -g * x, hxy * s[2] + hyy * s[3], -hxx * s[2] - hxy * s[3]]
    };
    let dt = depth / steps as f64;
    let mut s = [r2.sqrt(), 0.0, 1.0, 0.0];
    let mut turns = 0.0;
    let add = |a: [f64; 4], b: [f64; 4], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2], a[3] + c * b[3]];
    for _ in 0..steps {
        let k1 = field(s);
        let k2 = field(add(s, k1, dt / 2.0));
        let k3 = field(add(s, k2, dt / 2.0));
        let k4 = field(add(s, k3, dt));
        let mut n = s;
        for j in 0..4 {
            n[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let cross = s[2] * n[3] - s[3] * n[2];
        let dot = s[2] * n[2] + s[3] * n[3];
        turns += cross.atan2(dot) / std::f64::consts::TAU;
        let norm = (n[2] * n[2] + n[3] * n[3]).sqrt();
        n[2] /= norm;
        n[3] /= norm;
        s = n;
    }
    turns
}

/// `∫_{[-1,0]} turns(z) ½ dz / depth` on `panels` Gauss-Legendre panels of
/// eight nodes per piece; returns the estimates with step `dt` and `dt/2`.
fn numeric_average(p: &AxisymmetricProfile, panels: usize, depth: f64) -> (f64, f64) {
    let gl = gauss_legendre(8);
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    for piece in p.pieces() {
        let (a, b) = (to_f64(&piece.from).max(-1.0), to_f64(&piece.to).min(0.0));
        if b <= a || piece.is_constant() {
            continue;
        }
        let w = (b - a) / panels as f64;
        for j in 0..panels {
            let c = a + w * (j as f64 + 0.5);
            for &(x, wt) in &gl {
                nodes.push((c + 0.5 * w * x, 0.5 * w * wt));
            }
        }
    }
    let eval = |&(z, w): &(f64, f64)| {
        let (t1, t2) = winding_turns(p, z, depth);
        (w * 0.5 * t1 / depth, w * 0.5 * t2 / depth)
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<(f64, f64)> = {
        use rayon::prelude::*;
        nodes.par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<(f64, f64)> = nodes.iter().map(eval).collect();
    let a: Vec<f64> = parts.iter().map(|x| x.0).collect();
    let b: Vec<f64> = parts.iter().map(|x| x.1).collect();
    (pairwise_sum(&a), pairwise_sum(&b))
}

/// Largest jump of `h'` across interior breakpoints in `[-1, 0]`.
fn derivative_jump(p: &AxisymmetricProfile) -> f64 {
    let ps = p.pieces();
    ps.windows(2)
        .filter(|w| to_f64(&w[0].to) < 0.0)
        .map(|w| {
            let z = to_f64(&w[0].to);
            (w[0].jet_f64(z).1 - w[1].jet_f64(z).1).abs()
        })
        .fold(0.0, f64::max)
}

/// Ruelle invariant by integrating the linearized flow.
///
/// The homogenized winding at a point differs from `depth` times its
/// rotation number by less than a quarter turn, which bounds the bias by
/// `1/(8 depth)`. The error bound adds the change under halving the panel
/// width and under halving the time step.
pub fn ruelle_numeric(p: &AxisymmetricProfile, panels: usize, depth: u32) -> Result<RuelleEstimate> {
    if p.support() != Support::Disc {
        return domain("the numeric route needs a disc-supported profile");
    }
    if p.is_singular() {
        return domain("the numeric route needs a bounded profile");
    }
    if depth == 0 || panels == 0 {
        return domain("depth and grid must be positive");
    }
    let d = depth as f64;
    let (_, coarse_half) = numeric_average(p, panels.div_ceil(2), d);
    let (fine_dt, fine_half) = numeric_average(p, panels, d);
    let mut err = 1.0 / (8.0 * d) + (fine_half - coarse_half).abs() + (fine_half - fine_dt).abs();
    let jump = derivative_jump(p);
    if jump > 1e-9 {
        warn!("profile is not C¹ (h' jumps by {jump:.3e}); numeric Ruelle error bound degraded");
        err = 4.0 * err + jump / d;
    }
    Ok(RuelleEstimate { value: fine_half, exact: None, route: Route::Numeric, error_bound: err })
}

/// One piece of the action primitive `F = h - (1+z) h'`.
#[derive(Clone, Debug)]
pub enum PrimitivePiece {
    /// Closed-form polynomial coefficients, ascending.
    Poly { from: Q, to: Q, coeffs: Vec<Q> },
    /// Evaluated from the jet of the underlying profile piece.
    Derived { piece: Piece, fast: FloatPiece },
}

/// `F` with `dF = (φ¹_H)*λ - λ` for `λ = -((1+z)/4π) dθ`.
#[derive(Clone, Debug)]
pub struct ActionPrimitive {
    pub pieces: Vec<PrimitivePiece>,
    pub lambda_choice: &'static str,
}

pub const LAMBDA_CHOICE: &str = "-((1+z)/4π) dθ";

impl ActionPrimitive {
    pub fn eval_f64(&self, z: f64) -> f64 {
        for pc in &self.pieces {
            match pc {
                PrimitivePiece::Poly { from, to, coeffs } if to_f64(from) <= z && z <= to_f64(to) => {
                    return coeffs.iter().rev().fold(0.0, |acc, c| acc * z + to_f64(c));
                }
                PrimitivePiece::Derived { fast, .. } if fast.from <= z && z <= fast.to => {
                    let (h, h1, _) = fast.jet(z);
                    return h - (1.0 + z) * h1;
                }
                _ => {}
            }
        }
        0.0
    }

    /// `∫ F dz`, exact on polynomial pieces.
    pub fn integral(&self) -> Value {
        let mut acc = Value::zero();
        for pc in &self.pieces {
            match pc {
                PrimitivePiece::Poly { from, to, coeffs } => {
                    let anti = |z: &Q| {
                        coeffs
                            .iter()
                            .enumerate()
                            .fold(Q::zero(), |a, (j, c)| a + c * num_traits::pow(z.clone(), j + 1) / qi(j as i64 + 1))
                    };
                    acc = acc.add(&Value::Exact(anti(to) - anti(from)));
                }
                PrimitivePiece::Derived { fast, .. } => {
                    let f = |z: f64| {
                        let (h, h1, _) = fast.jet(z);
                        h - (1.0 + z) * h1
                    };
                    let r = quad::integrate(&f, fast.from, fast.to, 1e-14);
                    acc = acc.add(&Value::Approx(r.value));
                }
            }
        }
        acc
    }
}

/// Builds `F` and returns `|∫F dz - 2∫h dz|`.
pub fn action_primitive_check(p: &AxisymmetricProfile) -> Result<(ActionPrimitive, Value)> {
    if p.support() != Support::Disc {
        return domain("the action primitive is built for disc-supported profiles");
    }
    if p.is_singular() {
        return domain("the action primitive needs a bounded profile");
    }
    let pieces = p
        .pieces()
        .iter()
        .map(|pc| match &pc.kind {
            PieceKind::Zero => PrimitivePiece::Poly { from: pc.from.clone(), to: pc.to.clone(), coeffs: vec![] },
            PieceKind::Poly { coeffs } => {
                // h - (1+z)h' has coefficients c_j - (j+1)c_{j+1} - j c_j.
                let n = coeffs.len();
                let c = |j: usize| coeffs.get(j).cloned().unwrap_or_else(Q::zero);
                let out = (0..n)
                    .map(|j| c(j) * qi(1 - j as i64) - c(j + 1) * qi(j as i64 + 1))
                    .collect();
                PrimitivePiece::Poly { from: pc.from.clone(), to: pc.to.clone(), coeffs: out }
            }
            _ => PrimitivePiece::Derived { piece: pc.clone(), fast: FloatPiece::new(pc) },
        })
        .collect();
    let f = ActionPrimitive { pieces, lambda_choice: LAMBDA_CHOICE };
    let residual = f.integral().sub(&p.integral().mul_q(&qi(2)));
    let residual = match residual {
        Value::Exact(x) => Value::Exact(x.abs()),
        Value::Approx(x) => Value::Approx(x.abs()),
    };
    Ok((f, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::rational::q;
    use crate::reeb::tree_from_profile;

    #[test]
    fn calabi_and_hofer_of_fixtures() {
        assert_eq!(calabi(&ramp()).unwrap(), Value::Exact(q(1, 8)));
        assert_eq!(calabi(&tent()).unwrap(), Value::Exact(q(1, 5)));
        assert_eq!(calabi(&zero_profile()).unwrap(), Value::Exact(qi(0)));
        assert!(calabi(&height()).is_err());
        assert_eq!(hofer_norm(&ramp()), HoferNorm::Finite(Value::Exact(qi(1))));
        assert_eq!(hofer_norm(&zero_profile()), HoferNorm::Finite(Value::Exact(qi(0))));
        assert_eq!(hofer_norm(&crate::twists::twist_t_profile()), HoferNorm::Unbounded);
    }

    #[test]
    fn ruelle_routes_on_fixtures() {
        for (p, ru) in [(ramp(), qi(1)), (tent(), qi(0)), (offset_bump(), q(1, 2)), (zero_profile(), qi(0))] {
            let t = tree_from_profile(&p).unwrap();
            assert_eq!(ruelle_tree(&t).unwrap().exact, Some(ru.clone()));
            assert_eq!(ruelle_levelcount(&p).unwrap().exact, Some(ru));
        }
        let pts = [
            CriticalPoint { h: qi(1), index: 2 },
            CriticalPoint { h: qi(1), index: 2 },
            CriticalPoint { h: q(3, 5), index: 1 },
        ];
        assert_eq!(ruelle_morse(&pts).unwrap().exact, Some(q(7, 5)));
        assert!(ruelle_morse(&[CriticalPoint { h: qi(1), index: 3 }]).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let gl = gauss_legendre(8);
        for d in 0..16 {
            let s: f64 = gl.iter().map(|(x, w)| w * x.powi(d)).sum();
            let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
            assert!((s - exact).abs() < 1e-14, "degree {d}");
        }
    }

    #[test]
    fn primitive_of_ramp_is_exact() {
        let (f, r) = action_primitive_check(&ramp()).unwrap();
        assert_eq!(r, Value::Exact(qi(0)));
        assert_eq!(f.eval_f64(-0.8), 1.0);
        assert_eq!(f.eval_f64(0.3), 0.0);
    }

    #[test]
    fn primitive_derivative_identity() {
        // F' = -(1+z) h'' on a smooth profile.
        let p = smooth_cap(qi(2), q(-3, 10));
        let (f, _) = action_primitive_check(&p).unwrap();
        for j in 1..40 {
            let z = -1.0 + 0.7 * j as f64 / 40.0;
            let e = 1e-6;
            let d = (f.eval_f64(z + e) - f.eval_f64(z - e)) / (2.0 * e);
            let expect = -(1.0 + z) * p.jet_f64(z).2;
            assert!((d - expect).abs() < 1e-5 * (1.0 + expect.abs()), "z={z}: {d} vs {expect}");
        }
    }

    #[test]
    fn estimate_json_round_trip() {
        let e = ruelle_levelcount(&offset_bump()).unwrap();
        let s = serde_json::to_string(&e).unwrap();
        assert!(s.contains("\"exact\":\"1/2\""));
        let back: RuelleEstimate = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
    }
}
