//! Link spectral invariants through Lagrangian control.
//!
//! For an axisymmetric Hamiltonian the equator-parallel circles at heights
//! `a_i = -1 + 2i/(k+1)` form a monotone link, so
//! `μ_k(H) = (1/k) Σ h(a_i)`. On a measured Reeb tree the same quantity is
//! bracketed by the values of `H` on a monotone link built from the tree.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::interval::Interval;
use crate::invariants::{chi_weighted_sum, ruelle_tree};
use crate::model::{AxisymmetricProfile, Support, Value};
use crate::rational::{fmt_q, q, qi, to_f64, RatStr, Q};
use crate::reeb::{tree_from_profile, MeasuredReebTree};

fn kq(k: usize) -> Q {
    Q::from_integer((k as i64).into())
}

/// Sample heights `a_i = -1 + 2i/(k+1)`, `1 ≤ i ≤ k`.
pub fn sample_heights(k: usize) -> impl Iterator<Item = Q> {
    (1..=k).map(move |i| qi(-1) + q(2 * i as i64, k as i64 + 1))
}

/// `Σ_{i≤k} h(a_i)`.
pub fn sample_sum(p: &AxisymmetricProfile, k: usize) -> Result<Value> {
    if k == 0 {
        return domain("k must be positive");
    }
    let mut acc = Value::zero();
    for z in sample_heights(k) {
        acc = acc.add(&p.eval(&z)?);
    }
    Ok(acc)
}

/// `μ_k(H) = (1/k) Σ h(a_i)`.
pub fn muk_axisymmetric(p: &AxisymmetricProfile, k: usize) -> Result<Value> {
    Ok(sample_sum(p, k)?.mul_q(&Q::new(1.into(), (k as i64).into())))
}

/// Enclosure of `μ_k`, for profiles whose samples are not all exact.
pub fn muk_interval(p: &AxisymmetricProfile, k: usize) -> Result<Interval> {
    let mut acc = Interval::point(0.0);
    for z in sample_heights(k) {
        acc = acc + p.eval_interval(&z)?;
    }
    Ok(acc.div(&Interval::point(k as f64)))
}

/// `f_k = μ_k - μ_1`; for disc profiles `μ_1 = h(0) = 0`.
pub fn fk(p: &AxisymmetricProfile, k: usize) -> Result<Value> {
    Ok(muk_axisymmetric(p, k)?.sub(&muk_axisymmetric(p, 1)?))
}

/// `g_k = μ_{2^k - 1} - μ_{2^{k-1} - 1}`, for `2 ≤ k ≤ 24`.
pub fn gk(p: &AxisymmetricProfile, k: u32) -> Result<Value> {
    if !(2..=24).contains(&k) {
        return domain("g_k is evaluated directly for 2 ≤ k ≤ 24; use the sphere twist table beyond");
    }
    Ok(muk_axisymmetric(p, (1 << k) - 1)?.sub(&muk_axisymmetric(p, (1 << (k - 1)) - 1)?))
}

/// Role of a link component.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum CircleLabel {
    /// A level circle over an edge point, `position` measured from `edge.u`.
    T1 { edge: usize, position: RatStr },
    /// A circle bounding a disc of area `1/(k+1)` inside the plateau of `vertex`.
    T2 { vertex: usize },
    /// A circle near `vertex`: a relabelled edge point (`at` is set) or a
    /// circle bounding a disc of area `1/(k+1)` in the neighbourhood `V_i`.
    T3 { vertex: usize, at: Option<(usize, RatStr)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CircleValue {
    Exact(RatStr),
    Range([RatStr; 2]),
}

impl CircleValue {
    pub fn bounds(&self) -> (Q, Q) {
        match self {
            CircleValue::Exact(x) => (x.0.clone(), x.0.clone()),
            CircleValue::Range([a, b]) => (a.0.clone(), b.0.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub label: CircleLabel,
    pub h: CircleValue,
}

/// A monotone link on a measured Reeb tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkPlacement {
    pub k: usize,
    pub circles: Vec<Circle>,
    pub complement_measures: Vec<RatStr>,
}

impl LinkPlacement {
    pub fn count_t2(&self, v: usize) -> usize {
        self.circles.iter().filter(|c| matches!(c.label, CircleLabel::T2 { vertex } if vertex == v)).count()
    }

    pub fn count_t3(&self, v: usize) -> usize {
        self.circles.iter().filter(|c| matches!(c.label, CircleLabel::T3 { vertex, .. } if vertex == v)).count()
    }

    pub fn count_t1(&self) -> usize {
        self.circles.iter().filter(|c| matches!(c.label, CircleLabel::T1 { .. })).count()
    }
}

/// `r ∈ (0, δ]` with `a - r` an integer multiple of `δ`.
fn residue(a: &Q, delta: &Q) -> Q {
    let n = (a / delta).floor();
    let r = a - &n * delta;
    if r.is_zero() { delta.clone() } else { r }
}

/// Measures of the components of `G \ {v}`, one per incident edge.
fn branch_measures(t: &MeasuredReebTree) -> Vec<Vec<(usize, Q)>> {
    let inc = t.incidence();
    let n = t.vertices().len();
    // Measure of the side of each edge containing `e.v`, by rooting at 0.
    let mut parent_edge = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![0usize];
    let mut seen = vec![false; n];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        order.push(v);
        for &e in &inc[v] {
            let w = t.edges()[e].other(v);
            if !seen[w] {
                seen[w] = true;
                parent_edge[w] = e;
                stack.push(w);
            }
        }
    }
    let mut below: Vec<Q> = t.vertices().iter().map(|v| v.mass.clone()).collect();
    for &v in order.iter().rev() {
        let e = parent_edge[v];
        if e != usize::MAX {
            let p = t.edges()[e].other(v);
            let add = &below[v] + &t.edges()[e].measure;
            below[p] += add;
        }
    }
    // Branch through each incident edge: the child side or the complement.
    let mut out = vec![Vec::new(); n];
    for (v, es) in inc.iter().enumerate() {
        for &e in es {
            let w = t.edges()[e].other(v);
            let a = if parent_edge[w] == e { &below[w] + &t.edges()[e].measure } else { qi(1) - &below[v] };
            out[v].push((e, a));
        }
    }
    out
}

/// Builds a monotone `k`-component link on `t`.
///
/// Each vertex `v_i` gets a point `x_{i,j}` on every incident edge at
/// measure `r_{i,j} ∈ (0, 1/(k+1)]` from `v_i`, chosen so that every
/// component of `G` minus these points has measure a multiple of
/// `1/(k+1)`. The component `V_i` holds `⌊(k+1)m_i⌋` plateau circles and
/// further disc circles; edge intervals are subdivided by level circles.
/// The construction needs `r_{u,e} + r_{v,e} ≤ μ(e)` on every edge, which
/// holds whenever `3/(k+1) < μ(e)`.
pub fn place_link(t: &MeasuredReebTree, k: usize) -> Result<LinkPlacement> {
    if k == 0 {
        return domain("k must be positive");
    }
    let n = t.vertices().len();
    let kp1 = kq(k + 1);
    let delta = Q::one() / &kp1;
    if n == 1 {
        let h = t.vertices()[0].h.clone();
        let circles = (0..k)
            .map(|_| Circle { label: CircleLabel::T2 { vertex: 0 }, h: CircleValue::Exact(RatStr(h.clone())) })
            .collect();
        return Ok(LinkPlacement { k, circles, complement_measures: vec![RatStr(delta); k + 1] });
    }
    let branches = branch_measures(t);
    // r[e] = (r at e.u, r at e.v).
    let m = t.edges().len();
    let mut r: Vec<(Q, Q)> = vec![(Q::zero(), Q::zero()); m];
    for (v, bs) in branches.iter().enumerate() {
        for (e, a) in bs {
            let x = residue(a, &delta);
            if t.edges()[*e].u == v {
                r[*e].0 = x;
            } else {
                r[*e].1 = x;
            }
        }
    }
    let min_measure = t.edges().iter().map(|e| e.measure.clone()).min().expect("nonempty");
    let min_k = (qi(3) / &min_measure).floor().to_integer().try_into().unwrap_or(usize::MAX);
    for (i, e) in t.edges().iter().enumerate() {
        if &r[i].0 + &r[i].1 > e.measure {
            return Err(Error::KTooSmall { k, min_k });
        }
    }

    // Cut points on edges; `owners` lists the vertices whose x-point it is.
    struct Point {
        edge: usize,
        pos: Q,
        owners: Vec<usize>,
    }
    let mut points: Vec<Point> = Vec::new();
    for (i, e) in t.edges().iter().enumerate() {
        let xu = r[i].0.clone();
        let xv = &e.measure - &r[i].1;
        points.push(Point { edge: i, pos: xu.clone(), owners: vec![e.u] });
        if xv == xu {
            points.last_mut().unwrap().owners.push(e.v);
        } else {
            let steps: i64 = ((&xv - &xu) / &delta).to_integer().try_into().unwrap_or(0);
            for j in 1..steps {
                points.push(Point { edge: i, pos: &xu + &delta * qi(j), owners: vec![] });
            }
            points.push(Point { edge: i, pos: xv, owners: vec![e.v] });
        }
    }

    let inc = t.incidence();
    let mut circles = Vec::with_capacity(k);
    let mut claimed = vec![None::<usize>; points.len()];
    let mut disc_counts = vec![0usize; n];
    for (i, v) in t.vertices().iter().enumerate() {
        let mu_v: Q = &v.mass + inc[i].iter().map(|&e| if t.edges()[e].u == i { r[e].0.clone() } else { r[e].1.clone() }).sum::<Q>();
        let units = (&mu_v * &kp1).to_integer();
        let units: i64 = units.try_into().map_err(|_| Error::Structural("measure overflow".into()))?;
        let s = (&v.mass * &kp1).floor().to_integer();
        let s: i64 = s.try_into().unwrap_or(0);
        let s = s.min(units - 1).max(0);
        let extra = units - 1 - s;
        let b = inc[i].len() as i64 - 1;
        let relabel = s + b - (units - 1);
        if relabel < 0 {
            return Err(Error::Structural(format!("vertex {i}: neighbourhood too large for its valence")));
        }
        for _ in 0..s {
            circles.push(Circle { label: CircleLabel::T2 { vertex: i }, h: CircleValue::Exact(RatStr(v.h.clone())) });
        }
        // H-range over the closure of V_i.
        let mut lo = v.h.clone();
        let mut hi = v.h.clone();
        for &e in &inc[i] {
            let ee = &t.edges()[e];
            let rr = if ee.u == i { &r[e].0 } else { &r[e].1 };
            let (a, b2) = ee.range_near(i, rr);
            if a < lo {
                lo = a;
            }
            if b2 > hi {
                hi = b2;
            }
        }
        for _ in 0..extra {
            circles.push(Circle {
                label: CircleLabel::T3 { vertex: i, at: None },
                h: CircleValue::Range([RatStr(lo.clone()), RatStr(hi.clone())]),
            });
        }
        disc_counts[i] = (s + extra) as usize;
        // Relabel the nearest unclaimed edge points around v_i.
        let mut cand: Vec<usize> = (0..points.len())
            .filter(|&j| claimed[j].is_none())
            .filter(|&j| {
                let e = &t.edges()[points[j].edge];
                e.u == i || e.v == i
            })
            .filter(|&j| points[j].owners.contains(&i) || points[j].owners.is_empty())
            .collect();
        let dist = |j: usize| {
            let e = &t.edges()[points[j].edge];
            if e.u == i { points[j].pos.clone() } else { &e.measure - &points[j].pos }
        };
        cand.sort_by_key(|&j| (!points[j].owners.contains(&i), points[j].owners.len(), dist(j), points[j].edge));
        if (cand.len() as i64) < relabel {
            return Err(Error::Structural(format!("vertex {i}: not enough nearby circles to relabel")));
        }
        for &j in cand.iter().take(relabel as usize) {
            claimed[j] = Some(i);
        }
    }
    for (j, p) in points.iter().enumerate() {
        let e = &t.edges()[p.edge];
        let h = CircleValue::Exact(RatStr(e.h_at(&p.pos)));
        let label = match claimed[j] {
            Some(i) => CircleLabel::T3 { vertex: i, at: Some((p.edge, RatStr(p.pos.clone()))) },
            None => CircleLabel::T1 { edge: p.edge, position: RatStr(p.pos.clone()) },
        };
        circles.push(Circle { label, h });
    }
    let complement_measures = complement_measures(t, &points.iter().map(|p| (p.edge, p.pos.clone())).collect::<Vec<_>>(), &disc_counts, &delta);
    let lp = LinkPlacement { k, circles, complement_measures: complement_measures.into_iter().map(RatStr).collect() };
    if lp.circles.len() != k {
        return Err(Error::Structural(format!("placed {} circles for k = {k}", lp.circles.len())));
    }
    Ok(lp)
}

/// Measures of the complement of the link: the tree is cut at the edge
/// points, and `discs[i]` disc circles of area `δ` are removed from the
/// component containing vertex `i`.
fn complement_measures(t: &MeasuredReebTree, cuts: &[(usize, Q)], discs: &[usize], delta: &Q) -> Vec<Q> {
    let n = t.vertices().len();
    let mut per_edge: Vec<Vec<Q>> = vec![Vec::new(); t.edges().len()];
    for (e, p) in cuts {
        per_edge[*e].push(p.clone());
    }
    // Union vertices joined by an uncut edge; collect interior intervals.
    let mut uf = crate::reeb::UnionFind::new(n);
    let mut comp_measure: Vec<Q> = t.vertices().iter().map(|v| v.mass.clone()).collect();
    let mut intervals: Vec<Q> = Vec::new();
    let mut attach: Vec<(usize, Q)> = Vec::new();
    for (i, e) in t.edges().iter().enumerate() {
        let mut ps = per_edge[i].clone();
        ps.sort();
        ps.dedup();
        if ps.is_empty() {
            uf.union(e.u, e.v);
            attach.push((e.u, e.measure.clone()));
            continue;
        }
        attach.push((e.u, ps[0].clone()));
        attach.push((e.v, &e.measure - ps.last().unwrap()));
        for w in ps.windows(2) {
            intervals.push(&w[1] - &w[0]);
        }
    }
    let mut totals: std::collections::BTreeMap<usize, Q> = std::collections::BTreeMap::new();
    for (v, m) in comp_measure.iter_mut().enumerate() {
        *totals.entry(uf.find(v)).or_insert_with(Q::zero) += std::mem::take(m);
    }
    for (v, x) in attach {
        *totals.get_mut(&uf.find(v)).unwrap() += x;
    }
    let mut disc_total = vec![0usize; n];
    for v in 0..n {
        disc_total[uf.find(v)] += discs[v];
    }
    let mut out = Vec::new();
    for (root, total) in totals {
        for _ in 0..disc_total[root] {
            out.push(delta.clone());
        }
        out.push(total - delta * kq(disc_total[root]));
    }
    out.extend(intervals);
    out
}

/// Checks a placement against the defining properties; returns the first
/// violated one.
pub fn audit(t: &MeasuredReebTree, lp: &LinkPlacement) -> std::result::Result<(), String> {
    let k = lp.k;
    if lp.circles.len() != k {
        return Err(format!("{} circles, expected {k}", lp.circles.len()));
    }
    if lp.complement_measures.len() != k + 1 {
        return Err(format!("{} complement components, expected {}", lp.complement_measures.len(), k + 1));
    }
    let delta = Q::one() / kq(k + 1);
    if let Some(c) = lp.complement_measures.iter().find(|c| c.0 != delta) {
        return Err(format!("complement component of measure {}", fmt_q(&c.0)));
    }
    if t.vertices().len() == 1 {
        return Ok(());
    }
    for (i, v) in t.vertices().iter().enumerate() {
        let s = (&v.mass * kq(k + 1)).floor().to_integer();
        let s: usize = s.try_into().unwrap_or(usize::MAX);
        if lp.count_t2(i) != s {
            return Err(format!("vertex {i}: {} plateau circles, expected {s}", lp.count_t2(i)));
        }
        let b = t.valence(i) - 1;
        if lp.count_t3(i) != b {
            return Err(format!("vertex {i}: {} collapsing circles, expected {b}", lp.count_t3(i)));
        }
    }
    for c in &lp.circles {
        if let (CircleLabel::T1 { edge, position }, CircleValue::Exact(h)) = (&c.label, &c.h) {
            if t.edges()[*edge].h_at(&position.0) != h.0 {
                return Err("level circle value does not match the edge profile".into());
            }
        }
    }
    Ok(())
}

/// `[(1/k) Σ min_{L_i} H, (1/k) Σ max_{L_i} H]` over the placed link.
pub fn muk_bounds(t: &MeasuredReebTree, k: usize) -> Result<(Q, Q)> {
    let lp = place_link(t, k)?;
    let (mut lo, mut hi) = (Q::zero(), Q::zero());
    for c in &lp.circles {
        let (a, b) = c.h.bounds();
        lo += a;
        hi += b;
    }
    Ok((lo / kq(k), hi / kq(k)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeylMode {
    /// `k f_k - (k+1) Cal`.
    Disc,
    /// `k μ_k - (k+1) ∫H`.
    Sphere,
}

/// One term of a Weyl sequence; `exact` is set when `lo = hi` is rational.
#[derive(Clone, Debug, PartialEq)]
pub struct WeylEntry {
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
    pub exact: Option<Q>,
}

impl WeylEntry {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Clone, Debug)]
pub struct WeylSequence {
    pub mode: WeylMode,
    pub entries: Vec<WeylEntry>,
    pub target: Q,
}

/// The Hamiltonian a Weyl sequence is computed for.
pub enum WeylInput<'a> {
    Profile(&'a AxisymmetricProfile),
    Tree(&'a MeasuredReebTree),
}

fn map_ks<T: Send, F: Fn(usize) -> Result<T> + Sync + Send>(ks: &[usize], f: F) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        ks.par_iter().map(|&k| f(k)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ks.iter().map(|&k| f(k)).collect()
    }
}

/// Target limit: `-½ Ru` on the disc, `-½ Σ χ_i H_G(v_i)` on the sphere.
pub fn weyl_target(t: &MeasuredReebTree, mode: WeylMode) -> Result<Q> {
    let half = q(-1, 2);
    Ok(match mode {
        WeylMode::Disc => half * ruelle_tree(t)?.exact.expect("tree route is exact"),
        WeylMode::Sphere => half * chi_weighted_sum(t),
    })
}

pub fn weyl_sequence(input: WeylInput<'_>, ks: &[usize], mode: WeylMode) -> Result<WeylSequence> {
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    match input {
        WeylInput::Profile(p) => {
            if p.is_singular() {
                return domain("singular profiles have divergent Weyl sequences; use the twist certificates");
            }
            if mode == WeylMode::Disc && p.support() != Support::Disc {
                return domain("disc mode needs a disc-supported profile");
            }
            let tree = tree_from_profile(p)?;
            let target = weyl_target(&tree, mode)?;
            let mean = crate::invariants::mean_value(p);
            let entries = map_ks(&ks, |k| {
                let mut v = sample_sum(p, k)?;
                if mode == WeylMode::Disc {
                    v = v.sub(&p.eval(&Q::zero())?.mul_q(&kq(k)));
                }
                let v = v.sub(&mean.mul_q(&kq(k + 1)));
                let x = v.to_f64();
                Ok(WeylEntry { k, lo: x, hi: x, exact: v.exact().cloned() })
            })?;
            Ok(WeylSequence { mode, entries, target })
        }
        WeylInput::Tree(t) => {
            let target = weyl_target(t, mode)?;
            if mode == WeylMode::Disc {
                // μ_1 = H at the boundary vertex, which is 0.
                debug_assert!(t.boundary().is_some());
            }
            let integral = t.integral();
            let entries = map_ks(&ks, |k| {
                let (lo, hi) = muk_bounds(t, k)?;
                let shift = &integral * kq(k + 1);
                let (lo, hi) = (lo * kq(k) - &shift, hi * kq(k) - &shift);
                let exact = (lo == hi).then(|| lo.clone());
                Ok(WeylEntry { k, lo: to_f64(&lo), hi: to_f64(&hi), exact })
            })?;
            Ok(WeylSequence { mode, entries, target })
        }
    }
}

impl WeylSequence {
    /// CSV with columns `k,lo,hi,midpoint,target`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,lo,hi,midpoint,target\n");
        let t = to_f64(&self.target);
        for e in &self.entries {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                e.k,
                crate::rational::fmt_f64(e.lo),
                crate::rational::fmt_f64(e.hi),
                crate::rational::fmt_f64(e.mid()),
                crate::rational::fmt_f64(t)
            ));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extrapolation {
    pub limit: f64,
    /// `f64::INFINITY` when the sequence is flagged as non-convergent.
    pub error: f64,
    pub converged: bool,
}

/// Neville extrapolation to `x = 0` of the points `(x_j, y_j)`.
fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i]);
        }
    }
    p[0]
}

fn range(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    max - min
}

/// Estimates `lim_k` of a sequence from its midpoints.
///
/// Two candidates are formed: polynomial extrapolation in `1/k` over the
/// last four and last three terms, with their difference as error, and the
/// midpoint of the range of the last third of the terms, with half the
/// range as error. The one with the smaller error wins, and the largest
/// interval half-width is added. A sequence whose last-third range is not
/// clearly smaller than its middle-third range is flagged.
pub fn extrapolate_limit(entries: &[WeylEntry]) -> Result<Extrapolation> {
    if entries.len() < 4 {
        return domain("extrapolation needs at least four terms");
    }
    let ys: Vec<f64> = entries.iter().map(WeylEntry::mid).collect();
    let xs: Vec<f64> = entries.iter().map(|e| 1.0 / e.k as f64).collect();
    let n = ys.len();
    let third = (n / 3).max(1);
    let last = &ys[n - third..];
    let middle = &ys[n - 2 * third..n - third];
    let (rl, rm) = (range(last), range(middle));
    let half_width = entries.iter().map(|e| 0.5 * (e.hi - e.lo)).fold(0.0, f64::max);
    let scale = ys.iter().map(|y| y.abs()).fold(1.0, f64::max);
    if rl > 1e-12 * scale && rl > 0.65 * rm {
        let limit = ys[n - 1];
        return Ok(Extrapolation { limit, error: f64::INFINITY, converged: false });
    }
    let l4 = neville_at_zero(&xs[n - 4..], &ys[n - 4..]);
    let l3 = neville_at_zero(&xs[n - 3..], &ys[n - 3..]);
    let poly = (l4, (l4 - l3).abs());
    let max = last.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = last.iter().cloned().fold(f64::INFINITY, f64::min);
    let env = (0.5 * (max + min), 0.5 * (max - min));
    let (limit, err) = if poly.1 <= env.1 { poly } else { env };
    let rounding = 8.0 * f64::EPSILON * scale;
    Ok(Extrapolation { limit, error: err + half_width + rounding, converged: true })
}

/// A profile with prescribed `f_i = s_i` for `2 ≤ i ≤ K`, `seq = [s_2, ..., s_K]`.
pub use crate::twists::prescribe_fk_sequence;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::TriangleMesh;
    use crate::reeb::tree_from_mesh;

    #[test]
    fn muk_examples() {
        assert_eq!(muk_axisymmetric(&ramp(), 7).unwrap(), Value::Exact(q(1, 14)));
        assert_eq!(fk(&tent(), 9).unwrap(), Value::Exact(q(2, 9)));
        for k in 1..30 {
            assert_eq!(muk_axisymmetric(&height(), k).unwrap(), Value::Exact(qi(0)));
        }
        assert_eq!(gk(&height(), 5).unwrap(), Value::Exact(qi(0)));
        assert!(muk_axisymmetric(&ramp(), 0).is_err());
    }

    #[test]
    fn ramp_placement_k7() {
        let t = tree_from_profile(&ramp()).unwrap();
        let lp = place_link(&t, 7).unwrap();
        audit(&t, &lp).unwrap();
        assert_eq!(lp.count_t2(t.boundary().unwrap()), 6);
        assert_eq!(lp.count_t1(), 1);
        let t1 = lp.circles.iter().find(|c| matches!(c.label, CircleLabel::T1 { .. })).unwrap();
        assert_eq!(t1.h, CircleValue::Exact(RatStr(q(1, 2))));
        assert_eq!(muk_bounds(&t, 7).unwrap(), (q(1, 14), q(1, 14)));
    }

    #[test]
    fn single_edge_tree_gets_equally_spaced_circles() {
        // Height function: poles at ±1, one edge of measure 1.
        let t = tree_from_profile(&height()).unwrap();
        assert_eq!(t.edges().len(), 1);
        let lp = place_link(&t, 9).unwrap();
        audit(&t, &lp).unwrap();
        let mut pos: Vec<Q> = lp
            .circles
            .iter()
            .map(|c| match &c.label {
                CircleLabel::T1 { position, .. } => position.0.clone(),
                CircleLabel::T3 { at: Some((_, p)), .. } => p.0.clone(),
                other => panic!("unexpected {other:?}"),
            })
            .collect();
        pos.sort();
        let e = &t.edges()[0];
        let expect: Vec<Q> = (1..=9).map(|i| q(i, 10)).collect();
        let got: Vec<Q> = pos.iter().map(|p| if e.u == 0 { p.clone() } else { &e.measure - p }).collect();
        let mut got = got;
        got.sort();
        assert_eq!(got, expect);
    }

    #[test]
    fn two_bump_placement() {
        let t = tree_from_mesh(&two_bump_mesh(6)).unwrap();
        let lp = place_link(&t, 15).unwrap();
        audit(&t, &lp).unwrap();
        let (lo, hi) = muk_bounds(&t, 15).unwrap();
        assert!(lo <= hi);
    }

    #[test]
    fn small_k_is_rejected_with_min_k() {
        let t = tree_from_profile(&tent()).unwrap();
        match place_link(&t, 2) {
            Err(Error::KTooSmall { min_k, .. }) => assert_eq!(min_k, 15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn weyl_examples() {
        let ks: Vec<usize> = (0..20).map(|j| 3 + 4 * j).collect();
        let s = weyl_sequence(WeylInput::Profile(&ramp()), &ks, WeylMode::Disc).unwrap();
        assert_eq!(s.target, q(-1, 2));
        assert!(s.entries.iter().all(|e| e.exact == Some(q(-1, 2))));
        let s = weyl_sequence(WeylInput::Profile(&tent()), &[9], WeylMode::Disc).unwrap();
        assert_eq!(s.entries[0].exact, Some(qi(0)));
        assert!(weyl_sequence(WeylInput::Profile(&crate::twists::twist_t_profile()), &[9], WeylMode::Disc).is_err());
    }

    #[test]
    fn extrapolation_examples() {
        let mk = |k: usize, y: f64| WeylEntry { k, lo: y, hi: y, exact: None };
        let c: Vec<WeylEntry> = (3..40).map(|k| mk(k, -0.5)).collect();
        let e = extrapolate_limit(&c).unwrap();
        // A constant sequence carries only the rounding allowance.
        assert_eq!((e.limit, e.error), (-0.5, 8.0 * f64::EPSILON));
        let s: Vec<WeylEntry> = (10..200).map(|k| mk(k, 0.25 + 3.0 / k as f64)).collect();
        let e = extrapolate_limit(&s).unwrap();
        assert!(e.converged && (e.limit - 0.25).abs() < 1e-6 && (e.limit - 0.25).abs() <= e.error + 1e-15);
        let d: Vec<WeylEntry> = (7..400).map(|k| mk(k, -((k + 1) as f64).sqrt())).collect();
        assert!(!extrapolate_limit(&d).unwrap().converged);
        assert!(extrapolate_limit(&c[..3]).is_err());
    }

    #[test]
    fn ring_mesh_with_exact_rational_tree() {
        let m = TriangleMesh::rings(&[qi(0), qi(1), qi(0)], &[q(1, 2), q(1, 2)], 5).unwrap();
        let t = tree_from_mesh(&m).unwrap();
        assert_eq!(t.integral(), q(1, 2));
    }
}
