//! Measured Reeb trees.
//!
//! The Reeb tree of `H` is the quotient of the sphere by connected
//! components of level sets. Vertices are the preimages of critical values
//! of the induced function `H_G`; a vertex carries the area of the region
//! it collapses (its mass). Each edge carries its area and the profile of
//! `H_G` along it, parametrized by area measured from the edge's first
//! endpoint. Masses and edge measures sum to 1.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, structural, Error, Result};
use crate::model::{AxisymmetricProfile, Monotone, PieceKind, Segment, Support, TriangleMesh};
use crate::rational::{fmt_q, from_f64_grid, qi, to_f64, RatStr, Q};

#[derive(Clone, Debug, PartialEq)]
pub struct TreeVertex {
    pub h: Q,
    pub mass: Q,
}

/// An edge from `u` to `v`. `h_param` lists `(measure from u, H_G)` with
/// strictly increasing measure from `0` to `measure` and strictly monotone
/// `H_G` from `h(u)` to `h(v)`; `H_G` is linear between breakpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeEdge {
    pub u: usize,
    pub v: usize,
    pub measure: Q,
    pub h_param: Vec<(Q, Q)>,
}

impl TreeEdge {
    /// The other endpoint.
    pub fn other(&self, w: usize) -> usize {
        if w == self.u { self.v } else { self.u }
    }

    /// `H_G` at measure `t` from `u`.
    pub fn h_at(&self, t: &Q) -> Q {
        let hp = &self.h_param;
        let i = hp.partition_point(|(p, _)| p < t);
        if i == 0 {
            return hp[0].1.clone();
        }
        if i == hp.len() {
            return hp[hp.len() - 1].1.clone();
        }
        let ((p0, y0), (p1, y1)) = (&hp[i - 1], &hp[i]);
        y0 + (y1 - y0) * (t - p0) / (p1 - p0)
    }

    /// `H_G` at measure `t` from endpoint `w`.
    pub fn h_at_from(&self, w: usize, t: &Q) -> Q {
        if w == self.u { self.h_at(t) } else { self.h_at(&(&self.measure - t)) }
    }

    /// Measure from `u` at which `H_G` equals `level`, if strictly inside.
    pub fn position_of(&self, level: &Q) -> Option<Q> {
        let hp = &self.h_param;
        let (a, b) = (&hp[0].1, &hp[hp.len() - 1].1);
        let inside = (a < level && level < b) || (b < level && level < a);
        if !inside {
            return None;
        }
        for w in hp.windows(2) {
            let ((p0, y0), (p1, y1)) = (&w[0], &w[1]);
            if y1 == level {
                return Some(p1.clone());
            }
            if (y0 < level && level < y1) || (y1 < level && level < y0) {
                return Some(p0 + (p1 - p0) * (level - y0) / (y1 - y0));
            }
        }
        None
    }

    /// `∫ H_G dμ` along the edge (trapezoid rule, exact for the PL profile).
    pub fn integral(&self) -> Q {
        self.h_param
            .windows(2)
            .map(|w| (&w[1].0 - &w[0].0) * (&w[0].1 + &w[1].1) / qi(2))
            .sum()
    }

    /// Closure of the range of `H_G` over measure `[0, t]` from endpoint `w`.
    pub fn range_near(&self, w: usize, t: &Q) -> (Q, Q) {
        let a = self.h_at_from(w, &Q::zero());
        let b = self.h_at_from(w, t);
        if a <= b { (a, b) } else { (b, a) }
    }
}

/// Union-find over `0..n` with path halving.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the classes of `a` and `b`; the root of `b`'s class survives.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TreeDoc", into = "TreeDoc")]
pub struct MeasuredReebTree {
    vertices: Vec<TreeVertex>,
    edges: Vec<TreeEdge>,
    boundary: Option<usize>,
}

impl MeasuredReebTree {
    pub fn new(vertices: Vec<TreeVertex>, edges: Vec<TreeEdge>, boundary: Option<usize>) -> Result<Self> {
        let t = MeasuredReebTree { vertices, edges, boundary };
        t.validate()?;
        Ok(t)
    }

    /// Checks the tree invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if n == 0 {
            return structural("tree has no vertices");
        }
        if self.edges.len() != n - 1 {
            return structural(format!("{} vertices but {} edges; not a tree", n, self.edges.len()));
        }
        let mut uf = UnionFind::new(n);
        for (i, e) in self.edges.iter().enumerate() {
            if e.u >= n || e.v >= n || e.u == e.v {
                return structural(format!("edge {i} has invalid endpoints"));
            }
            if !uf.union(e.u, e.v) {
                return structural(format!("edge {i} closes a cycle"));
            }
            if !e.measure.is_positive() {
                return structural(format!("edge {i} has non-positive measure"));
            }
            let hp = &e.h_param;
            if hp.len() < 2 {
                return structural(format!("edge {i} needs at least two profile breakpoints"));
            }
            if !hp[0].0.is_zero() || hp[hp.len() - 1].0 != e.measure {
                return structural(format!("edge {i} profile must run from 0 to the edge measure"));
            }
            if hp[0].1 != self.vertices[e.u].h || hp[hp.len() - 1].1 != self.vertices[e.v].h {
                return structural(format!("edge {i} profile does not match its endpoint values"));
            }
            let up = hp[1].1 > hp[0].1;
            for w in hp.windows(2) {
                if w[1].0 <= w[0].0 {
                    return structural(format!("edge {i} profile positions are not increasing"));
                }
                if (w[1].1 > w[0].1) != up || w[1].1 == w[0].1 {
                    return structural(format!("edge {i}: H is not strictly monotone"));
                }
            }
        }
        if self.vertices.iter().any(|v| v.mass.is_negative()) {
            return structural("negative vertex mass");
        }
        let total: Q = self.vertices.iter().map(|v| v.mass.clone()).sum::<Q>()
            + self.edges.iter().map(|e| e.measure.clone()).sum::<Q>();
        if total != qi(1) {
            return structural(format!("total measure is {}, not 1", fmt_q(&total)));
        }
        if let Some(b) = self.boundary {
            if b >= n {
                return structural("boundary vertex out of range");
            }
            if !self.vertices[b].h.is_zero() {
                return structural("boundary vertex must have H = 0");
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[TreeVertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    pub fn boundary(&self) -> Option<usize> {
        self.boundary
    }

    pub fn with_boundary(mut self, b: Option<usize>) -> Result<Self> {
        self.boundary = b;
        self.validate()?;
        Ok(self)
    }

    /// Indices of edges incident to each vertex.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.vertices.len()];
        for (i, e) in self.edges.iter().enumerate() {
            inc[e.u].push(i);
            inc[e.v].push(i);
        }
        inc
    }

    pub fn valence(&self, i: usize) -> usize {
        self.edges.iter().filter(|e| e.u == i || e.v == i).count()
    }

    /// Euler characteristic of the region collapsed to vertex `i`.
    pub fn chi(&self, i: usize) -> i64 {
        2 - self.valence(i) as i64
    }

    /// `Σ_i m_i H_G(v_i) + Σ_e ∫_e H_G dμ`, equal to `∫ H ω`.
    pub fn integral(&self) -> Q {
        self.vertices.iter().map(|v| &v.mass * &v.h).sum::<Q>() + self.edges.iter().map(TreeEdge::integral).sum::<Q>()
    }

    /// Area of `{H_G ≤ level}`.
    pub fn measure_below(&self, level: &Q) -> Q {
        let mut acc: Q = self.vertices.iter().filter(|v| v.h <= *level).map(|v| v.mass.clone()).sum();
        for e in &self.edges {
            for w in e.h_param.windows(2) {
                let ((p0, y0), (p1, y1)) = (&w[0], &w[1]);
                let (lo, hi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
                let len = p1 - p0;
                if *level >= *hi {
                    acc += len;
                } else if *level > *lo {
                    acc += len * (level - lo) / (hi - lo);
                }
            }
        }
        acc
    }

    /// Sorted distinct vertex values.
    pub fn critical_values(&self) -> Vec<Q> {
        let s: BTreeSet<Q> = self.vertices.iter().map(|v| v.h.clone()).collect();
        s.into_iter().collect()
    }

    /// Inserts a mass-zero vertex wherever an edge crosses one of `levels`.
    pub fn subdivide_at_levels(&mut self, levels: &[Q]) {
        let mut out = Vec::with_capacity(self.edges.len());
        for e in std::mem::take(&mut self.edges) {
            let mut cuts: Vec<(Q, Q)> = levels.iter().filter_map(|l| e.position_of(l).map(|p| (p, l.clone()))).collect();
            cuts.sort();
            if cuts.is_empty() {
                out.push(e);
                continue;
            }
            let mut start_v = e.u;
            let mut start_p = Q::zero();
            for (p, level) in cuts {
                let w = self.vertices.len();
                self.vertices.push(TreeVertex { h: level.clone(), mass: Q::zero() });
                out.push(slice_edge(&e, start_v, w, &start_p, &p, &level));
                start_v = w;
                start_p = p;
            }
            let end_h = e.h_param.last().unwrap().1.clone();
            let m = e.measure.clone();
            out.push(slice_edge(&e, start_v, e.v, &start_p, &m, &end_h));
        }
        self.edges = out;
    }

    /// Adds the vertices required by the definition: every point whose
    /// value is the value of some vertex.
    pub fn refine_at_critical_values(&mut self) {
        let levels = self.critical_values();
        self.subdivide_at_levels(&levels);
    }

    /// Structural isomorphism preserving vertex values exactly and masses
    /// and edge measures within `tol`.
    pub fn isomorphic_within(&self, other: &Self, tol: f64) -> bool {
        if self.vertices.len() != other.vertices.len() {
            return false;
        }
        let (ia, ib) = (self.incidence(), other.incidence());
        (0..other.vertices.len()).any(|rb| match_rooted(self, &ia, 0, None, other, &ib, rb, None, tol))
    }
}

fn slice_edge(e: &TreeEdge, from_v: usize, to_v: usize, p0: &Q, p1: &Q, end_h: &Q) -> TreeEdge {
    let start_h = e.h_at(p0);
    let mut hp = vec![(Q::zero(), start_h)];
    for (p, y) in &e.h_param {
        if p > p0 && p < p1 {
            hp.push((p - p0, y.clone()));
        }
    }
    hp.push((p1 - p0, end_h.clone()));
    TreeEdge { u: from_v, v: to_v, measure: p1 - p0, h_param: hp }
}

#[allow(clippy::too_many_arguments)]
fn match_rooted(
    a: &MeasuredReebTree,
    ia: &[Vec<usize>],
    u: usize,
    pu: Option<usize>,
    b: &MeasuredReebTree,
    ib: &[Vec<usize>],
    v: usize,
    pv: Option<usize>,
    tol: f64,
) -> bool {
    let (va, vb) = (&a.vertices[u], &b.vertices[v]);
    if va.h != vb.h || (to_f64(&va.mass) - to_f64(&vb.mass)).abs() > tol {
        return false;
    }
    let ca: Vec<usize> = ia[u].iter().copied().filter(|&e| Some(e) != pu).collect();
    let cb: Vec<usize> = ib[v].iter().copied().filter(|&e| Some(e) != pv).collect();
    if ca.len() != cb.len() {
        return false;
    }
    let mut used = vec![false; cb.len()];
    assign_children(a, ia, u, &ca, 0, b, ib, v, &cb, &mut used, tol)
}

#[allow(clippy::too_many_arguments)]
fn assign_children(
    a: &MeasuredReebTree,
    ia: &[Vec<usize>],
    u: usize,
    ca: &[usize],
    k: usize,
    b: &MeasuredReebTree,
    ib: &[Vec<usize>],
    v: usize,
    cb: &[usize],
    used: &mut [bool],
    tol: f64,
) -> bool {
    if k == ca.len() {
        return true;
    }
    let ea = &a.edges[ca[k]];
    for j in 0..cb.len() {
        if used[j] {
            continue;
        }
        let eb = &b.edges[cb[j]];
        if (to_f64(&ea.measure) - to_f64(&eb.measure)).abs() > tol {
            continue;
        }
        if match_rooted(a, ia, ea.other(u), Some(ca[k]), b, ib, eb.other(v), Some(cb[j]), tol) {
            used[j] = true;
            if assign_children(a, ia, u, ca, k + 1, b, ib, v, cb, used, tol) {
                return true;
            }
            used[j] = false;
        }
    }
    false
}

/// Samples per curved segment of a profile when building edge profiles.
const CURVED_SAMPLES: usize = 1 << 14;

fn is_linear_segment(p: &AxisymmetricProfile, s: &Segment) -> bool {
    match &p.pieces()[s.piece].kind {
        PieceKind::Poly { coeffs } => coeffs.iter().skip(2).all(Zero::is_zero),
        PieceKind::Zero => true,
        _ => false,
    }
}

/// Appends raw `(measure, H)` samples for segment `s`, measured from `z_origin`.
fn push_segment_samples(p: &AxisymmetricProfile, s: &Segment, z_origin: &Q, out: &mut Vec<(Q, Q)>) {
    let half = qi(1) / qi(2);
    let pos = |z: &Q| (z - z_origin) * &half;
    if !is_linear_segment(p, s) {
        let n = CURVED_SAMPLES as i64;
        for j in 1..n {
            let z = &s.z0 + (&s.z1 - &s.z0) * Q::new(j.into(), n.into());
            out.push((pos(&z), from_f64_grid(p.eval_f64(to_f64(&z)))));
        }
    }
    out.push((pos(&s.z1), s.h1.to_q()));
}

/// Keeps the endpoints and the samples strictly between their neighbours in
/// both position and value, so the result is strictly monotone.
fn strictly_monotone(raw: Vec<(Q, Q)>, end: (Q, Q)) -> Vec<(Q, Q)> {
    let mut it = raw.into_iter();
    let first = it.next().expect("at least one sample");
    let up = end.1 > first.1;
    let mut out = vec![first];
    for (t, y) in it {
        let (lt, ly) = out.last().unwrap();
        let between = if up { y > *ly && y < end.1 } else { y < *ly && y > end.1 };
        if t > *lt && t < end.0 && between {
            out.push((t, y));
        }
    }
    out.push(end);
    out
}

enum Item {
    Vertex { h: Q, mass: Q },
    Run { dir: Monotone, segs: Vec<Segment> },
}

/// Measured Reeb tree of an axisymmetric profile.
///
/// The tree is a path in `z` with plateaus collapsed; turning points, poles
/// and plateaus are vertices, and every further point at a vertex value is
/// made a vertex of valence 2.
pub fn tree_from_profile(p: &AxisymmetricProfile) -> Result<MeasuredReebTree> {
    if p.is_singular() {
        return domain("the Reeb tree of a singular profile is not defined");
    }
    let half = qi(1) / qi(2);
    let mut items: Vec<Item> = Vec::new();
    for s in p.segments() {
        let hv = s.h0.to_q();
        match s.dir {
            Monotone::Constant => {
                let mass = (&s.z1 - &s.z0) * &half;
                match items.last_mut() {
                    Some(Item::Vertex { h, mass: m }) if *h == hv => *m += mass,
                    _ => items.push(Item::Vertex { h: hv, mass }),
                }
            }
            dir => {
                match items.last_mut() {
                    Some(Item::Run { dir: d, segs }) if *d == dir => {
                        segs.push(s);
                        continue;
                    }
                    Some(Item::Run { .. }) | None => {
                        items.push(Item::Vertex { h: hv, mass: Q::zero() });
                    }
                    Some(Item::Vertex { .. }) => {}
                }
                items.push(Item::Run { dir, segs: vec![s] });
            }
        }
    }
    if let Some(Item::Run { segs, .. }) = items.last() {
        let last = segs.last().unwrap();
        items.push(Item::Vertex { h: last.h1.to_q(), mass: Q::zero() });
    }

    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    let mut pending: Option<Vec<Segment>> = None;
    for it in items {
        match it {
            Item::Vertex { h, mass } => {
                let id = vertices.len();
                vertices.push(TreeVertex { h: h.clone(), mass });
                if let Some(segs) = pending.take() {
                    let origin = segs[0].z0.clone();
                    let mut raw = vec![(Q::zero(), vertices[id - 1].h.clone())];
                    for s in &segs {
                        push_segment_samples(p, s, &origin, &mut raw);
                    }
                    let measure = (&segs.last().unwrap().z1 - &origin) * &half;
                    let hp = strictly_monotone(raw, (measure.clone(), h));
                    edges.push(TreeEdge { u: id - 1, v: id, measure, h_param: hp });
                }
            }
            Item::Run { segs, .. } => pending = Some(segs),
        }
    }
    let boundary = match p.support() {
        Support::Disc => Some(vertices.len() - 1),
        Support::Sphere => None,
    };
    let mut t = MeasuredReebTree { vertices, edges, boundary };
    t.refine_at_critical_values();
    t.validate()?;
    Ok(t)
}

/// Area of `{f ≤ x}` inside a triangle with sorted vertex values `a ≤ b ≤ c`.
fn triangle_cdf(a: &Q, b: &Q, c: &Q, area: &Q, x: &Q) -> Q {
    if x <= a {
        Q::zero()
    } else if x >= c {
        area.clone()
    } else if x <= b {
        area * (x - a) * (x - a) / ((b - a) * (c - a))
    } else {
        area - area * (c - x) * (c - x) / ((c - b) * (c - a))
    }
}

/// Measured Reeb tree of a piecewise-linear field on a triangulated sphere.
///
/// Connected regions of equal value joined by mesh edges are collapsed
/// first; remaining ties are broken by lowest vertex index. The augmented
/// contour tree is assembled from join and split trees, triangle areas are
/// distributed onto its arcs exactly, arcs joining equal values are
/// contracted and regular nodes are folded into edge profiles.
pub fn tree_from_mesh(mesh: &TriangleMesh) -> Result<MeasuredReebTree> {
    mesh.validate()?;
    let nv = mesh.values.len();
    let vals = &mesh.values;

    // Level clusters.
    let mut uf = UnionFind::new(nv);
    for t in &mesh.triangles {
        let [a, b, c] = t.v;
        for (x, y) in [(a, b), (b, c), (c, a)] {
            if vals[x] == vals[y] {
                uf.union(x, y);
            }
        }
    }
    let mut cluster_of = vec![usize::MAX; nv];
    let mut cvalue: Vec<Q> = Vec::new();
    let mut cmin: Vec<usize> = Vec::new();
    for v in 0..nv {
        let r = uf.find(v);
        if cluster_of[r] == usize::MAX {
            cluster_of[r] = cvalue.len();
            cvalue.push(vals[v].clone());
            cmin.push(v);
        }
        cluster_of[v] = cluster_of[r];
    }
    let nc = cvalue.len();

    // Simulation of simplicity: order by (value, lowest vertex index).
    let mut order: Vec<usize> = (0..nc).collect();
    order.sort_by(|&x, &y| cvalue[x].cmp(&cvalue[y]).then(cmin[x].cmp(&cmin[y])));
    let mut rank = vec![0usize; nc];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }

    let mut nbrs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nc];
    let mut cmass = vec![Q::zero(); nc];
    for t in &mesh.triangles {
        let cs = t.v.map(|x| cluster_of[x]);
        if cs[0] == cs[1] && cs[1] == cs[2] {
            cmass[cs[0]] += &t.area.0;
        }
        for (x, y) in [(cs[0], cs[1]), (cs[1], cs[2]), (cs[2], cs[0])] {
            if x != y {
                nbrs[x].insert(y);
                nbrs[y].insert(x);
            }
        }
    }

    let arcs = contour_tree(&order, &rank, &nbrs);

    // Root the contour tree for path queries.
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nc];
    for &(a, b) in &arcs {
        adj[a].push(b);
        adj[b].push(a);
    }
    let root = order[0];
    let mut parent = vec![usize::MAX; nc];
    let mut depth = vec![0usize; nc];
    let mut stack = vec![root];
    parent[root] = root;
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if parent[y] == usize::MAX {
                parent[y] = x;
                depth[y] = depth[x] + 1;
                stack.push(y);
            }
        }
    }
    if parent.contains(&usize::MAX) {
        return structural("contour tree is disconnected");
    }
    // arc_area[x] is the area on the arc (x, parent[x]).
    let mut arc_area = vec![Q::zero(); nc];
    for t in &mesh.triangles {
        let mut cs = t.v.map(|x| cluster_of[x]);
        cs.sort_by_key(|&c| rank[c]);
        if cs[0] == cs[2] {
            continue;
        }
        let (a, b, c) = (&cvalue[cs[0]], &cvalue[cs[1]], &cvalue[cs[2]]);
        let area = &t.area.0;
        let mut spread = |x: usize, y: usize, lo: &Q, hi: &Q| {
            if x == y || lo == hi {
                return;
            }
            let (mut p, mut q) = (x, y);
            let mut path = Vec::new();
            while p != q {
                if depth[p] >= depth[q] {
                    path.push(p);
                    p = parent[p];
                } else {
                    path.push(q);
                    q = parent[q];
                }
            }
            for node in path {
                let (f0, f1) = (&cvalue[node], &cvalue[parent[node]]);
                let (alo, ahi) = if f0 <= f1 { (f0, f1) } else { (f1, f0) };
                let l = if alo > lo { alo } else { lo };
                let h = if ahi < hi { ahi } else { hi };
                if l < h {
                    arc_area[node] += triangle_cdf(a, b, c, area, h) - triangle_cdf(a, b, c, area, l);
                }
            }
        };
        spread(cs[0], cs[1], a, b);
        spread(cs[1], cs[2], b, c);
    }

    // Contract arcs joining equal values.
    let mut merge = UnionFind::new(nc);
    for x in 0..nc {
        if x != root && cvalue[x] == cvalue[parent[x]] {
            merge.union(x, parent[x]);
        }
    }
    let mut node_mass: HashMap<usize, Q> = HashMap::new();
    for x in 0..nc {
        let r = merge.find(x);
        *node_mass.entry(r).or_insert_with(Q::zero) += &cmass[x];
        if x != root && merge.find(parent[x]) == r {
            *node_mass.get_mut(&r).unwrap() += &arc_area[x];
        }
    }
    // Reduced adjacency: node -> (neighbour, arc measure).
    let mut radj: BTreeMap<usize, Vec<(usize, Q)>> = BTreeMap::new();
    for x in 0..nc {
        let r = merge.find(x);
        radj.entry(r).or_default();
        if x == root {
            continue;
        }
        let pr = merge.find(parent[x]);
        if pr != r {
            radj.get_mut(&r).unwrap().push((pr, arc_area[x].clone()));
            radj.entry(pr).or_default().push((r, arc_area[x].clone()));
        }
    }
    let value = |r: usize| &cvalue[r];
    let is_regular = |r: usize, nb: &[(usize, Q)]| -> bool {
        nb.len() == 2
            && node_mass[&r].is_zero()
            && ((value(nb[0].0) < value(r)) != (value(nb[1].0) < value(r)))
    };
    let mut crit: Vec<usize> = radj.iter().filter(|(&r, nb)| !is_regular(r, nb)).map(|(&r, _)| r).collect();
    crit.sort_by(|&x, &y| rank[x].cmp(&rank[y]));
    let id: HashMap<usize, usize> = crit.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let vertices: Vec<TreeVertex> =
        crit.iter().map(|&r| TreeVertex { h: cvalue[r].clone(), mass: node_mass[&r].clone() }).collect();
    let mut edges = Vec::new();
    for &c in &crit {
        for (first, m0) in &radj[&c] {
            // Walk each chain once, from its lower-id critical end.
            let mut hp = vec![(Q::zero(), cvalue[c].clone())];
            let mut acc = m0.clone();
            let (mut prev, mut cur) = (c, *first);
            while !id.contains_key(&cur) {
                hp.push((acc.clone(), cvalue[cur].clone()));
                let nb = &radj[&cur];
                let (next, m) = if nb[0].0 == prev { &nb[1] } else { &nb[0] };
                acc += m;
                prev = cur;
                cur = *next;
            }
            if id[&c] < id[&cur] {
                hp.push((acc.clone(), cvalue[cur].clone()));
                edges.push(TreeEdge { u: id[&c], v: id[&cur], measure: acc, h_param: hp });
            }
        }
    }
    for e in &mut edges {
        // Zero-area arcs can only join equal values, which were contracted.
        e.h_param.dedup_by(|b, a| a.0 == b.0);
    }
    let mut t = MeasuredReebTree { vertices, edges, boundary: None };
    t.refine_at_critical_values();
    t.validate().map_err(|e| Error::Structural(format!("mesh tree invalid: {e}")))?;
    Ok(t)
}

/// Carr-Snoeyink-Axen merge of join and split trees over nodes ordered by
/// `order` (ascending). Returns contour-tree arcs.
fn contour_tree(order: &[usize], rank: &[usize], nbrs: &[BTreeSet<usize>]) -> Vec<(usize, usize)> {
    let n = order.len();
    // Join tree: components of superlevel sets, swept downward.
    let mut jt_up: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut jt_down: Vec<Option<usize>> = vec![None; n];
    let mut uf = UnionFind::new(n);
    let mut lowest: Vec<usize> = (0..n).collect();
    for &v in order.iter().rev() {
        for &u in &nbrs[v] {
            if rank[u] < rank[v] {
                continue;
            }
            let (ru, rv) = (uf.find(u), uf.find(v));
            if ru != rv {
                let low = lowest[ru];
                jt_up[v].insert(low);
                jt_down[low] = Some(v);
                uf.union(ru, rv);
                let r = uf.find(v);
                lowest[r] = v;
            }
        }
    }
    // Split tree: components of sublevel sets, swept upward.
    let mut st_down: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut st_up: Vec<Option<usize>> = vec![None; n];
    let mut uf = UnionFind::new(n);
    let mut highest: Vec<usize> = (0..n).collect();
    for &v in order {
        for &u in &nbrs[v] {
            if rank[u] > rank[v] {
                continue;
            }
            let (ru, rv) = (uf.find(u), uf.find(v));
            if ru != rv {
                let high = highest[ru];
                st_down[v].insert(high);
                st_up[high] = Some(v);
                uf.union(ru, rv);
                let r = uf.find(v);
                highest[r] = v;
            }
        }
    }

    let mut arcs = Vec::with_capacity(n.saturating_sub(1));
    let mut alive = vec![true; n];
    let is_leaf = |v: usize, jt_up: &[BTreeSet<usize>], st_down: &[BTreeSet<usize>], jt_down: &[Option<usize>], st_up: &[Option<usize>]| {
        (jt_up[v].is_empty() && st_down[v].len() == 1 && jt_down[v].is_some())
            || (st_down[v].is_empty() && jt_up[v].len() == 1 && st_up[v].is_some())
    };
    let mut queue: Vec<usize> = (0..n).filter(|&v| is_leaf(v, &jt_up, &st_down, &jt_down, &st_up)).collect();
    let mut remaining = n;
    while remaining > 1 {
        let Some(v) = queue.pop() else { break };
        if !alive[v] || !is_leaf(v, &jt_up, &st_down, &jt_down, &st_up) {
            continue;
        }
        let mut touched = Vec::new();
        if jt_up[v].is_empty() && jt_down[v].is_some() && st_down[v].len() == 1 {
            // Upper leaf.
            let w = jt_down[v].unwrap();
            arcs.push((v, w));
            jt_up[w].remove(&v);
            touched.push(w);
            splice(v, &mut st_down, &mut st_up, &mut touched);
        } else {
            // Lower leaf.
            let w = st_up[v].unwrap();
            arcs.push((v, w));
            st_down[w].remove(&v);
            touched.push(w);
            splice(v, &mut jt_up, &mut jt_down, &mut touched);
        }
        alive[v] = false;
        remaining -= 1;
        for t in touched {
            if alive[t] && is_leaf(t, &jt_up, &st_down, &jt_down, &st_up) {
                queue.push(t);
            }
        }
    }
    arcs
}

/// Removes `v` from a tree stored as child sets plus an optional parent,
/// reconnecting its children to its parent.
fn splice(v: usize, children: &mut [BTreeSet<usize>], parent: &mut [Option<usize>], touched: &mut Vec<usize>) {
    let kids = std::mem::take(&mut children[v]);
    let p = parent[v].take();
    if let Some(p) = p {
        children[p].remove(&v);
        touched.push(p);
    }
    for k in kids {
        parent[k] = p;
        if let Some(p) = p {
            children[p].insert(k);
        }
        touched.push(k);
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct VertexDoc {
    id: usize,
    h: RatStr,
    mass: RatStr,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct EdgeDoc {
    u: usize,
    v: usize,
    measure: RatStr,
    h_param: Vec<(RatStr, RatStr)>,
}

/// Wire form of [`MeasuredReebTree`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeDoc {
    vertices: Vec<VertexDoc>,
    edges: Vec<EdgeDoc>,
    boundary: Option<usize>,
}

impl TryFrom<TreeDoc> for MeasuredReebTree {
    type Error = Error;
    fn try_from(d: TreeDoc) -> Result<Self> {
        let n = d.vertices.len();
        let mut index = HashMap::new();
        for (i, v) in d.vertices.iter().enumerate() {
            if index.insert(v.id, i).is_some() {
                return structural(format!("duplicate vertex id {}", v.id));
            }
        }
        let look = |id: usize| index.get(&id).copied().ok_or_else(|| Error::Structural(format!("unknown vertex id {id}")));
        let vertices = d.vertices.iter().map(|v| TreeVertex { h: v.h.0.clone(), mass: v.mass.0.clone() }).collect();
        let edges = d
            .edges
            .into_iter()
            .map(|e| {
                Ok(TreeEdge {
                    u: look(e.u)?,
                    v: look(e.v)?,
                    measure: e.measure.0,
                    h_param: e.h_param.into_iter().map(|(a, b)| (a.0, b.0)).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let boundary = d.boundary.map(look).transpose()?;
        debug_assert_eq!(n, index.len());
        MeasuredReebTree::new(vertices, edges, boundary)
    }
}

impl From<MeasuredReebTree> for TreeDoc {
    fn from(t: MeasuredReebTree) -> Self {
        TreeDoc {
            vertices: t
                .vertices
                .into_iter()
                .enumerate()
                .map(|(id, v)| VertexDoc { id, h: RatStr(v.h), mass: RatStr(v.mass) })
                .collect(),
            edges: t
                .edges
                .into_iter()
                .map(|e| EdgeDoc {
                    u: e.u,
                    v: e.v,
                    measure: RatStr(e.measure),
                    h_param: e.h_param.into_iter().map(|(a, b)| (RatStr(a), RatStr(b))).collect(),
                })
                .collect(),
            boundary: t.boundary,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::rational::q;

    #[test]
    fn ramp_tree() {
        let t = tree_from_profile(&ramp()).unwrap();
        assert_eq!(t.vertices().len(), 2);
        assert_eq!(t.edges().len(), 1);
        let b = t.boundary().unwrap();
        assert_eq!(t.vertices()[b], TreeVertex { h: qi(0), mass: q(3, 4) });
        let pole = 1 - b;
        assert_eq!(t.vertices()[pole], TreeVertex { h: qi(1), mass: qi(0) });
        assert_eq!(t.edges()[0].measure, q(1, 4));
    }

    #[test]
    fn tent_tree() {
        let t = tree_from_profile(&tent()).unwrap();
        assert_eq!(t.vertices().len(), 3);
        let mut masses: Vec<Q> = t.vertices().iter().map(|v| v.mass.clone()).collect();
        masses.sort();
        assert_eq!(masses, vec![qi(0), q(1, 20), q(11, 20)]);
        assert!(t.edges().iter().all(|e| e.measure == q(1, 5)));
        assert_eq!(t.integral(), q(1, 5));
    }

    #[test]
    fn offset_bump_gets_a_valence_two_vertex() {
        let t = tree_from_profile(&offset_bump()).unwrap();
        // pole (1/2), peak circle (1), the level-1/2 circle on the way down, outer plateau (0).
        assert_eq!(t.vertices().len(), 4);
        let half = t.vertices().iter().filter(|v| v.h == q(1, 2)).count();
        assert_eq!(half, 2);
    }

    #[test]
    fn integral_conserved_for_curved_edges() {
        for p in [smooth_ramp(), smooth_tent(), offset_bump()] {
            let t = tree_from_profile(&p).unwrap();
            let exact = p.integral().to_f64() / 2.0;
            assert!((to_f64(&t.integral()) - exact).abs() < 1e-9, "{} vs {}", to_f64(&t.integral()), exact);
        }
    }

    #[test]
    fn mesh_tree_of_ramp_matches_profile_tree() {
        let m = TriangleMesh::sample_profile(&ramp(), 16, 40).unwrap();
        let tm = tree_from_mesh(&m).unwrap();
        let tp = tree_from_profile(&ramp()).unwrap();
        assert!(tm.isomorphic_within(&tp, 0.0), "{tm:?}");
    }

    #[test]
    fn two_bump_mesh_tree() {
        let t = tree_from_mesh(&two_bump_mesh(8)).unwrap();
        assert_eq!(t.vertices().len(), 4);
        assert!(t.edges().iter().all(|e| e.measure == q(1, 4)));
        let bg = t.vertices().iter().position(|v| v.h.is_zero()).unwrap();
        assert_eq!(t.vertices()[bg].mass, q(1, 4));
        assert_eq!(t.valence(bg), 2);
    }

    #[test]
    fn tree_json_round_trip() {
        let t = tree_from_profile(&ramp()).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        let back: MeasuredReebTree = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        let doc = r#"{"vertices":[{"id":0,"h":"0","mass":"3/4"},{"id":1,"h":"1","mass":"0"}],
            "edges":[{"u":0,"v":1,"measure":"1/4","h_param":[["0","0"],["1/4","1"]]}],"boundary":0}"#;
        let t2: MeasuredReebTree = serde_json::from_str(doc).unwrap();
        assert!(t2.isomorphic_within(&t, 0.0));
    }

    #[test]
    fn rejects_bad_trees() {
        let v = |h: i64, m: Q| TreeVertex { h: qi(h), mass: m };
        let e = |u, w, h0: i64, h1: i64| TreeEdge { u, v: w, measure: q(1, 4), h_param: vec![(qi(0), qi(h0)), (q(1, 4), qi(h1))] };
        let bad_total = MeasuredReebTree::new(vec![v(0, q(1, 2)), v(1, qi(0))], vec![e(0, 1, 0, 1)], None);
        assert!(matches!(bad_total, Err(Error::Structural(_))));
        let cycle = MeasuredReebTree::new(
            vec![v(0, q(1, 4)), v(1, qi(0)), v(2, qi(0))],
            vec![e(0, 1, 0, 1), e(1, 2, 1, 2), e(0, 2, 0, 2)],
            None,
        );
        assert!(cycle.is_err());
        let bad_boundary = MeasuredReebTree::new(vec![v(0, q(3, 4)), v(1, qi(0))], vec![e(0, 1, 0, 1)], Some(1));
        assert!(bad_boundary.is_err());
    }
}
