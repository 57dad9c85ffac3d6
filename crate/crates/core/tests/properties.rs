mod common;

use common::{random_pl_profile, random_rationals, random_smooth_disc_profile, rng};
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::Rng;
use ruelle_weyl::invariants::{
    calabi, calabi_tree, chi_weighted_sum, edge_sum, hofer_norm, ruelle_levelcount, ruelle_tree, HoferNorm,
};
use ruelle_weyl::model::{area_of_sublevel, area_of_sublevel_f64, fixtures, height_of_area, height_of_area_f64, Support};
use ruelle_weyl::rational::{q, qi, to_f64, Q};
use ruelle_weyl::reeb::{tree_from_mesh, tree_from_profile};
use ruelle_weyl::spectral::{
    audit, extrapolate_limit, fk, muk_axisymmetric, muk_bounds, place_link, weyl_sequence, LinkPlacement, WeylInput,
    WeylMode,
};
use ruelle_weyl::twists::{make_smoothing, sphere_twist_table, twist_t_profile, HarmonicHalf};
use ruelle_weyl::{AxisymmetricProfile, Error, MeasuredReebTree, TriangleMesh, Value};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn exact(v: Value) -> Q {
    v.exact().cloned().expect("exact value expected")
}

/// `|{z : h(z) ≤ level}| / 2` for a profile of linear pieces.
fn pl_cdf_oracle(p: &AxisymmetricProfile, level: &Q) -> Q {
    let mut acc = Q::zero();
    for pc in p.pieces() {
        let a = exact(p.eval(&pc.from).unwrap());
        let b = exact(p.eval(&pc.to).unwrap());
        let len = &pc.to - &pc.from;
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if *level >= hi {
            acc += len;
        } else if *level >= lo && hi != lo {
            acc += len * (level - &lo) / (&hi - &lo);
        }
    }
    acc / qi(2)
}

fn random_q_in(r: &mut impl Rng, lo: i64, hi: i64, den: i64) -> Q {
    q(r.gen_range(lo * den..=hi * den), den)
}

fn placement_k(t: &MeasuredReebTree, k: usize) -> (usize, LinkPlacement) {
    match place_link(t, k) {
        Ok(lp) => (k, lp),
        Err(Error::KTooSmall { min_k, .. }) => {
            let lp = place_link(t, min_k.max(k)).expect("min_k is always admissible");
            (min_k.max(k), lp)
        }
        Err(e) => panic!("unexpected placement error: {e}"),
    }
}

#[test]
fn area_round_trip_is_exact() {
    let mut r = rng(1);
    for _ in 0..500 {
        let z = random_q_in(&mut r, -1, 1, 997);
        let a = area_of_sublevel(&z);
        assert!(a >= Q::zero() && a <= qi(1));
        assert_eq!(height_of_area(&a), z);
        let zf = to_f64(&z);
        assert!((height_of_area_f64(area_of_sublevel_f64(zf)) - zf).abs() <= 1e-12);
    }
    assert_eq!(area_of_sublevel(&qi(-1)), Q::zero());
    assert_eq!(area_of_sublevel(&qi(0)), q(1, 2));
    assert_eq!(area_of_sublevel(&qi(1)), qi(1));
}

#[test]
fn fixtures_match_their_formulas() {
    let mut r = rng(2);
    let (ramp, tent, height, twist) = (fixtures::ramp(), fixtures::tent(), fixtures::height(), twist_t_profile());
    for _ in 0..100 {
        let z = random_q_in(&mut r, -1, 1, 1000);
        let want_ramp = if z <= q(-1, 2) { qi(-2) * (&z + q(1, 2)) } else { Q::zero() };
        assert_eq!(exact(ramp.eval(&z).unwrap()), want_ramp);
        let want_tent = if z <= q(-9, 10) || z >= q(-1, 10) {
            Q::zero()
        } else if z <= q(-1, 2) {
            (&z + q(9, 10)) * q(5, 2)
        } else {
            (q(-1, 10) - &z) * q(5, 2)
        };
        assert_eq!(exact(tent.eval(&z).unwrap()), want_tent);
        assert_eq!(exact(height.eval(&z).unwrap()), z);

        if z > qi(-1) {
            let zf = to_f64(&z);
            let h = twist.eval_f64(zf);
            let base = (2.0 / (1.0 + zf)).sqrt();
            if z <= q(-3, 4) {
                assert!((h - base).abs() <= 4.0 * f64::EPSILON * base, "z = {zf}");
            } else if z >= q(-1, 2) {
                assert_eq!(h, 0.0);
            } else {
                assert!((0.0..=base).contains(&h));
            }
        }
    }
}

#[test]
fn twist_cutoff_is_monotone() {
    let p = twist_t_profile();
    let n = 4000;
    let zs: Vec<f64> = (0..=n).map(|j| -0.8 + 0.35 * j as f64 / n as f64).collect();
    let hs: Vec<f64> = zs.iter().map(|&z| p.eval_f64(z)).collect();
    for w in hs.windows(2) {
        assert!(w[1] <= w[0] + 1e-15);
    }
}

#[test]
fn smoothing_agrees_outside_the_cap() {
    let base = twist_t_profile();
    let mut r = rng(3);
    for n in 1..8 {
        let s = make_smoothing(&base, n).unwrap();
        let cap = -1.0 + 4f64.powi(-(n as i32));
        let plateau = 2f64.powi(n as i32) * 2f64.sqrt();
        assert!((s.eval_f64(-1.0) - plateau).abs() <= 1e-12 * plateau);
        assert!((s.eval_f64(cap) - plateau).abs() <= 1e-12 * plateau);
        for _ in 0..100 {
            let z = r.gen_range(cap..1.0);
            assert_eq!(s.eval_f64(z), base.eval_f64(z), "n = {n}, z = {z}");
        }
        // Sup-norm gap between consecutive members is the plateau gap.
        let next = make_smoothing(&base, n + 1).unwrap();
        let gap = (0..=2000)
            .map(|j| -1.0 + 2.0 * j as f64 / 2000.0)
            .map(|z| (next.eval_f64(z) - s.eval_f64(z)).abs())
            .fold(0.0, f64::max);
        assert!(gap <= plateau * (1.0 + 1e-12));
    }
}

#[test]
fn hofer_norm_of_fixtures() {
    let HoferNorm::Finite(v) = hofer_norm(&fixtures::ramp()) else { panic!("ramp is bounded") };
    assert_eq!(exact(v), qi(1));
    let HoferNorm::Finite(v) = hofer_norm(&fixtures::height()) else { panic!("height is bounded") };
    assert_eq!(exact(v), qi(2));
    assert!(matches!(hofer_norm(&twist_t_profile()), HoferNorm::Unbounded));
}

#[test]
fn quasimorphism_defect_vanishes_for_commuting_flows() {
    for seed in 0..20 {
        let a = random_pl_profile(100 + seed, Support::Disc);
        let b = random_pl_profile(200 + seed, Support::Disc);
        let sum = a.add(&b).unwrap();
        for k in [2, 3, 7, 12, 31] {
            let lhs = exact(fk(&sum, k).unwrap());
            let rhs = exact(fk(&a, k).unwrap()) + exact(fk(&b, k).unwrap());
            assert_eq!(lhs, rhs);
        }
    }
}

/// `S(k-1)/2^{k-2}` tends to 4 with differences `≈ 2√2 |ζ(1/2)| (√2 - 1) 2^{-k/2}`.
#[test]
fn sphere_sum_ratio_converges_at_half_exponential_rate() {
    const ZETA_HALF: f64 = -1.460_354_508_809_586_8;
    let hh = HarmonicHalf::new();
    let ratio = |k: u32| hh.s(k - 1).mid() / 2f64.powi(k as i32 - 2);
    let c = 2.0 * 2f64.sqrt() * ZETA_HALF.abs() * (2f64.sqrt() - 1.0);
    for k in 12..=40u32 {
        let d = (ratio(k) - ratio(k - 1)).abs();
        let scaled = d * 2f64.powf(k as f64 / 2.0);
        assert!((scaled - c).abs() <= 0.05 * c, "k = {k}: scaled difference {scaled}, expected {c}");
    }
    assert!((ratio(40) - 4.0).abs() < 1e-5);
}

#[test]
fn harmonic_half_matches_compensated_summation() {
    let hh = HarmonicHalf::new();
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut next_check = 1u64;
    for i in 1..=(1u64 << 22) {
        let y = 1.0 / (i as f64).sqrt() - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if i == next_check {
            let enc = hh.sum(i);
            assert!(enc.lo - 1e-12 <= sum && sum <= enc.hi + 1e-12, "n = {i}");
            // Outward rounding adds about 2 ulp(H(i)) per term.
            assert!(enc.width() <= 1e-15 * (i as f64).powf(1.5) + 1e-13, "n = {i}: width {}", enc.width());
            next_check = next_check * 2 + 1;
        }
    }
}

#[test]
fn sphere_twist_tail_constant_is_stable() {
    for row in sphere_twist_table(40).unwrap() {
        assert!(row.tail.hi <= 3.0, "k = {}", row.k);
    }
}

proptest! {
    #![proptest_config(cfg(48))]

    #[test]
    fn tree_conserves_measure_and_integral(seed in any::<u64>(), sphere in any::<bool>()) {
        let support = if sphere { Support::Sphere } else { Support::Disc };
        let p = random_pl_profile(seed, support);
        let t = tree_from_profile(&p).unwrap();
        let total: Q = t.vertices().iter().map(|v| v.mass.clone()).sum::<Q>()
            + t.edges().iter().map(|e| e.measure.clone()).sum::<Q>();
        prop_assert_eq!(total, qi(1));
        prop_assert_eq!(t.integral(), exact(p.integral()) / qi(2));
        let chi: i64 = (0..t.vertices().len()).map(|i| t.chi(i)).sum();
        prop_assert_eq!(chi, 2);
    }

    #[test]
    fn ruelle_routes_agree(seed in any::<u64>()) {
        let p = random_pl_profile(seed, Support::Disc);
        let t = tree_from_profile(&p).unwrap();
        let tree = ruelle_tree(&t).unwrap();
        let level = ruelle_levelcount(&p).unwrap();
        prop_assert_eq!(tree.exact.clone(), level.exact.clone());
        prop_assert_eq!(tree.error_bound, 0.0);
        prop_assert_eq!(edge_sum(&t, t.boundary().unwrap()), chi_weighted_sum(&t));
    }

    #[test]
    fn subdivision_leaves_tree_invariants_unchanged(seed in any::<u64>()) {
        let p = random_pl_profile(seed, Support::Disc);
        let t = tree_from_profile(&p).unwrap();
        let mut r = rng(seed ^ 0x5eed);
        let levels: Vec<Q> = (0..4).map(|_| random_q_in(&mut r, -3, 3, 37)).collect();
        let mut s = t.clone();
        s.subdivide_at_levels(&levels);
        prop_assert_eq!(chi_weighted_sum(&s), chi_weighted_sum(&t));
        prop_assert_eq!(s.integral(), t.integral());
        prop_assert_eq!(ruelle_tree(&s).unwrap().exact, ruelle_tree(&t).unwrap().exact);
        for l in &levels {
            prop_assert_eq!(s.measure_below(l), t.measure_below(l));
        }
    }

    #[test]
    fn calabi_is_linear(seed in any::<u64>(), c in -20i64..20, d in 1i64..7) {
        let a = random_pl_profile(seed, Support::Disc);
        let b = random_pl_profile(seed.wrapping_add(7), Support::Disc);
        let c = q(c, d);
        let lhs = exact(calabi(&a.add(&b.scale(&c).unwrap()).unwrap()).unwrap());
        let rhs = exact(calabi(&a).unwrap()) + &c * exact(calabi(&b).unwrap());
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(calabi_tree(&tree_from_profile(&a).unwrap()).unwrap(), exact(calabi(&a).unwrap()));
    }

    #[test]
    fn measure_below_matches_cdf_oracles(seed in any::<u64>()) {
        let p = random_pl_profile(seed, Support::Sphere);
        let t = tree_from_profile(&p).unwrap();
        let mesh = TriangleMesh::sample_profile(&p, 3, 12).unwrap();
        let tm = tree_from_mesh(&mesh).unwrap();
        let mut r = rng(seed ^ 0xcdf);
        for _ in 0..8 {
            let level = random_q_in(&mut r, -4, 4, 29);
            let want = pl_cdf_oracle(&p, &level);
            prop_assert_eq!(t.measure_below(&level), want.clone());
            prop_assert_eq!(tm.measure_below(&level), want);
        }
        for v in t.vertices() {
            prop_assert_eq!(t.measure_below(&v.h), pl_cdf_oracle(&p, &v.h));
        }
    }

    #[test]
    fn muk_shifts_and_scales(seed in any::<u64>(), k in 1usize..60, c in -30i64..30) {
        let p = random_pl_profile(seed, Support::Sphere);
        let c = q(c, 7);
        let base = exact(muk_axisymmetric(&p, k).unwrap());
        prop_assert_eq!(exact(muk_axisymmetric(&p.shift(&c).unwrap(), k).unwrap()), &base + &c);
        let s = c.abs();
        prop_assert_eq!(exact(muk_axisymmetric(&p.scale(&s).unwrap(), k).unwrap()), &base * &s);
    }

    #[test]
    fn placements_pass_the_audit(seed in any::<u64>(), k in 1usize..80, sphere in any::<bool>()) {
        let support = if sphere { Support::Sphere } else { Support::Disc };
        let p = random_pl_profile(seed, support);
        let t = tree_from_profile(&p).unwrap();
        let (k, lp) = placement_k(&t, k);
        prop_assert_eq!(lp.circles.len(), k);
        prop_assert!(audit(&t, &lp).is_ok(), "{:?}", audit(&t, &lp));
        let total: Q = lp.complement_measures.iter().map(|m| m.0.clone()).sum();
        prop_assert_eq!(total, qi(1));
    }

    #[test]
    fn equal_spacing_lies_inside_link_bounds(seed in any::<u64>(), k in 1usize..80) {
        let p = random_pl_profile(seed, Support::Sphere);
        let t = tree_from_profile(&p).unwrap();
        let (k, _) = placement_k(&t, k);
        let (lo, hi) = muk_bounds(&t, k).unwrap();
        let m = exact(muk_axisymmetric(&p, k).unwrap());
        prop_assert!(lo <= m && m <= hi, "k = {}: {} not in [{}, {}]", k, m, lo, hi);
    }

    #[test]
    fn smooth_disc_profiles_keep_routes_consistent(seed in any::<u64>()) {
        let p = random_smooth_disc_profile(seed);
        let t = tree_from_profile(&p).unwrap();
        prop_assert_eq!(ruelle_tree(&t).unwrap().exact, ruelle_levelcount(&p).unwrap().exact);
        let chi: i64 = (0..t.vertices().len()).map(|i| t.chi(i)).sum();
        prop_assert_eq!(chi, 2);
    }

    #[test]
    fn json_round_trips_are_exact(seed in any::<u64>(), k in 1usize..40) {
        let p = random_pl_profile(seed, Support::Disc);
        let back: AxisymmetricProfile = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        prop_assert_eq!(&back, &p);
        let t = tree_from_profile(&p).unwrap();
        let back: MeasuredReebTree = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        prop_assert_eq!(&back, &t);
        let mesh = TriangleMesh::sample_profile(&p, 3, 4).unwrap();
        let back: TriangleMesh = serde_json::from_str(&serde_json::to_string(&mesh).unwrap()).unwrap();
        prop_assert_eq!(&back, &mesh);
        let (_, lp) = placement_k(&t, k);
        let back: LinkPlacement = serde_json::from_str(&serde_json::to_string(&lp).unwrap()).unwrap();
        prop_assert_eq!(&back, &lp);
        let ru = ruelle_tree(&t).unwrap();
        let back: ruelle_weyl::invariants::RuelleEstimate =
            serde_json::from_str(&serde_json::to_string(&ru).unwrap()).unwrap();
        prop_assert_eq!(back, ru);
    }
}

#[test]
fn rational_round_trip_through_strings() {
    for x in random_rationals(4, 200) {
        let s = ruelle_weyl::rational::fmt_q(&x);
        assert_eq!(ruelle_weyl::rational::parse_q(&s).unwrap(), x);
    }
}

#[test]
fn weyl_extrapolation_contains_target_on_pl_fixtures() {
    let ks: Vec<usize> = (8..=400).collect();
    for (name, p) in [("ramp", fixtures::ramp()), ("tent", fixtures::tent())] {
        let seq = weyl_sequence(WeylInput::Profile(&p), &ks, WeylMode::Disc).unwrap();
        let ex = extrapolate_limit(&seq.entries).unwrap();
        let target = to_f64(&seq.target);
        assert!(ex.converged, "{name}");
        assert!((ex.limit - target).abs() <= ex.error, "{name}: {} ± {} vs {target}", ex.limit, ex.error);
    }
    let p = fixtures::ramp();
    let t = tree_from_profile(&p).unwrap();
    let ks: Vec<usize> = (16..=200).collect();
    let seq = weyl_sequence(WeylInput::Tree(&t), &ks, WeylMode::Disc).unwrap();
    for e in &seq.entries {
        assert!(e.lo <= e.hi);
    }
    let ex = extrapolate_limit(&seq.entries).unwrap();
    assert!((ex.limit - to_f64(&seq.target)).abs() <= ex.error);
}

#[test]
fn sequence_entries_sorted_and_deduplicated() {
    let p = fixtures::tent();
    let seq = weyl_sequence(WeylInput::Profile(&p), &[9, 3, 5, 3, 7], WeylMode::Disc).unwrap();
    let ks: Vec<usize> = seq.entries.iter().map(|e| e.k).collect();
    assert_eq!(ks, vec![3, 5, 7, 9]);
}
