#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ruelle_weyl::model::{AxisymmetricProfile, Piece, PieceKind, Support};
use ruelle_weyl::rational::{q, qi, Q};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sorted distinct heights strictly inside `(-1, end)` on the grid `1/den`.
fn breakpoints(r: &mut ChaCha8Rng, n: usize, end: &Q, den: i64) -> Vec<Q> {
    let mut zs: Vec<Q> = (0..n)
        .map(|_| q(r.gen_range(-den + 1..den), den))
        .filter(|z| z < end && *z > qi(-1))
        .collect();
    zs.sort();
    zs.dedup();
    zs
}

fn small_q(r: &mut ChaCha8Rng) -> Q {
    q(r.gen_range(-12..=12), r.gen_range(1..=4))
}

/// Continuous piecewise-linear profile; disc-supported profiles vanish
/// from `-1/10` on.
pub fn random_pl_profile(seed: u64, support: Support) -> AxisymmetricProfile {
    let mut r = rng(seed);
    let end = if support == Support::Disc { q(-1, 10) } else { qi(1) };
    let n = r.gen_range(1..6);
    let mut zs = vec![qi(-1)];
    zs.extend(breakpoints(&mut r, n, &end, 40));
    zs.push(end.clone());
    let mut vals: Vec<Q> = zs.iter().map(|_| small_q(&mut r)).collect();
    if support == Support::Disc {
        *vals.last_mut().unwrap() = qi(0);
    }
    let mut pieces = Vec::new();
    for j in 0..zs.len() - 1 {
        let (z0, z1, h0, h1) = (&zs[j], &zs[j + 1], &vals[j], &vals[j + 1]);
        let slope = (h1 - h0) / (z1 - z0);
        pieces.push(Piece::new(z0.clone(), z1.clone(), PieceKind::Poly { coeffs: vec![h0 - &slope * z0, slope] }));
    }
    if end < qi(1) {
        pieces.push(Piece::new(end, qi(1), PieceKind::Zero));
    }
    AxisymmetricProfile::new(support, pieces).unwrap()
}

/// Smooth disc-supported profile made of flat steps between random levels.
pub fn random_smooth_disc_profile(seed: u64) -> AxisymmetricProfile {
    let mut r = rng(seed);
    let end = q(r.gen_range(-8..=-1), 10);
    let n = r.gen_range(1..5);
    let mut zs = vec![qi(-1)];
    zs.extend(breakpoints(&mut r, n, &end, 40));
    zs.push(end.clone());
    let mut vals: Vec<Q> = zs.iter().map(|_| small_q(&mut r)).collect();
    *vals.last_mut().unwrap() = qi(0);
    let mut pieces = Vec::new();
    for j in 0..zs.len() - 1 {
        pieces.push(Piece::new(
            zs[j].clone(),
            zs[j + 1].clone(),
            PieceKind::Step { lo: vals[j].clone(), hi: vals[j + 1].clone() },
        ));
    }
    pieces.push(Piece::new(end, qi(1), PieceKind::Zero));
    AxisymmetricProfile::new(Support::Disc, pieces).unwrap()
}

pub fn random_rationals(seed: u64, n: usize) -> Vec<Q> {
    let mut r = rng(seed);
    (0..n).map(|_| q(r.gen_range(-50..=50), r.gen_range(1..=9))).collect()
}
