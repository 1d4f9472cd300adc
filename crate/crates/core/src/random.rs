//! Seeded random operators for sweeps and test inputs.
//!
//! Everything here is driven by [`ChaCha8Rng`] so that a `u64` seed pins the
//! output across platforms.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::qla::{Effect, Operator, State, C64};

pub type QrfRng = ChaCha8Rng;

pub fn rng(seed: u64) -> QrfRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream seed from a base seed and an index.
pub fn substream(seed: u64, index: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ index.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian_c64(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

/// GUE-like random Hermitian operator.
pub fn hermitian(dim: usize, rng: &mut impl Rng) -> Operator {
    let g = gaussian_matrix(dim, dim, rng);
    Operator::from_matrix(&g + g.adjoint()).unwrap().scale(0.5)
}

/// Haar-random unit vector.
pub fn unit_vector(dim: usize, rng: &mut impl Rng) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..dim).map(|_| gaussian_c64(rng)).collect();
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

pub fn pure_state(dim: usize, rng: &mut impl Rng) -> State {
    State::pure(&unit_vector(dim, rng)).expect("unit vector")
}

/// Random density operator `G G* / tr(G G*)` with `G` of the given rank.
pub fn mixed_state(dim: usize, rank: usize, rng: &mut impl Rng) -> State {
    let g = gaussian_matrix(dim, rank.max(1), rng);
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    State::new(Operator::from_matrix(w / C64::new(tr, 0.0)).unwrap()).expect("normalised Gram matrix")
}

/// Pure with probability one half, otherwise of random rank.
pub fn state(dim: usize, rng: &mut impl Rng) -> State {
    if rng.random_bool(0.5) {
        pure_state(dim, rng)
    } else {
        let rank = rng.random_range(1..=dim);
        mixed_state(dim, rank, rng)
    }
}

/// Pure state with real, bell-shaped number amplitudes and small random
/// phases, mixed with a little white noise. Its phase distribution is
/// concentrated near zero.
pub fn localized_state(dim: usize, rng: &mut impl Rng) -> State {
    let mid = rng.random_range(0.0..dim as f64 - 1.0 + f64::EPSILON);
    let width = rng.random_range(0.5..=(dim as f64 / 2.0).max(0.5));
    let jitter = rng.random_range(0.0..0.2);
    let amps: Vec<C64> = (0..dim)
        .map(|k| {
            let a = (-(k as f64 - mid).powi(2) / (4.0 * width * width)).exp();
            C64::from_polar(a, jitter * rng.random_range(-1.0..1.0))
        })
        .collect();
    let pure = State::pure(&amps).expect("nonzero amplitudes");
    let noise: f64 = rng.random_range(0.0..0.05);
    let mixed = &pure.op().scale(1.0 - noise) + &Operator::identity(dim).scale(noise / dim as f64);
    State::new(mixed).expect("convex mixture of states")
}

/// Random Hermitian with its spectrum mapped affinely onto a random
/// sub-interval of `[0, 1]`.
pub fn effect(dim: usize, rng: &mut impl Rng) -> Effect {
    let h = hermitian(dim, rng);
    let (vals, vecs) = h.eigh();
    let mapped = affine_into_unit(&vals, rng);
    Effect::new(Operator::from_spectral(&mapped, &vecs)).expect("spectrum in [0, 1]")
}

/// Random projection of random rank in `1..dim` (or rank 1 for `dim == 1`).
pub fn projection(dim: usize, rng: &mut impl Rng) -> Effect {
    let h = hermitian(dim, rng);
    let (_, vecs) = h.eigh();
    let rank = if dim <= 1 { dim } else { rng.random_range(1..dim) };
    let vals: Vec<f64> = (0..dim).map(|k| if k < rank { 1.0 } else { 0.0 }).collect();
    Effect::new(Operator::from_spectral(&vals, &vecs)).expect("projection")
}

pub(crate) fn affine_into_unit(vals: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    let a: f64 = rng.random();
    let b: f64 = rng.random();
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max - min > 1e-12) {
        return vec![lo + (hi - lo) * 0.5; vals.len()];
    }
    vals.iter()
        .map(|v| (lo + (hi - lo) * (v - min) / (max - min)).clamp(0.0, 1.0))
        .collect()
}

/// Random isometry `dim_in → dim_out` (columns orthonormal), via QR of a
/// Gaussian matrix.
pub fn isometry(dim_out: usize, dim_in: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    assert!(dim_out >= dim_in, "isometry needs dim_out >= dim_in");
    let g = gaussian_matrix(dim_out, dim_in, rng);
    g.qr().q()
}
