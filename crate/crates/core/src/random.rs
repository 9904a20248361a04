//! Seeded random streams and random matrix ensembles.
//!
//! Every test case draws from its own stream, derived from
//! `(master_seed, case_id, index)` by a fixed 64-bit mix. The mix is
//! FNV-1a over the case identifier followed by two rounds of splitmix64,
//! so adding or reordering cases never perturbs another case's samples.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{CMatrix, Tolerances, C64};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Stream seed for sample `index` of case `case_id`.
pub fn stream_seed(master_seed: u64, case_id: &str, index: u64) -> u64 {
    let h = splitmix64(master_seed ^ fnv1a(case_id.as_bytes()));
    splitmix64(h ^ splitmix64(index))
}

pub fn case_rng(master_seed: u64, case_id: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master_seed, case_id, index))
}

/// Standard complex Gaussian, `E|z|² = 1`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn real_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn real_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(real_normal(rng), 0.0))
}

/// Haar unitary as the polar part of a Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let tol = Tolerances::default();
    loop {
        let g = ginibre(rng, n, n);
        if let Ok((u, _)) = g.polar(&tol) {
            if u.is_unitary(&tol) {
                return u;
            }
        }
    }
}

/// `G·G^* + eps·1` for a square Ginibre `G`.
pub fn positive_definite<R: Rng + ?Sized>(rng: &mut R, n: usize, eps: f64) -> CMatrix {
    let g = ginibre(rng, n, n);
    let mut a = (&g * &g.adjoint()).hermitian_part();
    for i in 0..n {
        a[(i, i)] += C64::new(eps, 0.0);
    }
    a
}

/// Trace-one PSD matrix of rank `rank`.
pub fn density<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> CMatrix {
    let g = ginibre(rng, n, rank.clamp(1, n));
    let rho = (&g * &g.adjoint()).hermitian_part();
    let t = rho.trace().re;
    rho.scale_real(1.0 / t)
}

/// Unit vector `ψψ^*` projection onto a random direction.
pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    density(rng, n, 1)
}

pub fn complex_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| complex_normal(rng)).collect()
}

/// Uniform point on the real unit sphere in dimension `n`.
pub fn real_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| real_normal(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}
