//! Reference computations for integration tests.
//!
//! Everything here goes through real symmetric eigenproblems on realified
//! Hermitian matrices, so it shares no factorization code with the library.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use schatten_lab::{CMatrix, PIndex, C64};

pub fn rng(label: &str, k: u64) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(h ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

pub fn psd(rng: &mut impl Rng, n: usize, rank: usize) -> CMatrix {
    let g = gaussian(rng, n, rank.max(1));
    &g * &g.adjoint()
}

fn realify(h: &CMatrix) -> DMatrix<f64> {
    let n = h.rows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Eigenvalues of the Hermitian part, descending.
pub fn eigvals(h: &CMatrix) -> Vec<f64> {
    let hh = CMatrix::from_fn(h.rows(), h.cols(), |i, j| (h[(i, j)] + h[(j, i)].conj()) * 0.5);
    let e = SymmetricEigen::new(realify(&hh));
    let mut v: Vec<f64> = e.eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v.into_iter().step_by(2).collect()
}

pub fn min_eig(h: &CMatrix) -> f64 {
    eigvals(h).into_iter().fold(f64::INFINITY, f64::min)
}

/// `f(h)` for Hermitian `h` by the spectral theorem.
pub fn herm_fn(h: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = h.rows();
    let e = SymmetricEigen::new(realify(h));
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(&f));
    let r = &e.eigenvectors * d * e.eigenvectors.transpose();
    CMatrix::from_fn(n, n, |i, j| C64::new(r[(i, j)], r[(i + n, j)]))
}

/// Singular values, descending, from the Hermitian dilation `[[0, x], [x^*, 0]]`.
pub fn svals(x: &CMatrix) -> Vec<f64> {
    let (m, n) = x.shape();
    let mut e = eigvals(&dilation(x));
    e.truncate(m.min(n));
    e.into_iter().map(|s| s.max(0.0)).collect()
}

fn dilation(x: &CMatrix) -> CMatrix {
    let (m, n) = x.shape();
    CMatrix::from_fn(m + n, m + n, |i, j| match (i < m, j < m) {
        (true, false) => x[(i, j - m)],
        (false, true) => x[(j, i - m)].conj(),
        _ => C64::new(0.0, 0.0),
    })
}

/// `V f(S) U^*` for `x = U S V^*` and odd `f`, read off `f` of the dilation.
pub fn odd_fn_adjoint(x: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (m, n) = x.shape();
    let fd = herm_fn(&dilation(x), f);
    CMatrix::from_fn(n, m, |i, j| fd[(m + i, j)])
}

pub fn norm(x: &CMatrix, p: PIndex) -> f64 {
    let s = svals(x);
    match p {
        PIndex::Inf => s.first().copied().unwrap_or(0.0),
        PIndex::Finite(p) => s.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p),
    }
}

pub fn block_norm(parts: &[CMatrix], p: PIndex) -> f64 {
    let ns: Vec<f64> = parts.iter().map(|x| norm(x, p)).collect();
    match p {
        PIndex::Inf => ns.into_iter().fold(0.0, f64::max),
        PIndex::Finite(p) => ns.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p),
    }
}

pub fn rank(x: &CMatrix, cut: f64) -> usize {
    let s = svals(x);
    let top = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&v| v > cut * top).count()
}

pub fn fro(x: &CMatrix) -> f64 {
    x.data().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthonormal basis (modified Gram–Schmidt, two passes) of the span of flattened matrices.
pub fn span_basis(elems: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let scale = elems.iter().map(|v| vnorm(v)).fold(0.0, f64::max);
    let mut out: Vec<Vec<C64>> = Vec::new();
    for v in elems {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let ip: C64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= ip * qi;
                }
            }
        }
        let n = vnorm(&w);
        if n > 1e-8 * scale {
            out.push(w.into_iter().map(|z| z / n).collect());
        }
    }
    out
}

fn vnorm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn flat(parts: &[CMatrix]) -> Vec<C64> {
    parts.iter().flat_map(|m| m.data().iter().copied()).collect()
}

/// Relative distance from `v` to the span of the orthonormal `basis`.
pub fn span_residual(basis: &[Vec<C64>], v: &[C64]) -> f64 {
    let mut w = v.to_vec();
    for q in basis {
        let ip: C64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
        for (wi, qi) in w.iter_mut().zip(q) {
            *wi -= ip * qi;
        }
    }
    vnorm(&w) / vnorm(v).max(f64::MIN_POSITIVE)
}

pub fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// `k`-subsets of `{0..n}` as bitmasks.
pub fn subsets(n: usize, k: usize) -> Vec<u32> {
    (0..(1u32 << n)).filter(|m| m.count_ones() as usize == k).collect()
}

/// Unscaled `Σ t_k c_k` from grade `m−1` to grade `m`, built from bitmasks.
pub fn graded_creation_sum(n: usize, m: usize, t: &[C64]) -> CMatrix {
    let rows = subsets(n, m);
    let cols = subsets(n, m - 1);
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        let (r, c) = (rows[i], cols[j]);
        let added = r & !c;
        if r & c != c || added.count_ones() != 1 {
            return C64::new(0.0, 0.0);
        }
        let k = added.trailing_zeros();
        let below = (c & ((1u32 << k) - 1)).count_ones();
        let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
        t[k as usize] * sign
    })
}
