//! Spin systems on `Λ_N`, ordered words, the spinorial spaces `F_N` and
//! `E_2N`, the sign maps `σ` and `τ′`, and JC*-triple utilities.

use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain_err, shape_err, LabError, Result};
use crate::fock::FockSpace;
use crate::linalg::{CMatrix, Tolerances, C64, I};
use crate::random::complex_normal;
use crate::schatten::{BlockShape, PIndex};
use crate::spaces::Subspace;

/// Generators `s_k = c_k + c_k^*` and `s_{−k} = (c_k − c_k^*)/i`.
#[derive(Debug, Clone)]
pub struct SpinSystem {
    n: usize,
    fock: FockSpace,
    // index k−1 holds s_k, index N+k−1 holds s_{−k}
    gens: Vec<CMatrix>,
}

impl SpinSystem {
    pub fn new(n: usize) -> Result<Self> {
        let fock = FockSpace::new(n)?;
        let mut pos = Vec::with_capacity(n);
        let mut neg = Vec::with_capacity(n);
        for k in 1..=n {
            let c = fock.creation(k)?;
            let cd = c.adjoint();
            pos.push(&c + &cd);
            neg.push((&c - &cd).scale(-I));
        }
        pos.extend(neg);
        Ok(Self { n, fock, gens: pos })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn fock(&self) -> &FockSpace {
        &self.fock
    }

    pub fn dim(&self) -> usize {
        self.fock.dim()
    }

    /// Labels `−N..−1, 1..N` in ascending order.
    pub fn labels(&self) -> Vec<i32> {
        let n = self.n as i32;
        (-n..=-1).chain(1..=n).collect()
    }

    pub fn generator(&self, j: i32) -> Result<&CMatrix> {
        let n = self.n as i32;
        if j == 0 || j.abs() > n {
            return domain_err(format!("spin label {j} outside ±1..±{n}"));
        }
        let idx = if j > 0 { (j - 1) as usize } else { self.n + (-j - 1) as usize };
        Ok(&self.gens[idx])
    }

    /// `s_A = s_{i_1}⋯s_{i_k}` with `i_1 < … < i_k`; `s_∅ = 1`.
    pub fn spin_word(&self, labels: &[i32]) -> Result<CMatrix> {
        let mut sorted = labels.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return domain_err("spin word labels must be distinct");
        }
        let mut out = CMatrix::identity(self.dim());
        for j in sorted {
            out = &out * self.generator(j)?;
        }
        Ok(out)
    }

    /// All `4^N` words, indexed by subsets of the ascending label list.
    pub fn all_words(&self) -> Vec<CMatrix> {
        let labels = self.labels();
        (0..(1usize << labels.len()))
            .map(|mask| {
                let a: Vec<i32> = labels
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| mask & (1 << b) != 0)
                    .map(|(_, &l)| l)
                    .collect();
                self.spin_word(&a).expect("labels are valid")
            })
            .collect()
    }

    /// `s_{−N} s_N ⋯ s_{−1} s_1`, in exactly that factor order.
    pub fn top_word(&self) -> CMatrix {
        let mut out = CMatrix::identity(self.dim());
        for k in (1..=self.n as i32).rev() {
            out = &out * &self.gens[self.n + (k - 1) as usize];
            out = &out * &self.gens[(k - 1) as usize];
        }
        out
    }

    /// `i^N · top word`: self-adjoint, unitary, anticommuting with every generator.
    pub fn extra_generator(&self) -> CMatrix {
        self.top_word().scale(I.powu(self.n as u32))
    }

    /// `1, s_1..s_N, s_{−1}..s_{−N}`.
    fn e_basis(&self) -> Vec<CMatrix> {
        let mut b = vec![CMatrix::identity(self.dim())];
        b.extend(self.gens.iter().cloned());
        b
    }

    pub fn f_space(&self) -> SpinSubspace {
        let mut basis = self.e_basis();
        basis.push(self.top_word());
        SpinSubspace {
            kind: SpinKind::F,
            n: self.n,
            basis,
        }
    }

    pub fn e_space(&self) -> SpinSubspace {
        SpinSubspace {
            kind: SpinKind::E,
            n: self.n,
            basis: self.e_basis(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpinKind {
    F,
    E,
}

/// `F_N` (with the top word last) or `E_2N`, with a trace-orthogonal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSubspace {
    pub kind: SpinKind,
    pub n: usize,
    pub basis: Vec<CMatrix>,
}

#[derive(Serialize, Deserialize)]
struct SpinWire {
    kind: SpinKind,
    #[serde(rename = "N")]
    n: usize,
    basis: Vec<CMatrix>,
}

impl Serialize for SpinSubspace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpinWire {
            kind: self.kind,
            n: self.n,
            basis: self.basis.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpinSubspace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = SpinWire::deserialize(d)?;
        let expected = match w.kind {
            SpinKind::F => 2 * w.n + 2,
            SpinKind::E => 2 * w.n + 1,
        };
        if w.basis.len() != expected {
            return Err(D::Error::custom(format!(
                "spin subspace basis has {} elements, expected {expected}",
                w.basis.len()
            )));
        }
        Ok(SpinSubspace {
            kind: w.kind,
            n: w.n,
            basis: w.basis,
        })
    }
}

impl SpinSubspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient(&self) -> usize {
        self.basis[0].rows()
    }

    /// Coefficients `tr(b^* x)/tr(b^* b)`; errors when `x` leaves the span.
    pub fn coefficients(&self, x: &CMatrix, tol: &Tolerances) -> Result<Vec<C64>> {
        let d = self.ambient();
        if x.shape() != (d, d) {
            return shape_err(format!("expected a {d}x{d} matrix, got {:?}", x.shape()));
        }
        let coeffs: Vec<C64> = self
            .basis
            .iter()
            .map(|b| b.hs_inner(x) / b.hs_inner(b).re)
            .collect();
        let recon = self.combine(&coeffs);
        if !tol.close(&recon, x) {
            return domain_err("element lies outside the spin subspace");
        }
        Ok(coeffs)
    }

    pub fn combine(&self, coeffs: &[C64]) -> CMatrix {
        let d = self.ambient();
        let mut out = CMatrix::zeros(d, d);
        for (c, b) in coeffs.iter().zip(&self.basis) {
            out.axpy(*c, b);
        }
        out
    }

    fn transport(&self, x: &CMatrix, tol: &Tolerances, gen_sign: f64, top_sign: f64) -> Result<CMatrix> {
        if self.kind != SpinKind::F {
            return domain_err("sign maps are defined on F_N");
        }
        let mut c = self.coefficients(x, tol)?;
        let last = c.len() - 1;
        for (i, ci) in c.iter_mut().enumerate() {
            if i == last {
                *ci *= top_sign;
            } else if i > 0 {
                *ci *= gen_sign;
            }
        }
        Ok(self.combine(&c))
    }

    /// `σ`: fixes `1` and every `s_j`, negates the top word.
    pub fn sigma(&self, x: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
        self.transport(x, tol, 1.0, -1.0)
    }

    /// `τ′`: fixes `1`, negates every `s_j` and the top word.
    pub fn tau_prime(&self, x: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
        self.transport(x, tol, -1.0, -1.0)
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix {
        let c: Vec<C64> = (0..self.dim()).map(|_| complex_normal(rng)).collect();
        self.combine(&c)
    }

    pub fn to_subspace(&self, p: PIndex, tol: &Tolerances) -> Result<Subspace> {
        Subspace::from_matrices(BlockShape::square(self.ambient()), self.basis.clone(), p, tol)
    }
}

/// `{x, y, z} = (x y^* z + z y^* x)/2`.
pub fn triple_product(x: &CMatrix, y: &CMatrix, z: &CMatrix) -> Result<CMatrix> {
    if x.shape() != y.shape() || y.shape() != z.shape() {
        return domain_err(format!(
            "triple product needs equal shapes, got {:?}, {:?}, {:?}",
            x.shape(),
            y.shape(),
            z.shape()
        ));
    }
    let yd = y.adjoint();
    let a = &(x * &yd) * z;
    let b = &(z * &yd) * x;
    Ok((&a + &b).scale_real(0.5))
}

/// Closure of `span(basis)` under the triple product, checked on every basis
/// triple and on `samples` random triples.
pub fn is_jc_triple<R: Rng + ?Sized>(
    basis: &[CMatrix],
    samples: usize,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<bool> {
    let Some(first) = basis.first() else {
        return Ok(true);
    };
    let (r, c) = first.shape();
    let space = Subspace::from_matrices(BlockShape::single(r, c), basis.to_vec(), PIndex::TWO, tol)?;
    let inside = |m: &CMatrix| space.contains_matrix(m, tol);
    for x in basis {
        for y in basis {
            for z in basis {
                if !inside(&triple_product(x, y, z)?) {
                    return Ok(false);
                }
            }
        }
    }
    let combo = |rng: &mut R| {
        let mut out = CMatrix::zeros(r, c);
        for b in basis {
            out.axpy(complex_normal(rng), b);
        }
        out
    };
    for _ in 0..samples {
        let (x, y, z) = (combo(rng), combo(rng), combo(rng));
        if !inside(&triple_product(&x, &y, &z)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `u·f(|x|)` for the polar decomposition `x = u|x|`: `U f(S) V^*`.
///
/// Singular values below the relative rank cut are treated as zero, where
/// `f` must vanish.
pub fn odd_calculus(x: &CMatrix, f: impl Fn(f64) -> f64, tol: &Tolerances) -> Result<CMatrix> {
    if f(0.0) != 0.0 {
        return domain_err("odd functional calculus needs f(0) = 0");
    }
    let svd = x.svd()?;
    let r = svd.rank(tol.rank_cut);
    let keep: Vec<usize> = (0..r).collect();
    let u = svd.u.select_columns(&keep);
    let v = svd.v.select_columns(&keep);
    let fs: Vec<f64> = svd.s[..r].iter().map(|&s| f(s)).collect();
    if fs.iter().any(|y| !y.is_finite()) {
        return Err(LabError::Domain("f is not finite on the spectrum of |x|".into()));
    }
    Ok(&(&u * &CMatrix::diag_real(&fs)) * &v.adjoint())
}

/// Step function equal to 1 above the cut and 0 below, for polar parts.
pub fn support_indicator(cut: f64) -> impl Fn(f64) -> f64 {
    move |s| if s > cut { 1.0 } else { 0.0 }
}
