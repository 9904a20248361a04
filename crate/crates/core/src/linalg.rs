//! Dense complex matrices and the factorizations everything else is built on.
//!
//! Storage is row-major. Singular value and Hermitian eigen decompositions are
//! delegated to `nalgebra`; the rest (tensor and direct-sum constructors,
//! fractional powers, polar decomposition, supports) is implemented here on top
//! of those two factorizations.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain_err, shape_err, LabError, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

const SVD_MAX_ITER: usize = 20_000;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Comparison and rank thresholds shared by every check in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Absolute comparison floor.
    pub eq_abs: f64,
    /// Relative comparison tolerance.
    pub eq_rel: f64,
    /// Relative singular-value cutoff for rank and support computations.
    pub rank_cut: f64,
    /// Magnitude of negative eigenvalues still accepted as positive.
    pub psd_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eq_abs: 1e-10,
            eq_rel: 1e-9,
            rank_cut: 1e-10,
            psd_slack: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eq_abs", self.eq_abs),
            ("eq_rel", self.eq_rel),
            ("rank_cut", self.rank_cut),
            ("psd_slack", self.psd_slack),
        ] {
            if !(v > 0.0 && v < 1e-3) {
                return domain_err(format!("tolerance {name} = {v} must lie in (0, 1e-3)"));
            }
        }
        Ok(())
    }

    /// `‖lhs − rhs‖_F ≤ eq_abs + eq_rel·‖rhs‖_F`.
    pub fn close(&self, lhs: &CMatrix, rhs: &CMatrix) -> bool {
        lhs.shape() == rhs.shape()
            && lhs.distance(rhs) <= self.eq_abs + self.eq_rel * rhs.frobenius_norm()
    }

    pub fn close_scalar(&self, lhs: f64, rhs: f64) -> bool {
        (lhs - rhs).abs() <= self.eq_abs + self.eq_rel * rhs.abs()
    }
}

/// Dense complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// Thin singular value decomposition `x = U·diag(s)·V^*`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

impl Svd {
    /// Number of singular values above `rank_cut · s_max`.
    pub fn rank(&self, rank_cut: f64) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        self.s.iter().filter(|&&s| s > rank_cut * smax).count()
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return shape_err(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            ));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return domain_err("matrix entries must be finite");
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Real matrix from nested rows. Panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diag_real(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    /// Matrix unit `E_ij` of the given shape.
    pub fn unit(rows: usize, cols: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        m[(i, j)] = ONE;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, a: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * a).collect(),
        }
    }

    pub fn scale_real(&self, a: f64) -> Self {
        self.scale(C64::new(a, 0.0))
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: C64, other: &CMatrix) {
        assert_eq!(self.shape(), other.shape(), "axpy shape mismatch");
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn try_matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols != rhs.rows {
            return shape_err(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            ));
        }
        Ok(self.matmul_unchecked(rhs))
    }

    fn matmul_unchecked(&self, rhs: &CMatrix) -> CMatrix {
        let (n, k, m) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![ZERO; n * m];
        for i in 0..n {
            let row = &self.data[i * k..(i + 1) * k];
            let orow = &mut out[i * m..(i + 1) * m];
            for (l, &a) in row.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let rrow = &rhs.data[l * m..(l + 1) * m];
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        CMatrix {
            rows: n,
            cols: m,
            data: out,
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `tr(self · rhs)` without forming the product.
    pub fn trace_product(&self, rhs: &CMatrix) -> Result<C64> {
        if self.cols != rhs.rows || self.rows != rhs.cols {
            return shape_err(format!(
                "tr(xy) needs transposed shapes, got {:?} and {:?}",
                self.shape(),
                rhs.shape()
            ));
        }
        let mut acc = ZERO;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += self[(i, j)] * rhs[(j, i)];
            }
        }
        Ok(acc)
    }

    /// Hilbert–Schmidt inner product `tr(self^* · rhs)`.
    pub fn hs_inner(&self, rhs: &CMatrix) -> C64 {
        assert_eq!(self.shape(), rhs.shape(), "hs_inner shape mismatch");
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "distance shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn hermitian_part(&self) -> CMatrix {
        (self + &self.adjoint()).scale_real(0.5)
    }

    /// `‖x − x^*‖_F ≤ eq_abs + eq_rel·‖x‖_F`.
    pub fn is_hermitian(&self, tol: &Tolerances) -> bool {
        self.is_square() && tol.close(&self.adjoint(), self)
    }

    pub fn is_unitary(&self, tol: &Tolerances) -> bool {
        self.is_square() && tol.close(&(&self.adjoint() * self), &CMatrix::identity(self.cols))
    }

    /// `u·u^*·u = u` within tolerance.
    pub fn is_partial_isometry(&self, tol: &Tolerances) -> bool {
        let uuu = &(self * &self.adjoint()) * self;
        tol.close(&uuu, self)
    }

    pub fn submatrix(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> CMatrix {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols, "submatrix out of range");
        CMatrix::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &CMatrix) {
        assert!(
            r0 + block.rows <= self.rows && c0 + block.cols <= self.cols,
            "block out of range"
        );
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    /// Columns `idx` of `self`, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> CMatrix {
        CMatrix::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> CMatrix {
        CMatrix::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    /// Horizontal concatenation; all inputs must have the same row count.
    pub fn hstack(parts: &[CMatrix]) -> Result<CMatrix> {
        let Some(first) = parts.first() else {
            return shape_err("hstack of an empty list");
        };
        let rows = first.rows;
        if parts.iter().any(|p| p.rows != rows) {
            return shape_err("hstack operands disagree on row count");
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = CMatrix::zeros(rows, cols);
        let mut c0 = 0;
        for p in parts {
            out.set_block(0, c0, p);
            c0 += p.cols;
        }
        Ok(out)
    }

    /// Flattened entries as a column vector.
    pub fn vectorize(&self) -> CMatrix {
        CMatrix {
            rows: self.data.len(),
            cols: 1,
            data: self.data.clone(),
        }
    }

    pub fn reshape(self, rows: usize, cols: usize) -> Result<CMatrix> {
        if rows * cols != self.data.len() {
            return shape_err(format!(
                "cannot reshape {} entries to {rows}x{cols}",
                self.data.len()
            ));
        }
        Ok(CMatrix {
            rows,
            cols,
            data: self.data,
        })
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    /// Thin SVD with singular values sorted descending.
    pub fn svd(&self) -> Result<Svd> {
        let k = self.rows.min(self.cols);
        if k == 0 {
            return Ok(Svd {
                u: CMatrix::zeros(self.rows, 0),
                s: Vec::new(),
                v: CMatrix::zeros(self.cols, 0),
            });
        }
        if self.data.iter().all(|z| *z == ZERO) {
            let u = CMatrix::from_fn(self.rows, k, |i, j| if i == j { ONE } else { ZERO });
            let v = CMatrix::from_fn(self.cols, k, |i, j| if i == j { ONE } else { ZERO });
            return Ok(Svd {
                u,
                s: vec![0.0; k],
                v,
            });
        }
        if self.rows >= self.cols {
            one_sided_jacobi(self)
        } else {
            let t = one_sided_jacobi(&self.adjoint())?;
            Ok(Svd {
                u: t.v,
                s: t.s,
                v: t.u,
            })
        }
    }

    pub fn singular_values(&self) -> Result<Vec<f64>> {
        Ok(self.svd()?.s)
    }

    /// Spectral decomposition of a Hermitian matrix: eigenvalues ascending, eigenvectors as columns.
    pub fn eigh(&self, tol: &Tolerances) -> Result<(Vec<f64>, CMatrix)> {
        if !self.is_square() {
            return shape_err(format!("eigh needs a square matrix, got {:?}", self.shape()));
        }
        if !self.is_hermitian(tol) {
            return domain_err("eigh needs a Hermitian matrix");
        }
        self.hermitian_part().eigh_unchecked()
    }

    fn eigh_unchecked(&self) -> Result<(Vec<f64>, CMatrix)> {
        let n = self.rows;
        if n == 0 {
            return Ok((Vec::new(), CMatrix::zeros(0, 0)));
        }
        let eig = SymmetricEigen::try_new(self.to_nalgebra(), f64::EPSILON, SVD_MAX_ITER)
            .ok_or_else(|| LabError::Numerical("Hermitian eigensolver did not converge".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        Ok((vals, vecs))
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue_hermitian_part(&self) -> Result<f64> {
        if !self.is_square() {
            return shape_err("min eigenvalue of a non-square matrix");
        }
        let (vals, _) = self.hermitian_part().eigh_unchecked()?;
        Ok(vals.first().copied().unwrap_or(0.0))
    }

    /// PSD test: Hermitian and every eigenvalue ≥ −psd_slack·max(1, ‖x‖_F).
    pub fn is_psd(&self, tol: &Tolerances) -> Result<bool> {
        if !self.is_hermitian(tol) {
            return Ok(false);
        }
        let scale = self.frobenius_norm().max(1.0);
        Ok(self.min_eigenvalue_hermitian_part()? >= -tol.psd_slack * scale)
    }

    /// Polar decomposition `x = u·|x|` with `u^*u` the support projection of `|x|`.
    pub fn polar(&self, tol: &Tolerances) -> Result<(CMatrix, CMatrix)> {
        let svd = self.svd()?;
        let r = svd.rank(tol.rank_cut);
        let keep: Vec<usize> = (0..r).collect();
        let ur = svd.u.select_columns(&keep);
        let vr = svd.v.select_columns(&keep);
        let u = &ur * &vr.adjoint();
        let all: Vec<usize> = (0..svd.s.len()).collect();
        let v = svd.v.select_columns(&all);
        let abs = &(&v * &CMatrix::diag_real(&svd.s)) * &v.adjoint();
        Ok((u, abs.hermitian_part()))
    }

    /// `x^r` for PSD `x`: eigenvalues in `[−psd_slack, 0]` are clipped to zero.
    ///
    /// Clipped (zero) eigenvalues stay zero for every `r`, including `r = 0`,
    /// so `x^0` is the support projection.
    pub fn frac_power(&self, r: f64, tol: &Tolerances) -> Result<CMatrix> {
        if !(r >= 0.0) || !r.is_finite() {
            return domain_err(format!("fractional power exponent {r} must be finite and >= 0"));
        }
        self.spectral_power(r, tol, false)
    }

    /// Real power of a positive definite matrix; negative exponents allowed.
    pub fn pd_power(&self, r: f64, tol: &Tolerances) -> Result<CMatrix> {
        if !r.is_finite() {
            return domain_err("power exponent must be finite");
        }
        self.spectral_power(r, tol, true)
    }

    fn spectral_power(&self, r: f64, tol: &Tolerances, definite: bool) -> Result<CMatrix> {
        let (vals, vecs) = self.eigh(tol)?;
        let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let top = vals.last().copied().unwrap_or(0.0);
        let mut powered = Vec::with_capacity(vals.len());
        for &l in &vals {
            if l < -tol.psd_slack * scale {
                return domain_err(format!("matrix is not PSD (eigenvalue {l:e})"));
            }
            if definite && l <= tol.rank_cut * top {
                return domain_err(format!("matrix is not positive definite (eigenvalue {l:e})"));
            }
            powered.push(if l <= 0.0 { 0.0 } else { l.powf(r) });
        }
        let out = &(&vecs * &CMatrix::diag_real(&powered)) * &vecs.adjoint();
        Ok(out.hermitian_part())
    }

    /// Orthonormal basis (as columns) of the range, by SVD with the relative rank cut.
    pub fn range_basis(&self, rank_cut: f64) -> Result<CMatrix> {
        let svd = self.svd()?;
        let r = svd.rank(rank_cut);
        let keep: Vec<usize> = (0..r).collect();
        Ok(svd.u.select_columns(&keep))
    }

    pub fn rank(&self, rank_cut: f64) -> Result<usize> {
        Ok(self.svd()?.rank(rank_cut))
    }

    /// Orthogonal projection onto the range (left support).
    pub fn left_support(&self, rank_cut: f64) -> Result<CMatrix> {
        let q = self.range_basis(rank_cut)?;
        Ok(&q * &q.adjoint())
    }

    /// Orthogonal projection onto the range of `x^*` (right support).
    pub fn right_support(&self, rank_cut: f64) -> Result<CMatrix> {
        self.adjoint().left_support(rank_cut)
    }
}

// One-sided (Hestenes) Jacobi SVD of a matrix with rows >= cols. Column
// pairs are rotated until mutually orthogonal; the column norms are then
// the singular values, with high relative accuracy on rank-deficient input.
fn one_sided_jacobi(a: &CMatrix) -> Result<Svd> {
    let (m, n) = a.shape();
    // column-major working copies
    let mut u: Vec<Vec<C64>> = (0..n).map(|j| (0..m).map(|i| a[(i, j)]).collect()).collect();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { ONE } else { ZERO }).collect())
        .collect();
    let eps = f64::EPSILON * (m as f64).sqrt().max(1.0);
    let scale: f64 = a.frobenius_norm();
    let negligible = (f64::EPSILON * scale).powi(2);
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = u[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = u[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = u[p].iter().zip(&u[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= eps * (alpha * beta).sqrt() || alpha.min(beta) <= negligible {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let pc = phase.conj();
                for cols in [&mut u, &mut v] {
                    let (lo, hi) = cols.split_at_mut(q);
                    let (xp, xq) = (&mut lo[p], &mut hi[0]);
                    for (x, y) in xp.iter_mut().zip(xq.iter_mut()) {
                        // y is rephased so that the pair has a real inner product
                        let yr = *y * pc;
                        let nx = *x * c - yr * s;
                        let ny = *x * s + yr * c;
                        *x = nx;
                        *y = ny;
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LabError::Numerical("Jacobi SVD did not converge".into()));
    }
    let sv: Vec<f64> = u.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| sv[y].total_cmp(&sv[x]));
    let mut ucols: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        s.push(if sv[j] * sv[j] > negligible { sv[j] } else { 0.0 });
        if sv[j] > f64::MIN_POSITIVE && sv[j] * sv[j] > negligible {
            ucols.push(u[j].iter().map(|z| z / sv[j]).collect());
        } else {
            ucols.push(vec![ZERO; m]);
            missing.push(k);
        }
    }
    complete_orthonormal(&mut ucols, &missing, m);
    let uu = CMatrix::from_fn(m, n, |i, k| ucols[k][i]);
    let vv = CMatrix::from_fn(n, n, |i, k| v[order[k]][i]);
    Ok(Svd { u: uu, s, v: vv })
}

// Fill the listed columns with unit vectors orthogonal to all others.
// Each one takes the coordinate vector with the largest residual, which has norm at least 1/sqrt(m).
fn complete_orthonormal(cols: &mut [Vec<C64>], missing: &[usize], m: usize) {
    for (done, &k) in missing.iter().enumerate() {
        let filled: Vec<usize> = (0..cols.len())
            .filter(|&j| j != k && (!missing.contains(&j) || missing[..done].contains(&j)))
            .collect();
        let mut best: Option<(f64, Vec<C64>)> = None;
        for candidate in 0..m {
            let mut w = vec![ZERO; m];
            w[candidate] = ONE;
            for _ in 0..2 {
                for &j in &filled {
                    let c = &cols[j];
                    let ip: C64 = c.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                    for (wi, ci) in w.iter_mut().zip(c) {
                        *wi -= ip * ci;
                    }
                }
            }
            let nrm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if best.as_ref().is_none_or(|(b, _)| nrm > *b) {
                best = Some((nrm, w));
            }
        }
        if let Some((nrm, w)) = best {
            cols[k] = w.into_iter().map(|z| z / nrm).collect();
        }
    }
}

/// Kronecker product: block `(i, j)` of the result is `a_ij · b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Block-diagonal embedding of a list of (possibly rectangular) blocks.
pub fn direct_sum(blocks: &[CMatrix]) -> CMatrix {
    let rows = blocks.iter().map(|b| b.rows).sum();
    let cols = blocks.iter().map(|b| b.cols).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.set_block(r0, c0, b);
        r0 += b.rows;
        c0 += b.cols;
    }
    out
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<'a> Mul<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &'a CMatrix) -> CMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "cannot multiply {:?} by {:?}",
            self.shape(),
            rhs.shape()
        );
        self.matmul_unchecked(rhs)
    }
}

impl<'a> Add<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &'a CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &'a CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "sub shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl AddAssign<&CMatrix> for CMatrix {
    fn add_assign(&mut self, rhs: &CMatrix) {
        self.axpy(ONE, rhs);
    }
}

impl SubAssign<&CMatrix> for CMatrix {
    fn sub_assign(&mut self, rhs: &CMatrix) {
        self.axpy(-ONE, rhs);
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

#[derive(Serialize, Deserialize)]
struct CMatrixWire {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        CMatrixWire {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = CMatrixWire::deserialize(deserializer)?;
        let data = wire.data.iter().map(|&[re, im]| C64::new(re, im)).collect();
        CMatrix::new(wire.rows, wire.cols, data).map_err(D::Error::custom)
    }
}
