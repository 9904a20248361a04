//! Schatten norms, the trace pairing, the duality map `N_p`, disjointness,
//! supports, and elements of finite p-direct sums.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain_err, shape_err, LabError, Result};
use crate::linalg::{direct_sum, CMatrix, Tolerances, C64, ZERO};

/// Schatten exponent in `[1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PIndex {
    Finite(f64),
    Inf,
}

impl PIndex {
    pub const ONE: PIndex = PIndex::Finite(1.0);
    pub const TWO: PIndex = PIndex::Finite(2.0);

    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            return Ok(PIndex::Inf);
        }
        if !(p >= 1.0) || !p.is_finite() {
            return domain_err(format!("Schatten exponent {p} must lie in [1, inf]"));
        }
        Ok(PIndex::Finite(p))
    }

    /// Conjugate exponent `q` with `1/p + 1/q = 1`.
    pub fn conjugate(self) -> PIndex {
        match self {
            PIndex::Inf => PIndex::ONE,
            PIndex::Finite(p) if p == 1.0 => PIndex::Inf,
            PIndex::Finite(p) => PIndex::Finite(p / (p - 1.0)),
        }
    }

    pub fn is_inf(self) -> bool {
        matches!(self, PIndex::Inf)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            PIndex::Finite(p) => Some(p),
            PIndex::Inf => None,
        }
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn reciprocal(self) -> f64 {
        match self {
            PIndex::Finite(p) => 1.0 / p,
            PIndex::Inf => 0.0,
        }
    }
}

impl fmt::Display for PIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PIndex::Finite(p) => write!(f, "{p}"),
            PIndex::Inf => write!(f, "inf"),
        }
    }
}

impl Serialize for PIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PIndex::Finite(p) => s.serialize_f64(*p),
            PIndex::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for PIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Wire {
            Num(f64),
            Str(String),
        }
        match Wire::deserialize(d)? {
            Wire::Num(p) => PIndex::new(p).map_err(D::Error::custom),
            Wire::Str(s) if s == "inf" || s == "∞" => Ok(PIndex::Inf),
            Wire::Str(s) => Err(D::Error::custom(format!("bad Schatten exponent {s:?}"))),
        }
    }
}

/// ℓ^p norm of a nonnegative sequence, scaled to avoid overflow.
pub fn lp_norm(s: &[f64], p: PIndex) -> f64 {
    let smax = s.iter().copied().fold(0.0f64, f64::max);
    if smax == 0.0 {
        return 0.0;
    }
    match p {
        PIndex::Inf => smax,
        PIndex::Finite(p) if p == 1.0 => s.iter().sum(),
        PIndex::Finite(p) => smax * s.iter().map(|x| (x / smax).powf(p)).sum::<f64>().powf(1.0 / p),
    }
}

/// Schatten p-norm: ℓ^p norm of the singular values.
pub fn schatten_norm(x: &CMatrix, p: PIndex) -> Result<f64> {
    if p == PIndex::TWO {
        return Ok(x.frobenius_norm());
    }
    Ok(lp_norm(&x.singular_values()?, p))
}

/// `tr(x·y)`.
pub fn pairing(x: &CMatrix, y: &CMatrix) -> Result<C64> {
    x.trace_product(y).map_err(|e| LabError::Domain(e.to_string()))
}

/// `N_p(x) = |x|^{p−1}·u^* / ‖x‖_p^{p−2}`, with `N_p(0) = 0`.
pub fn n_map(x: &CMatrix, p: PIndex, tol: &Tolerances) -> Result<CMatrix> {
    let p = match p {
        PIndex::Finite(p) if p > 1.0 => p,
        _ => return domain_err(format!("N_p needs 1 < p < inf, got {p}")),
    };
    let svd = x.svd()?;
    let norm = lp_norm(&svd.s, PIndex::Finite(p));
    if norm < tol.eq_abs {
        return Ok(CMatrix::zeros(x.cols(), x.rows()));
    }
    let r = svd.rank(tol.rank_cut);
    let keep: Vec<usize> = (0..r).collect();
    let u = svd.u.select_columns(&keep);
    let v = svd.v.select_columns(&keep);
    let d: Vec<f64> = svd.s[..r].iter().map(|s| s.powf(p - 1.0)).collect();
    let out = &(&v * &CMatrix::diag_real(&d)) * &u.adjoint();
    Ok(out.scale_real(norm.powf(2.0 - p)))
}

/// `x^*y = 0` and `xy^* = 0` to `eq_abs + eq_rel·‖x‖‖y‖`.
pub fn are_disjoint(x: &CMatrix, y: &CMatrix, tol: &Tolerances) -> Result<bool> {
    if x.shape() != y.shape() {
        return shape_err(format!("disjointness of {:?} and {:?}", x.shape(), y.shape()));
    }
    let bound = tol.eq_abs + tol.eq_rel * x.frobenius_norm() * y.frobenius_norm();
    let a = (&x.adjoint() * y).frobenius_norm();
    let b = (x * &y.adjoint()).frobenius_norm();
    Ok(a <= bound && b <= bound)
}

/// Projection onto the span of the row spaces (ranges of `x^*`).
pub fn support_right(set: &[CMatrix], tol: &Tolerances) -> Result<CMatrix> {
    let adj: Vec<CMatrix> = set.iter().map(|x| x.adjoint()).collect();
    support_left(&adj, tol)
}

/// Projection onto the span of the ranges.
pub fn support_left(set: &[CMatrix], tol: &Tolerances) -> Result<CMatrix> {
    let Some(first) = set.first() else {
        return shape_err("support of an empty set");
    };
    let rows = first.rows();
    if set.iter().any(|x| x.rows() != rows) {
        return shape_err("support operands disagree on dimension");
    }
    let stacked = CMatrix::hstack(set)?;
    // A global scale keeps the relative cut meaningful across elements.
    let scale = set.iter().map(|x| x.frobenius_norm()).fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Ok(CMatrix::zeros(rows, rows));
    }
    let q = stacked.scale_real(1.0 / scale).range_basis(tol.rank_cut)?;
    Ok((&q * &q.adjoint()).hermitian_part())
}

/// Shapes of the blocks of a p-direct sum.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockShape {
    pub blocks: Vec<(usize, usize)>,
}

impl BlockShape {
    pub fn new(blocks: Vec<(usize, usize)>) -> Result<Self> {
        if blocks.is_empty() {
            return shape_err("block shape must have at least one block");
        }
        if blocks.iter().any(|&(r, c)| r == 0 || c == 0) {
            return shape_err("block dimensions must be at least 1");
        }
        Ok(Self { blocks })
    }

    pub fn single(rows: usize, cols: usize) -> Self {
        Self {
            blocks: vec![(rows, cols)],
        }
    }

    pub fn square(n: usize) -> Self {
        Self::single(n, n)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Total number of scalar entries.
    pub fn vec_dim(&self) -> usize {
        self.blocks.iter().map(|(r, c)| r * c).sum()
    }

    pub fn is_square_blocks(&self) -> bool {
        self.blocks.iter().all(|(r, c)| r == c)
    }

    /// Shape of the block-diagonal embedding.
    pub fn embedded(&self) -> (usize, usize) {
        let r = self.blocks.iter().map(|b| b.0).sum();
        let c = self.blocks.iter().map(|b| b.1).sum();
        (r, c)
    }

    pub fn adjoint(&self) -> BlockShape {
        BlockShape {
            blocks: self.blocks.iter().map(|&(r, c)| (c, r)).collect(),
        }
    }

    /// Block index and in-block position of each vectorized coordinate.
    pub fn coordinate(&self, mut idx: usize) -> (usize, usize, usize) {
        for (b, &(r, c)) in self.blocks.iter().enumerate() {
            if idx < r * c {
                return (b, idx / c, idx % c);
            }
            idx -= r * c;
        }
        panic!("coordinate out of range");
    }
}

impl Serialize for BlockShape {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<[usize; 2]> = self.blocks.iter().map(|&(r, c)| [r, c]).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlockShape {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<[usize; 2]> = Vec::deserialize(d)?;
        BlockShape::new(v.into_iter().map(|[r, c]| (r, c)).collect()).map_err(D::Error::custom)
    }
}

/// Element `(x_i)_i` of a p-direct sum of matrix spaces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockOperator {
    pub shape: BlockShape,
    pub p: PIndex,
    pub parts: Vec<CMatrix>,
}

impl<'de> Deserialize<'de> for BlockOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            shape: BlockShape,
            p: PIndex,
            parts: Vec<CMatrix>,
        }
        let w = Wire::deserialize(d)?;
        BlockOperator::new(w.shape, w.parts, w.p).map_err(D::Error::custom)
    }
}

impl BlockOperator {
    pub fn new(shape: BlockShape, parts: Vec<CMatrix>, p: PIndex) -> Result<Self> {
        if parts.len() != shape.len()
            || parts.iter().zip(&shape.blocks).any(|(x, &s)| x.shape() != s)
        {
            return shape_err("block parts do not match the block shape");
        }
        Ok(Self { shape, p, parts })
    }

    pub fn single(x: CMatrix, p: PIndex) -> Self {
        Self {
            shape: BlockShape::single(x.rows(), x.cols()),
            p,
            parts: vec![x],
        }
    }

    pub fn zeros(shape: &BlockShape, p: PIndex) -> Self {
        Self {
            shape: shape.clone(),
            p,
            parts: shape.blocks.iter().map(|&(r, c)| CMatrix::zeros(r, c)).collect(),
        }
    }

    pub fn from_fn(shape: &BlockShape, p: PIndex, mut f: impl FnMut(usize, usize, usize) -> C64) -> Self {
        let parts = shape
            .blocks
            .iter()
            .enumerate()
            .map(|(b, &(r, c))| CMatrix::from_fn(r, c, |i, j| f(b, i, j)))
            .collect();
        Self {
            shape: shape.clone(),
            p,
            parts,
        }
    }

    /// Matrix unit at vectorized coordinate `idx`.
    pub fn unit(shape: &BlockShape, p: PIndex, idx: usize) -> Self {
        let mut x = Self::zeros(shape, p);
        let (b, i, j) = shape.coordinate(idx);
        x.parts[b][(i, j)] = C64::new(1.0, 0.0);
        x
    }

    pub fn with_p(mut self, p: PIndex) -> Self {
        self.p = p;
        self
    }

    /// Concatenation of the row-major entries of every block.
    pub fn to_vec(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(self.shape.vec_dim());
        for x in &self.parts {
            v.extend_from_slice(x.data());
        }
        v
    }

    pub fn from_vec(shape: &BlockShape, p: PIndex, v: &[C64]) -> Result<Self> {
        if v.len() != shape.vec_dim() {
            return shape_err(format!(
                "vector of length {} for block shape of size {}",
                v.len(),
                shape.vec_dim()
            ));
        }
        let mut parts = Vec::with_capacity(shape.len());
        let mut off = 0;
        for &(r, c) in &shape.blocks {
            parts.push(CMatrix::new(r, c, v[off..off + r * c].to_vec())?);
            off += r * c;
        }
        Ok(Self {
            shape: shape.clone(),
            p,
            parts,
        })
    }

    /// `(Σ‖x_i‖_p^p)^{1/p}`, or the largest block norm for `p = ∞`.
    pub fn norm(&self, p: PIndex) -> Result<f64> {
        let norms = self
            .parts
            .iter()
            .map(|x| schatten_norm(x, p))
            .collect::<Result<Vec<f64>>>()?;
        Ok(lp_norm(&norms, p))
    }

    /// Norm at the element's own exponent.
    pub fn own_norm(&self) -> Result<f64> {
        self.norm(self.p)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.parts.iter().map(|x| x.frobenius_norm().powi(2)).sum::<f64>().sqrt()
    }

    pub fn adjoint(&self) -> BlockOperator {
        BlockOperator {
            shape: self.shape.adjoint(),
            p: self.p,
            parts: self.parts.iter().map(|x| x.adjoint()).collect(),
        }
    }

    /// Sum of block pairings `Σ tr(x_i y_i)`; `y` must have the adjoint shape.
    pub fn pairing(&self, y: &BlockOperator) -> Result<C64> {
        if y.shape != self.shape.adjoint() {
            return domain_err("pairing needs transposed block shapes");
        }
        let mut acc = ZERO;
        for (a, b) in self.parts.iter().zip(&y.parts) {
            acc += pairing(a, b)?;
        }
        Ok(acc)
    }

    /// `Σ tr(x_i^* y_i)`.
    pub fn hs_inner(&self, y: &BlockOperator) -> C64 {
        assert_eq!(self.shape, y.shape, "hs_inner block shape mismatch");
        self.parts.iter().zip(&y.parts).map(|(a, b)| a.hs_inner(b)).sum()
    }

    pub fn scale(&self, a: C64) -> BlockOperator {
        BlockOperator {
            shape: self.shape.clone(),
            p: self.p,
            parts: self.parts.iter().map(|x| x.scale(a)).collect(),
        }
    }

    pub fn scale_real(&self, a: f64) -> BlockOperator {
        self.scale(C64::new(a, 0.0))
    }

    pub fn axpy(&mut self, a: C64, other: &BlockOperator) {
        assert_eq!(self.shape, other.shape, "axpy block shape mismatch");
        for (x, y) in self.parts.iter_mut().zip(&other.parts) {
            x.axpy(a, y);
        }
    }

    pub fn add(&self, other: &BlockOperator) -> BlockOperator {
        let mut out = self.clone();
        out.axpy(C64::new(1.0, 0.0), other);
        out
    }

    pub fn sub(&self, other: &BlockOperator) -> BlockOperator {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other);
        out
    }

    pub fn distance(&self, other: &BlockOperator) -> f64 {
        self.sub(other).frobenius_norm()
    }

    /// Block-diagonal embedding into a single matrix.
    pub fn embed(&self) -> CMatrix {
        direct_sum(&self.parts)
    }

    /// Inverse of [`BlockOperator::embed`]: extracts the diagonal blocks.
    pub fn from_embedded(shape: &BlockShape, p: PIndex, x: &CMatrix) -> Result<Self> {
        if x.shape() != shape.embedded() {
            return shape_err("embedded matrix does not match block shape");
        }
        let (mut r0, mut c0) = (0, 0);
        let mut parts = Vec::with_capacity(shape.len());
        for &(r, c) in &shape.blocks {
            parts.push(x.submatrix(r0, c0, r, c));
            r0 += r;
            c0 += c;
        }
        Ok(Self {
            shape: shape.clone(),
            p,
            parts,
        })
    }

    /// PSD test block by block (positivity in a direct sum).
    pub fn is_psd(&self, tol: &Tolerances) -> Result<bool> {
        for x in &self.parts {
            if !x.is_square() || !x.is_psd(tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn close(&self, other: &BlockOperator, tol: &Tolerances) -> bool {
        self.shape == other.shape
            && self.distance(other) <= tol.eq_abs + tol.eq_rel * other.frobenius_norm()
    }
}
