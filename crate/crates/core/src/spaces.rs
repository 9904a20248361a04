//! Subspaces of p-direct sums, the six-type catalog, equivalences, and
//! operator-disjoint decomposition.

use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain_err, shape_err, LabError, Result};
use crate::fock::{binom, FockSpace};
use crate::linalg::{kron, CMatrix, Tolerances, C64, I as IMAG, ONE, ZERO};
use crate::projections::MatrixMap;
use crate::random::{case_rng, complex_normal, density, haar_unitary, positive_definite, real_unit_vector};
use crate::schatten::{schatten_norm, support_left, support_right, BlockOperator, BlockShape, PIndex};
use crate::spin::SpinSystem;

/// Span of linearly independent block operators, tagged with an exponent.
#[derive(Debug, Clone)]
pub struct Subspace {
    pub shape: BlockShape,
    pub p: PIndex,
    pub basis: Vec<BlockOperator>,
    // orthonormal columns spanning the vectorized basis
    ortho: CMatrix,
    // c = coef · ortho^* · vec(x) recovers basis coefficients
    coef: CMatrix,
}

impl Serialize for Subspace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            shape: &'a BlockShape,
            p: PIndex,
            basis: &'a [BlockOperator],
        }
        Wire {
            shape: &self.shape,
            p: self.p,
            basis: &self.basis,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Subspace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            shape: BlockShape,
            p: PIndex,
            basis: Vec<BlockOperator>,
        }
        let w = Wire::deserialize(d)?;
        Subspace::new(w.shape, w.basis, w.p, &Tolerances::default()).map_err(D::Error::custom)
    }
}

fn orthonormal_columns(vectors: &[Vec<C64>], rank_cut: f64) -> Result<(CMatrix, usize, CMatrix)> {
    let n = vectors.first().map_or(0, |v| v.len());
    let b = CMatrix::from_fn(n, vectors.len(), |i, j| vectors[j][i]);
    let svd = b.svd()?;
    let r = svd.rank(rank_cut);
    let keep: Vec<usize> = (0..r).collect();
    let u = svd.u.select_columns(&keep);
    let inv: Vec<f64> = svd.s[..r].iter().map(|s| 1.0 / s).collect();
    let coef = &svd.v.select_columns(&keep) * &CMatrix::diag_real(&inv);
    Ok((u, r, coef))
}

/// Largest principal-angle sine between two orthonormal column sets.
fn one_sided_gap(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.cols() == 0 {
        return Ok(0.0);
    }
    let resid = a - &(b * &(&b.adjoint() * a));
    Ok(resid.singular_values()?.first().copied().unwrap_or(0.0).min(1.0))
}

impl Subspace {
    pub fn new(shape: BlockShape, basis: Vec<BlockOperator>, p: PIndex, tol: &Tolerances) -> Result<Self> {
        if basis.iter().any(|b| b.shape != shape) {
            return shape_err("basis element does not match the ambient block shape");
        }
        let basis: Vec<BlockOperator> = basis.into_iter().map(|b| b.with_p(p)).collect();
        let (ortho, coef) = if basis.is_empty() {
            (CMatrix::zeros(shape.vec_dim(), 0), CMatrix::zeros(0, 0))
        } else {
            let vecs: Vec<Vec<C64>> = basis.iter().map(|b| b.to_vec()).collect();
            let (u, r, coef) = orthonormal_columns(&vecs, tol.rank_cut)?;
            if r < basis.len() {
                return Err(LabError::InvalidSpec(format!(
                    "basis is linearly dependent (rank {r} < {})",
                    basis.len()
                )));
            }
            (u, coef)
        };
        Ok(Self {
            shape,
            p,
            basis,
            ortho,
            coef,
        })
    }

    pub fn from_matrices(shape: BlockShape, basis: Vec<CMatrix>, p: PIndex, tol: &Tolerances) -> Result<Self> {
        if shape.len() != 1 {
            return shape_err("from_matrices needs a single-block shape");
        }
        let ops = basis.into_iter().map(|m| BlockOperator::single(m, p)).collect();
        Self::new(shape, ops, p, tol)
    }

    /// Span of arbitrary (possibly dependent) elements; an independent subset is kept.
    pub fn span_of(shape: &BlockShape, elements: &[BlockOperator], p: PIndex, tol: &Tolerances) -> Result<Self> {
        let mut kept: Vec<BlockOperator> = Vec::new();
        let mut q: Vec<Vec<C64>> = Vec::new();
        let scale = elements.iter().map(|e| e.frobenius_norm()).fold(0.0f64, f64::max);
        for e in elements {
            let mut v = e.to_vec();
            for qi in &q {
                let c: C64 = qi.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(qi) {
                    *x -= c * y;
                }
            }
            // second pass for stability
            for qi in &q {
                let c: C64 = qi.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(qi) {
                    *x -= c * y;
                }
            }
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if n > tol.rank_cut.sqrt() * scale.max(f64::MIN_POSITIVE) {
                q.push(v.into_iter().map(|z| z / n).collect());
                kept.push(e.clone());
            }
        }
        Self::new(shape.clone(), kept, p, tol)
    }

    /// Span of the columns of `ortho` (vectorized coordinates).
    pub fn from_vector_basis(shape: &BlockShape, vectors: &CMatrix, p: PIndex, tol: &Tolerances) -> Result<Self> {
        let basis = (0..vectors.cols())
            .map(|j| {
                let v: Vec<C64> = (0..vectors.rows()).map(|i| vectors[(i, j)]).collect();
                BlockOperator::from_vec(shape, p, &v)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(shape.clone(), basis, p, tol)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn with_p(&self, p: PIndex) -> Subspace {
        let mut s = self.clone();
        s.p = p;
        for b in &mut s.basis {
            b.p = p;
        }
        s
    }

    /// Orthonormal basis of the vectorized span, one column per dimension.
    pub fn ortho(&self) -> &CMatrix {
        &self.ortho
    }

    /// Single-block basis matrices; multi-block spaces return their first block.
    pub fn basis_matrices(&self) -> Vec<CMatrix> {
        self.basis.iter().map(|b| b.parts[0].clone()).collect()
    }

    fn vec_col(x: &BlockOperator) -> CMatrix {
        let v = x.to_vec();
        let n = v.len();
        CMatrix::new(n, 1, v).expect("finite entries")
    }

    /// Hilbert–Schmidt orthogonal projection onto the span.
    pub fn orth_project(&self, x: &BlockOperator) -> BlockOperator {
        let v = Self::vec_col(x);
        let proj = &self.ortho * &(&self.ortho.adjoint() * &v);
        BlockOperator::from_vec(&self.shape, self.p, proj.data()).expect("shape preserved")
    }

    pub fn residual(&self, x: &BlockOperator) -> f64 {
        x.distance(&self.orth_project(x))
    }

    pub fn contains(&self, x: &BlockOperator, tol: &Tolerances) -> bool {
        x.shape == self.shape && self.residual(x) <= tol.eq_abs + tol.eq_rel * x.frobenius_norm()
    }

    pub fn contains_matrix(&self, x: &CMatrix, tol: &Tolerances) -> bool {
        self.shape.len() == 1 && self.contains(&BlockOperator::single(x.clone(), self.p), tol)
    }

    /// Coefficients of `x` in the stored basis; domain error if `x` is outside.
    pub fn coefficients(&self, x: &BlockOperator, tol: &Tolerances) -> Result<Vec<C64>> {
        if x.shape != self.shape {
            return shape_err("element does not match the ambient block shape");
        }
        if !self.contains(x, tol) {
            return domain_err(format!(
                "element lies outside the span (residual {:e})",
                self.residual(x)
            ));
        }
        let c = &self.coef * &(&self.ortho.adjoint() * &Self::vec_col(x));
        Ok(c.into_data())
    }

    pub fn matrix_coefficients(&self, x: &CMatrix, tol: &Tolerances) -> Result<Vec<C64>> {
        self.coefficients(&BlockOperator::single(x.clone(), self.p), tol)
    }

    pub fn combine(&self, coeffs: &[C64]) -> BlockOperator {
        let mut out = BlockOperator::zeros(&self.shape, self.p);
        for (c, b) in coeffs.iter().zip(&self.basis) {
            out.axpy(*c, b);
        }
        out
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> BlockOperator {
        let c: Vec<C64> = (0..self.dim()).map(|_| complex_normal(rng)).collect();
        self.combine(&c)
    }

    /// Largest principal-angle sine in either direction; 1 when dimensions differ.
    pub fn range_distance(&self, other: &Subspace) -> Result<f64> {
        if self.shape != other.shape {
            return shape_err("range distance between different ambient shapes");
        }
        if self.dim() != other.dim() {
            return Ok(1.0);
        }
        Ok(one_sided_gap(&self.ortho, &other.ortho)?.max(one_sided_gap(&other.ortho, &self.ortho)?))
    }

    pub fn span_eq(&self, other: &Subspace, tol: &Tolerances) -> Result<bool> {
        Ok(self.range_distance(other)? <= tol.eq_rel)
    }

    /// Direct-sum embedding as a single-block space.
    pub fn embed(&self, tol: &Tolerances) -> Result<Subspace> {
        let (r, c) = self.shape.embedded();
        let basis = self.basis.iter().map(|b| b.embed()).collect();
        Subspace::from_matrices(BlockShape::single(r, c), basis, self.p, tol)
    }

    /// Left support of the embedded space.
    pub fn support_left(&self, tol: &Tolerances) -> Result<CMatrix> {
        let m: Vec<CMatrix> = self.basis.iter().map(|b| b.embed()).collect();
        support_left(&m, tol)
    }

    pub fn support_right(&self, tol: &Tolerances) -> Result<CMatrix> {
        let m: Vec<CMatrix> = self.basis.iter().map(|b| b.embed()).collect();
        support_right(&m, tol)
    }

    /// Both supports are the identity of the embedded ambient.
    pub fn is_nondegenerate(&self, tol: &Tolerances) -> Result<bool> {
        let (r, c) = self.shape.embedded();
        Ok(tol.close(&self.support_left(tol)?, &CMatrix::identity(r))
            && tol.close(&self.support_right(tol)?, &CMatrix::identity(c)))
    }

    /// Image of every basis element under the adjoint map.
    pub fn adjoints(&self, tol: &Tolerances) -> Result<Subspace> {
        let basis = self.basis.iter().map(|b| b.adjoint()).collect();
        Subspace::new(self.shape.adjoint(), basis, self.p, tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TypeKind {
    Sym,
    Antisym,
    Rect,
    AFHilbert,
    SpinEven,
    SpinOdd,
}

impl TypeKind {
    /// Position in the classification (1..6).
    pub fn number(self) -> usize {
        match self {
            TypeKind::Sym => 1,
            TypeKind::Antisym => 2,
            TypeKind::Rect => 3,
            TypeKind::AFHilbert => 4,
            TypeKind::SpinEven => 5,
            TypeKind::SpinOdd => 6,
        }
    }
}

/// Parameters of a catalog space. Unset twists and factors are drawn from
/// `seed` by [`TypeSpec::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeSpec {
    pub kind: TypeKind,
    #[serde(rename = "I", default, skip_serializing_if = "Option::is_none")]
    pub i: Option<usize>,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "O", default)]
    pub o: Option<CMatrix>,
    #[serde(default)]
    pub v: Option<CMatrix>,
    #[serde(default)]
    pub a: Option<CMatrix>,
    #[serde(default)]
    pub a2: Option<CMatrix>,
    #[serde(default)]
    pub seed: u64,
    /// Exponent of the ambient Schatten space (default 2).
    #[serde(default = "default_p")]
    pub p: PIndex,
    /// Size of generated positive factors (default 2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_dim: Option<usize>,
    /// Generate a second factor for `Rect` (default true).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_blocks: Option<bool>,
}

fn default_p() -> PIndex {
    PIndex::TWO
}

pub const MAX_INDEX: usize = 8;
pub const MAX_SPIN_N: usize = 5;

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::InvalidSpec(msg.into()))
}

/// `E_ii` and `(E_ij + E_ji)/√2`, `i < j`.
pub fn symmetric_units(n: usize) -> Vec<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            if i == j {
                out.push(CMatrix::unit(n, n, i, i));
            } else {
                let mut m = CMatrix::zeros(n, n);
                m[(i, j)] = C64::new(s, 0.0);
                m[(j, i)] = C64::new(s, 0.0);
                out.push(m);
            }
        }
    }
    out
}

/// `(E_ij − E_ji)/√2`, `i < j`.
pub fn antisymmetric_units(n: usize) -> Vec<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut m = CMatrix::zeros(n, n);
            m[(i, j)] = C64::new(s, 0.0);
            m[(j, i)] = C64::new(-s, 0.0);
            out.push(m);
        }
    }
    out
}

/// Standard symplectic form on `C^n`, `n` even.
pub fn symplectic(n: usize) -> CMatrix {
    let mut j = CMatrix::zeros(n, n);
    for k in 0..n / 2 {
        j[(2 * k, 2 * k + 1)] = ONE;
        j[(2 * k + 1, 2 * k)] = -ONE;
    }
    j
}

/// `W·W^T` for Haar `W`: a symmetric unitary.
pub fn random_symmetric_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let w = haar_unitary(rng, n);
    &w * &w.transpose()
}

/// `W·J_0·W^T` for Haar `W`: an antisymmetric unitary (`n` even).
pub fn random_antisymmetric_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let w = haar_unitary(rng, n);
    &(&w * &symplectic(n)) * &w.transpose()
}

/// `cos θ·1 + i sin θ·u` with `u` a real unit combination of generators
/// (and of `i^N·top` when `with_top`), a unitary in `F_N` or `E_2N`.
pub fn random_spin_unitary<R: Rng + ?Sized>(rng: &mut R, spins: &SpinSystem, with_top: bool) -> CMatrix {
    let labels = spins.labels();
    let count = labels.len() + usize::from(with_top);
    let r = real_unit_vector(rng, count);
    let d = spins.dim();
    let mut u = CMatrix::zeros(d, d);
    for (c, &j) in r.iter().zip(&labels) {
        u.axpy(C64::new(*c, 0.0), spins.generator(j).expect("valid label"));
    }
    if with_top {
        u.axpy(C64::new(r[count - 1], 0.0), &spins.extra_generator());
    }
    let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let mut v = u.scale(IMAG * theta.sin());
    v.axpy(C64::new(theta.cos(), 0.0), &CMatrix::identity(d));
    v
}

fn check_positive_factor(name: &str, a: &CMatrix, tol: &Tolerances) -> Result<()> {
    if !a.is_square() {
        return invalid(format!("{name} must be square"));
    }
    if !a.is_hermitian(tol) {
        return invalid(format!("{name} must be positive (it is not Hermitian)"));
    }
    let (vals, _) = a.eigh(tol)?;
    let top = vals.last().copied().unwrap_or(0.0);
    let bottom = vals.first().copied().unwrap_or(0.0);
    if !(top > 0.0) || bottom <= tol.rank_cut * top {
        return invalid(format!("{name} must be positive with trivial kernel"));
    }
    Ok(())
}

fn p_norm_power(a: &CMatrix, p: PIndex) -> Result<f64> {
    match p {
        PIndex::Finite(q) => Ok(schatten_norm(a, p)?.powf(q)),
        PIndex::Inf => schatten_norm(a, p),
    }
}

impl TypeSpec {
    pub fn new(kind: TypeKind) -> Self {
        Self {
            kind,
            i: None,
            j: None,
            n: None,
            o: None,
            v: None,
            a: None,
            a2: None,
            seed: 0,
            p: PIndex::TWO,
            a_dim: None,
            two_blocks: None,
        }
    }

    pub fn sym(i: usize) -> Self {
        Self { i: Some(i), ..Self::new(TypeKind::Sym) }
    }

    pub fn antisym(i: usize) -> Self {
        Self { i: Some(i), ..Self::new(TypeKind::Antisym) }
    }

    pub fn rect(i: usize, j: usize) -> Self {
        Self { i: Some(i), j: Some(j), ..Self::new(TypeKind::Rect) }
    }

    pub fn af_hilbert(n: usize) -> Self {
        Self { n: Some(n), ..Self::new(TypeKind::AFHilbert) }
    }

    pub fn spin_even(n: usize) -> Self {
        Self { n: Some(n), ..Self::new(TypeKind::SpinEven) }
    }

    pub fn spin_odd(n: usize) -> Self {
        Self { n: Some(n), ..Self::new(TypeKind::SpinOdd) }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_p(mut self, p: PIndex) -> Self {
        self.p = p;
        self
    }

    pub fn with_a_dim(mut self, d: usize) -> Self {
        self.a_dim = Some(d);
        self
    }

    pub fn with_identity_twist(mut self) -> Self {
        match self.kind {
            TypeKind::Sym => self.o = self.i.map(CMatrix::identity),
            TypeKind::Antisym => self.o = self.i.map(symplectic),
            TypeKind::SpinEven | TypeKind::SpinOdd => {
                self.v = self.n.map(|n| CMatrix::identity(1 << n));
            }
            _ => {}
        }
        self
    }

    fn index(&self, name: &str, v: Option<usize>, lo: usize, hi: usize) -> Result<usize> {
        match v {
            Some(x) if (lo..=hi).contains(&x) => Ok(x),
            Some(x) => invalid(format!("{name} = {x} must lie in {lo}..={hi}")),
            None => invalid(format!("{name} is required for {:?}", self.kind)),
        }
    }

    fn uses_second_factor(&self) -> bool {
        match self.kind {
            TypeKind::SpinEven => true,
            TypeKind::Rect => self.a2.is_some() || self.two_blocks.unwrap_or(true),
            _ => false,
        }
    }

    /// Fill every unset twist and factor deterministically from `seed`.
    ///
    /// Generated factors are `G·G^* + 10⁻³·1` normalized so that `‖a‖_p = 1`
    /// (single factor), `‖a_1‖_p^p + ‖a_2‖_p^p = 1` (two factors), or
    /// `‖a‖_p^p = 1/N` (Fock slices, so that the N-block sum is isometric).
    pub fn resolve(&self, tol: &Tolerances) -> Result<TypeSpec> {
        let mut s = self.clone();
        let mut rng = case_rng(self.seed, "typespec", self.kind.number() as u64);
        let d = s.a_dim.unwrap_or_else(|| s.a.as_ref().map_or(2, |a| a.rows()));
        if !(1..=4).contains(&d) {
            return invalid(format!("a_dim = {d} must lie in 1..=4"));
        }
        match s.kind {
            TypeKind::Sym | TypeKind::Antisym => {
                let i = s.index("I", s.i, 2, MAX_INDEX)?;
                if s.kind == TypeKind::Antisym && i % 2 == 1 {
                    return invalid(format!(
                        "an antisymmetric unitary requires |I| even (|I| = {i})"
                    ));
                }
                if s.o.is_none() {
                    s.o = Some(if s.kind == TypeKind::Sym {
                        random_symmetric_unitary(&mut rng, i)
                    } else {
                        random_antisymmetric_unitary(&mut rng, i)
                    });
                }
            }
            TypeKind::Rect => {
                s.index("I", s.i, 2, MAX_INDEX)?;
                s.index("J", s.j, 2, MAX_INDEX)?;
            }
            TypeKind::AFHilbert => {
                s.index("N", s.n, 2, crate::fock::MAX_N)?;
            }
            TypeKind::SpinEven | TypeKind::SpinOdd => {
                let n = s.index("N", s.n, 2, MAX_SPIN_N)?;
                if s.v.is_none() {
                    let spins = SpinSystem::new(n)?;
                    s.v = Some(random_spin_unitary(&mut rng, &spins, s.kind == TypeKind::SpinEven));
                }
            }
        }
        let two = s.uses_second_factor();
        let gen_a = s.a.is_none();
        let gen_a2 = two && s.a2.is_none();
        if gen_a {
            s.a = Some(if d == 1 { CMatrix::identity(1) } else { positive_definite(&mut rng, d, 1e-3) });
        }
        if gen_a2 {
            s.a2 = Some(if d == 1 { CMatrix::identity(1) } else { positive_definite(&mut rng, d, 1e-3) });
        }
        if d == 1 && gen_a2 && s.p != PIndex::Inf {
            // distinct scalar weights keep the two blocks from being trivially symmetric
            s.a2 = Some(CMatrix::diag_real(&[0.5]));
        }
        if gen_a || gen_a2 {
            s.normalize_generated(gen_a, gen_a2)?;
        }
        s.a_dim = Some(d);
        if s.kind == TypeKind::Rect {
            s.two_blocks = Some(two);
        }
        s.validate(tol)?;
        Ok(s)
    }

    fn normalize_generated(&mut self, gen_a: bool, gen_a2: bool) -> Result<()> {
        let p = self.p;
        let a = self.a.clone().expect("factor present");
        let target_total = match self.kind {
            TypeKind::AFHilbert => 1.0 / self.n.unwrap_or(1) as f64,
            _ => 1.0,
        };
        match (&self.a2, p) {
            (Some(a2), PIndex::Finite(q)) if gen_a && gen_a2 => {
                let total = p_norm_power(&a, p)? + p_norm_power(a2, p)?;
                let c = (target_total / total).powf(1.0 / q);
                self.a = Some(a.scale_real(c));
                self.a2 = Some(a2.scale_real(c));
            }
            (Some(a2), PIndex::Inf) if gen_a && gen_a2 => {
                let c = 1.0 / schatten_norm(&a, p)?.max(schatten_norm(a2, p)?);
                self.a = Some(a.scale_real(c));
                self.a2 = Some(a2.scale_real(c));
            }
            _ => {
                let norm_to = |m: &CMatrix, share: f64| -> Result<CMatrix> {
                    let c = match p {
                        PIndex::Finite(q) => (share / p_norm_power(m, p)?).powf(1.0 / q),
                        PIndex::Inf => 1.0 / schatten_norm(m, p)?,
                    };
                    Ok(m.scale_real(c))
                };
                if gen_a {
                    self.a = Some(norm_to(&a, target_total)?);
                }
                if gen_a2 {
                    let a2 = self.a2.clone().expect("factor present");
                    self.a2 = Some(norm_to(&a2, target_total)?);
                }
            }
        }
        Ok(())
    }

    /// Check the structural invariants of a resolved spec.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let Some(a) = &self.a else {
            return invalid("positive factor a is missing");
        };
        check_positive_factor("a", a, tol)?;
        if let Some(a2) = &self.a2 {
            check_positive_factor("a2", a2, tol)?;
        }
        match self.kind {
            TypeKind::Sym | TypeKind::Antisym => {
                let i = self.index("I", self.i, 2, MAX_INDEX)?;
                let Some(o) = &self.o else {
                    return invalid("twist O is missing");
                };
                if o.shape() != (i, i) {
                    return invalid(format!("O must be {i}x{i}"));
                }
                if !o.is_unitary(tol) {
                    return invalid("O must be unitary");
                }
                if self.kind == TypeKind::Sym && !tol.close(&o.transpose(), o) {
                    return invalid("O must be symmetric (O^T = O)");
                }
                if self.kind == TypeKind::Antisym {
                    if i % 2 == 1 {
                        return invalid(format!(
                            "an antisymmetric unitary requires |I| even (|I| = {i})"
                        ));
                    }
                    if !tol.close(&o.transpose(), &-o) {
                        return invalid("O must be antisymmetric (O^T = -O)");
                    }
                }
            }
            TypeKind::Rect => {
                self.index("I", self.i, 2, MAX_INDEX)?;
                self.index("J", self.j, 2, MAX_INDEX)?;
            }
            TypeKind::AFHilbert => {
                self.index("N", self.n, 2, crate::fock::MAX_N)?;
                if self.p.is_inf() {
                    return invalid("Fock slices are defined for finite p only");
                }
            }
            TypeKind::SpinEven | TypeKind::SpinOdd => {
                let n = self.index("N", self.n, 2, MAX_SPIN_N)?;
                if self.kind == TypeKind::SpinEven && self.a2.is_none() {
                    return invalid("SpinEven needs a second factor a2");
                }
                let Some(v) = &self.v else {
                    return invalid("twist v is missing");
                };
                let d = 1usize << n;
                if v.shape() != (d, d) {
                    return invalid(format!("v must be {d}x{d}"));
                }
                if !v.is_unitary(tol) {
                    return invalid("v must be unitary");
                }
                let spins = SpinSystem::new(n)?;
                let space = if self.kind == TypeKind::SpinEven { spins.f_space() } else { spins.e_space() };
                if space.coefficients(v, tol).is_err() {
                    return invalid(if self.kind == TypeKind::SpinEven {
                        "v must lie in F_N"
                    } else {
                        "v must lie in E_2N"
                    });
                }
            }
        }
        Ok(())
    }

    /// Expected dimension of the built space.
    pub fn expected_dim(&self) -> Option<usize> {
        Some(match self.kind {
            TypeKind::Sym => {
                let i = self.i?;
                i * (i + 1) / 2
            }
            TypeKind::Antisym => {
                let i = self.i?;
                i * (i - 1) / 2
            }
            TypeKind::Rect => self.i? * self.j?,
            TypeKind::AFHilbert => self.n?,
            TypeKind::SpinEven => 2 * self.n? + 2,
            TypeKind::SpinOdd => 2 * self.n? + 1,
        })
    }

    /// Whether a square-block ambient makes positivity meaningful.
    pub fn has_square_blocks(&self) -> bool {
        match self.kind {
            TypeKind::Rect => self.i == self.j,
            TypeKind::AFHilbert => false,
            _ => true,
        }
    }

    /// Single-factor types whose factor is a scalar: their projection is the
    /// same map for every exponent, including `p = ∞`.
    pub fn projection_is_p_independent(&self) -> bool {
        let scalar = |a: &Option<CMatrix>| a.as_ref().is_some_and(|m| m.shape() == (1, 1));
        match self.kind {
            TypeKind::Sym | TypeKind::Antisym | TypeKind::SpinOdd => scalar(&self.a),
            TypeKind::Rect => scalar(&self.a) && self.a2.is_none(),
            _ => false,
        }
    }
}

/// Construct the catalog space for a resolved spec.
pub fn build_type(spec: &TypeSpec, tol: &Tolerances) -> Result<Subspace> {
    spec.validate(tol)?;
    let p = spec.p;
    let a = spec.a.as_ref().expect("validated");
    let d = a.rows();
    match spec.kind {
        TypeKind::Sym | TypeKind::Antisym => {
            let i = spec.i.expect("validated");
            let o = spec.o.as_ref().expect("validated");
            let units = if spec.kind == TypeKind::Sym { symmetric_units(i) } else { antisymmetric_units(i) };
            let basis = units.iter().map(|e| kron(&(o * e), a)).collect();
            Subspace::from_matrices(BlockShape::square(i * d), basis, p, tol)
        }
        TypeKind::Rect => {
            let (i, j) = (spec.i.expect("validated"), spec.j.expect("validated"));
            let mut basis = Vec::with_capacity(i * j);
            let shape = match &spec.a2 {
                Some(a2) => {
                    let d2 = a2.rows();
                    BlockShape::new(vec![(i * d, j * d), (j * d2, i * d2)])?
                }
                None => BlockShape::single(i * d, j * d),
            };
            for r in 0..i {
                for c in 0..j {
                    let w = CMatrix::unit(i, j, r, c);
                    let mut parts = vec![kron(&w, a)];
                    if let Some(a2) = &spec.a2 {
                        parts.push(kron(&w.transpose(), a2));
                    }
                    basis.push(BlockOperator::new(shape.clone(), parts, p)?);
                }
            }
            Subspace::new(shape, basis, p, tol)
        }
        TypeKind::AFHilbert => {
            let n = spec.n.expect("validated");
            let fock = FockSpace::new(n)?;
            let shape = BlockShape::new(
                (1..=n).map(|m| (binom(n, m) * d, binom(n, m - 1) * d)).collect(),
            )?;
            let mut basis = Vec::with_capacity(n);
            for k in 0..n {
                let mut t = vec![ZERO; n];
                t[k] = ONE;
                let parts = (1..=n)
                    .map(|m| Ok(kron(&fock.phi_m(m, &t, p)?, a)))
                    .collect::<Result<Vec<_>>>()?;
                basis.push(BlockOperator::new(shape.clone(), parts, p)?);
            }
            Subspace::new(shape, basis, p, tol)
        }
        TypeKind::SpinEven => {
            let n = spec.n.expect("validated");
            let a2 = spec.a2.as_ref().expect("validated");
            let spins = SpinSystem::new(n)?;
            let f = spins.f_space();
            let v = spec.v.as_ref().expect("validated");
            let sv = f.sigma(v, tol)?;
            let dim = spins.dim();
            let shape = BlockShape::new(vec![(dim * d, dim * d), (dim * a2.rows(), dim * a2.rows())])?;
            let mut basis = Vec::with_capacity(f.dim());
            for b in &f.basis {
                let sb = f.sigma(b, tol)?;
                let parts = vec![kron(&(v * b), a), kron(&(&sv * &sb), a2)];
                basis.push(BlockOperator::new(shape.clone(), parts, p)?);
            }
            Subspace::new(shape, basis, p, tol)
        }
        TypeKind::SpinOdd => {
            let n = spec.n.expect("validated");
            let spins = SpinSystem::new(n)?;
            let e = spins.e_space();
            let v = spec.v.as_ref().expect("validated");
            let basis = e.basis.iter().map(|b| kron(&(v * b), a)).collect();
            Subspace::from_matrices(BlockShape::square(spins.dim() * d), basis, p, tol)
        }
    }
}

/// Partial isometries `U`, `V` with `X = V·Y·U^*` and `Y = V^*·X·U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivWitness {
    #[serde(rename = "U")]
    pub u: CMatrix,
    #[serde(rename = "V")]
    pub v: CMatrix,
}

impl EquivWitness {
    pub fn positive(u: CMatrix) -> Self {
        Self { v: u.clone(), u }
    }

    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        if !self.u.is_partial_isometry(tol) || !self.v.is_partial_isometry(tol) {
            return domain_err("equivalence witness must consist of partial isometries");
        }
        Ok(())
    }

    /// The witness with its roles exchanged: `(V, U)`.
    pub fn swapped(&self) -> Self {
        Self {
            u: self.v.clone(),
            v: self.u.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EquivalenceCheck {
    pub equivalent: bool,
    /// `U·s_r(Y)`, `V·s_ℓ(Y)` when the spaces are equivalent.
    pub normalized: Option<EquivWitness>,
    /// `UU^* = s_r(X)`, `U^*U = s_r(Y)`, `VV^* = s_ℓ(X)`, `V^*V = s_ℓ(Y)`.
    pub support_identities: bool,
}

fn conjugate_space(
    src: &Subspace,
    left: &CMatrix,
    right: &CMatrix,
    p: PIndex,
    tol: &Tolerances,
) -> Result<Subspace> {
    let mats: Vec<CMatrix> = src
        .basis
        .iter()
        .map(|b| {
            let x = b.embed();
            left.try_matmul(&x)?.try_matmul(right)
        })
        .collect::<Result<_>>()?;
    let (r, c) = (left.rows(), right.cols());
    let shape = BlockShape::single(r, c);
    let elems: Vec<BlockOperator> = mats.into_iter().map(|m| BlockOperator::single(m, p)).collect();
    Subspace::span_of(&shape, &elems, p, tol)
}

/// Image `V·Y·U^*` of a space under a witness, as a single-block space.
pub fn transport_space(y: &Subspace, w: &EquivWitness, tol: &Tolerances) -> Result<Subspace> {
    w.validate(tol)?;
    conjugate_space(y, &w.v, &w.u.adjoint(), y.p, tol)
}

/// Preimage side `V^*·X·U` of a witness, as a single-block space.
pub fn pullback_space(x: &Subspace, w: &EquivWitness, tol: &Tolerances) -> Result<Subspace> {
    w.validate(tol)?;
    conjugate_space(x, &w.v.adjoint(), &w.u, x.p, tol)
}

/// Check `X = V·Y·U^*` and `Y = V^*·X·U` as span equalities.
pub fn check_equivalence(x: &Subspace, y: &Subspace, w: &EquivWitness, tol: &Tolerances) -> Result<EquivalenceCheck> {
    w.validate(tol)?;
    let xe = x.embed(tol)?;
    let ye = y.embed(tol)?;
    let (xr, xc) = xe.shape.embedded();
    let (yr, yc) = ye.shape.embedded();
    if w.v.shape() != (xr, yr) || w.u.shape() != (xc, yc) {
        return shape_err(format!(
            "witness shapes V {:?}, U {:?} do not connect {:?} and {:?}",
            w.v.shape(),
            w.u.shape(),
            (xr, xc),
            (yr, yc)
        ));
    }
    let vyu = conjugate_space(&ye, &w.v, &w.u.adjoint(), x.p, tol)?;
    let vxu = conjugate_space(&xe, &w.v.adjoint(), &w.u, y.p, tol)?;
    let equivalent = xe.span_eq(&vyu, tol)? && ye.span_eq(&vxu, tol)?;
    if !equivalent {
        return Ok(EquivalenceCheck {
            equivalent,
            normalized: None,
            support_identities: false,
        });
    }
    let sr_y = ye.support_right(tol)?;
    let sl_y = ye.support_left(tol)?;
    let sr_x = xe.support_right(tol)?;
    let sl_x = xe.support_left(tol)?;
    let nu = &w.u * &sr_y;
    let nv = &w.v * &sl_y;
    let ids = tol.close(&(&nu * &nu.adjoint()), &sr_x)
        && tol.close(&(&nu.adjoint() * &nu), &sr_y)
        && tol.close(&(&nv * &nv.adjoint()), &sl_x)
        && tol.close(&(&nv.adjoint() * &nv), &sl_y);
    Ok(EquivalenceCheck {
        equivalent,
        normalized: Some(EquivWitness { u: nu, v: nv }),
        support_identities: ids,
    })
}

/// Split `X` into pairwise operator-disjoint summands.
///
/// Each summand is `X·C` for a projection `C` commuting with all `x^*y`.
/// Candidate projections come from a generic positive element of
/// `span{x^*y}`, and they are joined into the finest unions that keep
/// `X·C ⊆ X`. The result relies on the generic element separating summands.
pub fn disjoint_components(x: &Subspace, tol: &Tolerances) -> Result<Vec<Subspace>> {
    if x.dim() <= 1 {
        return Ok(vec![x.clone()]);
    }
    let mats: Vec<CMatrix> = x.basis.iter().map(|b| b.embed()).collect();
    let pieces = commuting_pieces(x, &mats, tol)?;
    if pieces.len() <= 1 {
        return Ok(vec![x.clone()]);
    }
    let groups = finest_valid_grouping(x, &mats, &pieces, tol)?;
    if groups.len() <= 1 {
        return Ok(vec![x.clone()]);
    }
    let mut out = Vec::with_capacity(groups.len());
    for g in &groups {
        let c = g.iter().fold(CMatrix::zeros(pieces[0].rows(), pieces[0].cols()), |acc, &k| &acc + &pieces[k]);
        let parts: Vec<BlockOperator> = mats
            .iter()
            .map(|b| BlockOperator::from_embedded(&x.shape, x.p, &(b * &c)))
            .collect::<Result<_>>()?;
        if !parts.iter().all(|y| x.contains(y, tol)) {
            return Ok(vec![x.clone()]);
        }
        out.push(Subspace::span_of(&x.shape, &parts, x.p, tol)?);
    }
    if out.iter().map(Subspace::dim).sum::<usize>() != x.dim() {
        return Ok(vec![x.clone()]);
    }
    Ok(out)
}

// Projections on the right support that commute with every x^*y, x, y in X.
// Eigenvectors of a generic positive element of span{x^*y} are linked whenever
// some x_a^* x_b connects them; the linked groups give the pieces.
fn commuting_pieces(x: &Subspace, mats: &[CMatrix], tol: &Tolerances) -> Result<Vec<CMatrix>> {
    let mut rng = case_rng(0x5EED, "disjoint_components", x.dim() as u64);
    let n = mats[0].cols();
    let mut h = CMatrix::zeros(n, n);
    for _ in 0..x.dim() {
        let y = x.random_element(&mut rng).embed();
        h = &h + &(&y.adjoint() * &y);
    }
    let (vals, vecs) = h.eigh(tol)?;
    let top = vals.iter().cloned().fold(0.0f64, f64::max);
    let support: Vec<usize> = (0..n).filter(|&k| vals[k] > tol.rank_cut * top).collect();
    let stacks: Vec<CMatrix> = support
        .iter()
        .map(|&k| {
            let q = vecs.select_columns(&[k]);
            CMatrix::hstack(&mats.iter().map(|b| b * &q).collect::<Vec<_>>())
        })
        .collect::<Result<_>>()?;
    let scale: f64 = mats.iter().map(|b| b.frobenius_norm().powi(2)).sum();
    let link = tol.eq_abs + tol.eq_rel * scale;
    let m = support.len();
    let mut label: Vec<usize> = (0..m).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..m {
        for j in (i + 1)..m {
            if (&stacks[i].adjoint() * &stacks[j]).frobenius_norm() > link {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut pieces: Vec<(usize, CMatrix)> = Vec::new();
    for i in 0..m {
        let r = root(&mut label, i);
        let q = vecs.select_columns(&[support[i]]);
        let qq = &q * &q.adjoint();
        match pieces.iter_mut().find(|(k, _)| *k == r) {
            Some((_, c)) => *c = &*c + &qq,
            None => pieces.push((r, qq)),
        }
    }
    Ok(pieces.into_iter().map(|(_, c)| c).collect())
}

// Unions G of pieces with X·C_G inside X are closed under intersection, so the
// solutions t of sum_k t_k res(x C_k) = 0 are constant on the atoms. Group the
// pieces by the value of a generic solution.
fn finest_valid_grouping(x: &Subspace, mats: &[CMatrix], pieces: &[CMatrix], tol: &Tolerances) -> Result<Vec<Vec<usize>>> {
    let m = pieces.len();
    let mut cols = Vec::with_capacity(m);
    for c in pieces {
        let mut col = Vec::new();
        for b in mats {
            let y = BlockOperator::from_embedded(&x.shape, x.p, &(b * c))?;
            let r = y.sub(&x.orth_project(&y));
            col.extend_from_slice(r.embed().data());
        }
        cols.push(col);
    }
    let len = cols[0].len();
    let l = CMatrix::from_fn(len, m, |i, k| cols[k][i]);
    let gram = &l.adjoint() * &l;
    let (vals, vecs) = gram.eigh(tol)?;
    let scale: f64 = mats.iter().map(|b| b.frobenius_norm().powi(2)).sum();
    let null: Vec<usize> = (0..m).filter(|&k| vals[k] <= tol.rank_cut * scale).collect();
    if null.is_empty() {
        return Ok(vec![(0..m).collect()]);
    }
    let mut rng = case_rng(0x5EED, "disjoint_grouping", m as u64);
    let mut t = vec![ZERO; m];
    for &k in &null {
        let w = complex_normal(&mut rng);
        for (i, ti) in t.iter_mut().enumerate() {
            *ti += w * vecs[(i, k)];
        }
    }
    let size = t.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let mut groups: Vec<(C64, Vec<usize>)> = Vec::new();
    for (k, &tk) in t.iter().enumerate() {
        match groups.iter_mut().find(|(v, _)| (*v - tk).norm() <= 1e-6 * size) {
            Some((_, g)) => g.push(k),
            None => groups.push((tk, vec![k])),
        }
    }
    Ok(groups.into_iter().map(|(_, g)| g).collect())
}

/// A PSD element of `Ran(P) = X` whose support is the support of `X`,
/// found by averaging `P`-images of random PSD inputs.
pub fn positive_element_with_full_support(
    x: &Subspace,
    proj: &MatrixMap,
    budget: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<BlockOperator> {
    if !x.shape.is_square_blocks() {
        return Err(LabError::SearchFailed("ambient blocks are not square".into()));
    }
    let target_l = x.support_left(tol)?;
    let target_r = x.support_right(tol)?;
    let target = support_left(&[target_l, target_r], tol)?;
    let mut acc = BlockOperator::zeros(&x.shape, x.p);
    for k in 0..budget.max(1) {
        let mut rng = case_rng(seed, "positive_element", k as u64);
        let input = BlockOperator::from_fn(&x.shape, x.p, |_, _, _| ZERO);
        let mut input = input;
        for (part, &(n, _)) in input.parts.iter_mut().zip(&x.shape.blocks) {
            *part = density(&mut rng, n, n);
        }
        let img = proj.apply(&input)?;
        acc.axpy(ONE, &img);
        let avg = acc.scale_real(1.0 / (k + 1) as f64);
        let scale = avg.frobenius_norm();
        if scale <= tol.eq_abs {
            continue;
        }
        let emb = avg.embed();
        let nonneg = emb.is_psd(tol)? && avg.is_psd(tol)?;
        if nonneg && tol.close(&emb.left_support(tol.rank_cut)?, &target) && x.contains(&avg, tol) {
            return Ok(avg);
        }
    }
    Err(LabError::SearchFailed(format!(
        "no positive element with full support after {budget} trials"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn sym_identity_scalar() {
        let t = tol();
        let spec = TypeSpec::sym(2).with_identity_twist().with_a_dim(1).resolve(&t).unwrap();
        let x = build_type(&spec, &t).unwrap();
        assert_eq!(x.dim(), 3);
        assert!(x.contains_matrix(&CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]), &t));
        assert!(!x.contains_matrix(&CMatrix::unit(2, 2, 0, 1), &t));
    }

    #[test]
    fn antisym_odd_rejected() {
        let t = tol();
        let err = TypeSpec::antisym(3).resolve(&t).unwrap_err();
        assert!(matches!(err, LabError::InvalidSpec(ref m) if m.contains("even")), "{err}");
    }

    #[test]
    fn dimension_table() {
        let t = tol();
        let cases = [
            TypeSpec::sym(3),
            TypeSpec::antisym(4),
            TypeSpec::rect(2, 3),
            TypeSpec::af_hilbert(3),
            TypeSpec::spin_even(2),
            TypeSpec::spin_odd(2),
        ];
        for spec in cases {
            let r = spec.with_seed(3).resolve(&t).unwrap();
            let x = build_type(&r, &t).unwrap();
            assert_eq!(Some(x.dim()), r.expected_dim(), "{:?}", r.kind);
        }
    }

    #[test]
    fn resolve_is_deterministic() {
        let t = tol();
        let a = TypeSpec::spin_even(2).with_seed(11).resolve(&t).unwrap();
        let b = TypeSpec::spin_even(2).with_seed(11).resolve(&t).unwrap();
        assert_eq!(a, b);
        let c = TypeSpec::spin_even(2).with_seed(12).resolve(&t).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn factor_normalization() {
        let t = tol();
        let p = PIndex::Finite(3.0);
        let s = TypeSpec::spin_even(2).with_p(p).with_seed(1).resolve(&t).unwrap();
        let total = p_norm_power(s.a.as_ref().unwrap(), p).unwrap() + p_norm_power(s.a2.as_ref().unwrap(), p).unwrap();
        assert!((total - 1.0).abs() < 1e-12);
        let s = TypeSpec::sym(3).with_p(p).with_seed(1).resolve(&t).unwrap();
        assert!((schatten_norm(s.a.as_ref().unwrap(), p).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_twists_rejected() {
        let t = tol();
        let mut s = TypeSpec::sym(2).with_a_dim(1);
        s.o = Some(CMatrix::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]));
        assert!(matches!(s.resolve(&t), Err(LabError::InvalidSpec(m)) if m.contains("symmetric")));
        let mut s = TypeSpec::spin_odd(2).with_a_dim(1);
        let spins = SpinSystem::new(2).unwrap();
        s.v = Some(spins.top_word());
        assert!(matches!(s.resolve(&t), Err(LabError::InvalidSpec(m)) if m.contains("E_2N")));
        let mut s = TypeSpec::sym(2);
        s.a = Some(CMatrix::diag_real(&[1.0, 0.0]));
        assert!(matches!(s.resolve(&t), Err(LabError::InvalidSpec(m)) if m.contains("kernel")));
    }

    #[test]
    fn subspace_coefficients_round_trip() {
        let t = tol();
        let spec = TypeSpec::rect(2, 3).with_seed(2).resolve(&t).unwrap();
        let x = build_type(&spec, &t).unwrap();
        let mut rng = case_rng(0, "coef", 0);
        let y = x.random_element(&mut rng);
        let c = x.coefficients(&y, &t).unwrap();
        assert!(x.combine(&c).close(&y, &t));
    }

    #[test]
    fn range_distance_detects_difference() {
        let t = tol();
        let s = BlockShape::square(2);
        let a = Subspace::from_matrices(s.clone(), vec![CMatrix::unit(2, 2, 0, 0)], PIndex::TWO, &t).unwrap();
        let b = Subspace::from_matrices(s.clone(), vec![CMatrix::unit(2, 2, 0, 0).scale_real(3.0)], PIndex::TWO, &t).unwrap();
        let c = Subspace::from_matrices(s, vec![CMatrix::unit(2, 2, 1, 1)], PIndex::TWO, &t).unwrap();
        assert!(a.range_distance(&b).unwrap() < 1e-14);
        assert!((a.range_distance(&c).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dependent_basis_rejected() {
        let t = tol();
        let e = CMatrix::unit(2, 2, 0, 0);
        let r = Subspace::from_matrices(BlockShape::square(2), vec![e.clone(), e.scale_real(2.0)], PIndex::TWO, &t);
        assert!(matches!(r, Err(LabError::InvalidSpec(_))));
    }

    #[test]
    fn full_matrix_space_is_one_component() {
        let t = tol();
        let basis: Vec<CMatrix> = (0..4).map(|k| CMatrix::unit(2, 2, k / 2, k % 2)).collect();
        let x = Subspace::from_matrices(BlockShape::square(2), basis, PIndex::TWO, &t).unwrap();
        assert_eq!(disjoint_components(&x, &t).unwrap().len(), 1);
    }

    #[test]
    fn diagonal_space_splits() {
        let t = tol();
        let basis = vec![CMatrix::identity(3), CMatrix::diag_real(&[1.0, -1.0, 2.0]), CMatrix::diag_real(&[0.0, 1.0, 5.0])];
        let x = Subspace::from_matrices(BlockShape::square(3), basis, PIndex::TWO, &t).unwrap();
        assert_eq!(disjoint_components(&x, &t).unwrap().len(), 3);
    }

    #[test]
    fn equivalence_under_unitary() {
        let t = tol();
        let spec = TypeSpec::sym(2).with_seed(4).with_a_dim(1).resolve(&t).unwrap();
        let y = build_type(&spec, &t).unwrap();
        let mut rng = case_rng(0, "equiv", 0);
        let u = haar_unitary(&mut rng, 2);
        let w = EquivWitness::positive(u.clone());
        let x = transport_space(&y, &w, &t).unwrap();
        let chk = check_equivalence(&x, &y, &w, &t).unwrap();
        assert!(chk.equivalent && chk.support_identities);
        let ident = EquivWitness::positive(CMatrix::identity(2));
        assert!(check_equivalence(&y, &y, &ident, &t).unwrap().equivalent);
        let bad = EquivWitness::positive(CMatrix::diag_real(&[1.0, 0.5]));
        assert!(check_equivalence(&y, &y, &bad, &t).is_err());
    }

    #[test]
    fn subspace_json_round_trip() {
        let t = tol();
        let spec = TypeSpec::spin_odd(2).with_seed(5).with_a_dim(1).resolve(&t).unwrap();
        let x = build_type(&spec, &t).unwrap();
        let js = serde_json::to_string(&x).unwrap();
        let back: Subspace = serde_json::from_str(&js).unwrap();
        assert_eq!(back.basis, x.basis);
        let spec_js = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<TypeSpec>(&spec_js).unwrap(), spec);
    }
}
