//! Explicit projections onto the catalog spaces, their transport across
//! equivalences, trace-duality adjoints, and the `V_p` bridge.

use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain_err, shape_err, LabError, Result};
use crate::linalg::{kron, CMatrix, Tolerances, C64, ONE, ZERO};
use crate::random::{case_rng, complex_normal, density, ginibre, haar_unitary, real_normal};
use crate::schatten::{lp_norm, schatten_norm, BlockOperator, BlockShape, PIndex};
use crate::spaces::{EquivWitness, Subspace, TypeKind, TypeSpec};
use crate::spin::SpinSystem;

/// Maps are materialized only up to this vectorized dimension.
pub const MATERIALIZE_LIMIT: usize = 1024;

type Action = dyn Fn(&BlockOperator) -> BlockOperator + Send + Sync;

/// Linear map between block-matrix spaces.
#[derive(Clone)]
pub struct MatrixMap {
    pub shape_in: BlockShape,
    pub shape_out: BlockShape,
    action: Arc<Action>,
    matrix: Arc<OnceLock<Option<CMatrix>>>,
}

impl fmt::Debug for MatrixMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixMap")
            .field("shape_in", &self.shape_in)
            .field("shape_out", &self.shape_out)
            .finish_non_exhaustive()
    }
}

fn vec_block(shape: &BlockShape, p: PIndex, v: &[C64]) -> BlockOperator {
    BlockOperator::from_vec(shape, p, v).expect("vector length matches shape")
}

/// Vectorized index of the transposed coordinate in the adjoint shape.
fn swap_indices(shape: &BlockShape) -> Vec<usize> {
    let adj = shape.adjoint();
    let mut offsets = Vec::with_capacity(adj.len());
    let mut off = 0;
    for &(r, c) in &adj.blocks {
        offsets.push(off);
        off += r * c;
    }
    (0..shape.vec_dim())
        .map(|u| {
            let (b, i, j) = shape.coordinate(u);
            offsets[b] + j * adj.blocks[b].1 + i
        })
        .collect()
}

impl MatrixMap {
    pub fn new(
        shape_in: BlockShape,
        shape_out: BlockShape,
        f: impl Fn(&BlockOperator) -> BlockOperator + Send + Sync + 'static,
    ) -> Self {
        Self {
            shape_in,
            shape_out,
            action: Arc::new(f),
            matrix: Arc::new(OnceLock::new()),
        }
    }

    pub fn identity(shape: BlockShape) -> Self {
        Self::new(shape.clone(), shape, |x| x.clone())
    }

    /// Map given by its vectorized matrix (`vec_out × vec_in`).
    pub fn from_matrix(shape_in: BlockShape, shape_out: BlockShape, m: CMatrix) -> Result<Self> {
        if m.shape() != (shape_out.vec_dim(), shape_in.vec_dim()) {
            return shape_err(format!(
                "matrix of shape {:?} cannot act from {} to {} coordinates",
                m.shape(),
                shape_in.vec_dim(),
                shape_out.vec_dim()
            ));
        }
        let m = Arc::new(m);
        let mm = Arc::clone(&m);
        let out = shape_out.clone();
        let map = Self::new(shape_in, shape_out, move |x| {
            let v = x.to_vec();
            let n = v.len();
            let col = CMatrix::new(n, 1, v).expect("finite input");
            vec_block(&out, x.p, (&*mm * &col).data())
        });
        let _ = map.matrix.set(Some((*m).clone()));
        Ok(map)
    }

    pub fn apply(&self, x: &BlockOperator) -> Result<BlockOperator> {
        if x.shape != self.shape_in {
            return shape_err(format!(
                "map expects input blocks {:?}, got {:?}",
                self.shape_in.blocks, x.shape.blocks
            ));
        }
        Ok((self.action)(x))
    }

    /// Single-block convenience wrapper around [`MatrixMap::apply`].
    pub fn apply_matrix(&self, x: &CMatrix, p: PIndex) -> Result<CMatrix> {
        let y = self.apply(&BlockOperator::single(x.clone(), p))?;
        Ok(y.parts.into_iter().next().expect("one block"))
    }

    pub fn is_materializable(&self) -> bool {
        self.shape_in.vec_dim().max(self.shape_out.vec_dim()) <= MATERIALIZE_LIMIT
    }

    /// Vectorized matrix of the action, computed on first use.
    pub fn materialized(&self) -> Option<&CMatrix> {
        self.matrix
            .get_or_init(|| {
                if !self.is_materializable() {
                    return None;
                }
                let n_in = self.shape_in.vec_dim();
                let cols: Vec<Vec<C64>> = (0..n_in)
                    .into_par_iter()
                    .map(|u| (self.action)(&BlockOperator::unit(&self.shape_in, PIndex::TWO, u)).to_vec())
                    .collect();
                let n_out = self.shape_out.vec_dim();
                Some(CMatrix::from_fn(n_out, n_in, |i, j| cols[j][i]))
            })
            .as_ref()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &MatrixMap) -> Result<MatrixMap> {
        if inner.shape_out != self.shape_in {
            return shape_err("composition of maps with mismatched shapes");
        }
        let (a, b) = (Arc::clone(&self.action), Arc::clone(&inner.action));
        Ok(Self::new(inner.shape_in.clone(), self.shape_out.clone(), move |x| a(&b(x))))
    }

    pub fn add(&self, other: &MatrixMap) -> Result<MatrixMap> {
        if self.shape_in != other.shape_in || self.shape_out != other.shape_out {
            return shape_err("sum of maps with mismatched shapes");
        }
        let (a, b) = (Arc::clone(&self.action), Arc::clone(&other.action));
        Ok(Self::new(self.shape_in.clone(), self.shape_out.clone(), move |x| a(x).add(&b(x))))
    }

    pub fn scale(&self, c: C64) -> MatrixMap {
        let a = Arc::clone(&self.action);
        Self::new(self.shape_in.clone(), self.shape_out.clone(), move |x| a(x).scale(c))
    }

    /// Map on the block-diagonal embedding: off-diagonal blocks are discarded
    /// before acting, and the result is embedded back.
    pub fn flatten(&self) -> MatrixMap {
        let (ri, ci) = self.shape_in.embedded();
        let (ro, co) = self.shape_out.embedded();
        let a = Arc::clone(&self.action);
        let sin = self.shape_in.clone();
        Self::new(BlockShape::single(ri, ci), BlockShape::single(ro, co), move |x| {
            let xb = BlockOperator::from_embedded(&sin, x.p, &x.parts[0]).expect("embedded shape");
            BlockOperator::single(a(&xb).embed(), x.p)
        })
    }

    /// Adjoint under the trace pairing: `⟨P^*(y), x⟩ = ⟨y, P(x)⟩`.
    pub fn adjoint_map(&self) -> MatrixMap {
        let new_in = self.shape_out.adjoint();
        let new_out = self.shape_in.adjoint();
        let swap_in = swap_indices(&self.shape_in);
        let swap_out = swap_indices(&self.shape_out);
        if let Some(m) = self.materialized() {
            let mut a = CMatrix::zeros(new_out.vec_dim(), new_in.vec_dim());
            for u in 0..m.cols() {
                for v in 0..m.rows() {
                    a[(swap_in[u], swap_out[v])] = m[(v, u)];
                }
            }
            return Self::from_matrix(new_in, new_out, a).expect("dimensions match");
        }
        let act = Arc::clone(&self.action);
        let sin = self.shape_in.clone();
        let out = new_out.clone();
        Self::new(new_in, new_out, move |y| {
            let yv = y.to_vec();
            let mut z = vec![ZERO; out.vec_dim()];
            for (u, &su) in swap_in.iter().enumerate() {
                let img = act(&BlockOperator::unit(&sin, y.p, u)).to_vec();
                z[su] = swap_out.iter().map(|&sv| yv[sv]).zip(&img).map(|(a, b)| a * b).sum();
            }
            vec_block(&out, y.p, &z)
        })
    }

    /// Span of the images of `probes` Gaussian inputs.
    pub fn range_subspace(&self, p: PIndex, probes: usize, seed: u64, tol: &Tolerances) -> Result<Subspace> {
        let images: Vec<BlockOperator> = (0..probes)
            .map(|k| {
                let mut rng = case_rng(seed, "range_probe", k as u64);
                self.apply(&gaussian_block(&mut rng, &self.shape_in, p))
            })
            .collect::<Result<_>>()?;
        Subspace::span_of(&self.shape_out, &images, p, tol)
    }
}

fn gaussian_block<R: Rng + ?Sized>(rng: &mut R, shape: &BlockShape, p: PIndex) -> BlockOperator {
    BlockOperator::from_fn(shape, p, |_, _, _| complex_normal(rng))
}

pub fn transpose_map(x: &CMatrix) -> CMatrix {
    x.transpose()
}

pub fn symmetrize(x: &CMatrix) -> Result<CMatrix> {
    if !x.is_square() {
        return domain_err("symmetrize needs a square matrix");
    }
    Ok((x + &x.transpose()).scale_real(0.5))
}

pub fn antisymmetrize(x: &CMatrix) -> Result<CMatrix> {
    if !x.is_square() {
        return domain_err("antisymmetrize needs a square matrix");
    }
    Ok((x - &x.transpose()).scale_real(0.5))
}

/// Blockwise transpose, mapping `shape` to its adjoint shape.
pub fn transpose_op(shape: &BlockShape) -> MatrixMap {
    let out = shape.adjoint();
    MatrixMap::new(shape.clone(), out.clone(), move |x| {
        BlockOperator::new(out.clone(), x.parts.iter().map(|m| m.transpose()).collect(), x.p)
            .expect("transposed blocks")
    })
}

pub fn symmetrize_map(n: usize) -> MatrixMap {
    MatrixMap::new(BlockShape::square(n), BlockShape::square(n), |x| {
        BlockOperator::single(symmetrize(&x.parts[0]).expect("square"), x.p)
    })
}

pub fn antisymmetrize_map(n: usize) -> MatrixMap {
    MatrixMap::new(BlockShape::square(n), BlockShape::square(n), |x| {
        BlockOperator::single(antisymmetrize(&x.parts[0]).expect("square"), x.p)
    })
}

/// `P_O(x) = (x + O·x^T·O^*)/2`.
pub fn p_twisted(o: &CMatrix, sym: bool, tol: &Tolerances) -> Result<MatrixMap> {
    if !o.is_square() || !o.is_unitary(tol) {
        return domain_err("twist O must be a unitary");
    }
    let expect = if sym { o.clone() } else { -o };
    if !tol.close(&o.transpose(), &expect) {
        return domain_err(if sym { "twist O must be symmetric" } else { "twist O must be antisymmetric" });
    }
    let n = o.rows();
    let (o, od) = (o.clone(), o.adjoint());
    Ok(MatrixMap::new(BlockShape::square(n), BlockShape::square(n), move |x| {
        let y = &x.parts[0];
        let t = &(&o * &y.transpose()) * &od;
        BlockOperator::single((y + &t).scale_real(0.5), x.p)
    }))
}

/// `a^{p−1}/‖a‖_p^p`, the density of the normalized functional `φ_a`.
pub fn phi_weight(a: &CMatrix, p: PIndex, tol: &Tolerances) -> Result<CMatrix> {
    let q = match p {
        PIndex::Finite(q) => q,
        PIndex::Inf => return domain_err("phi_a is defined for finite p only"),
    };
    if !a.is_square() || !a.is_psd(tol)? {
        return domain_err("phi_a needs a positive semidefinite factor");
    }
    let norm_p = schatten_norm(a, p)?.powf(q);
    if norm_p <= tol.eq_abs {
        return domain_err("phi_a needs a nonzero factor");
    }
    Ok(a.frac_power(q - 1.0, tol)?.scale_real(1.0 / norm_p))
}

/// `φ_a(x) = tr(a^{p−1}x)/‖a‖_p^p` as a map into `1×1` matrices.
pub fn phi_a(a: &CMatrix, p: PIndex, tol: &Tolerances) -> Result<MatrixMap> {
    let w = phi_weight(a, p, tol)?;
    let d = a.rows();
    Ok(MatrixMap::new(BlockShape::square(d), BlockShape::square(1), move |x| {
        let v = w.trace_product(&x.parts[0]).expect("square factor");
        BlockOperator::single(CMatrix::new(1, 1, vec![v]).expect("finite"), x.p)
    }))
}

fn contract(x: &CMatrix, w: &CMatrix, r: usize, c: usize) -> CMatrix {
    let d = w.rows();
    CMatrix::from_fn(r, c, |i, j| {
        let mut acc = ZERO;
        for k in 0..d {
            for l in 0..d {
                acc += w[(l, k)] * x[(i * d + k, j * d + l)];
            }
        }
        acc
    })
}

fn factor_weights(factors: &[CMatrix], p: PIndex, tol: &Tolerances) -> Result<Vec<CMatrix>> {
    factors.iter().map(|a| phi_weight(a, p, tol)).collect()
}

fn sliced_shape(k_shape: &BlockShape, factors: &[CMatrix]) -> Result<BlockShape> {
    if k_shape.len() != factors.len() {
        return domain_err("one positive factor per block is required");
    }
    BlockShape::new(
        k_shape
            .blocks
            .iter()
            .zip(factors)
            .map(|(&(r, c), a)| (r * a.rows(), c * a.rows()))
            .collect(),
    )
}

/// `I ⊗ φ_a`, blockwise: contracts each `d×d` sub-block against the weight.
pub fn slice_contraction(k_shape: &BlockShape, factors: &[CMatrix], p: PIndex, tol: &Tolerances) -> Result<MatrixMap> {
    let ambient = sliced_shape(k_shape, factors)?;
    let weights = factor_weights(factors, p, tol)?;
    let ks = k_shape.clone();
    Ok(MatrixMap::new(ambient, k_shape.clone(), move |x| {
        let parts = x
            .parts
            .iter()
            .zip(&weights)
            .zip(&ks.blocks)
            .map(|((m, w), &(r, c))| contract(m, w, r, c))
            .collect();
        BlockOperator::new(ks.clone(), parts, x.p).expect("sliced shape")
    }))
}

/// `z ↦ z ⊗ a`, blockwise.
pub fn tensor_back(k_shape: &BlockShape, factors: &[CMatrix]) -> Result<MatrixMap> {
    let ambient = sliced_shape(k_shape, factors)?;
    let fs = factors.to_vec();
    let out = ambient.clone();
    Ok(MatrixMap::new(k_shape.clone(), ambient, move |z| {
        let parts = z.parts.iter().zip(&fs).map(|(m, a)| kron(m, a)).collect();
        BlockOperator::new(out.clone(), parts, z.p).expect("tensored shape")
    }))
}

/// `x ↦ T((I⊗φ_a)(x)) ⊗ a` with one factor per block of `T`.
pub fn tensor_slice(t: &MatrixMap, factors: &[CMatrix], p: PIndex, tol: &Tolerances) -> Result<MatrixMap> {
    if t.shape_in != t.shape_out {
        return domain_err("tensor_slice needs an endomorphism of the small space");
    }
    let down = slice_contraction(&t.shape_in, factors, p, tol)?;
    let up = tensor_back(&t.shape_out, factors)?;
    up.compose(&t.compose(&down)?)
}

fn hs_coefficients(basis: &[CMatrix], norms: &[f64], x: &CMatrix) -> Vec<C64> {
    basis.iter().zip(norms).map(|(b, n)| b.hs_inner(x) / *n).collect()
}

fn hs_combine(basis: &[CMatrix], c: &[C64], rows: usize, cols: usize) -> CMatrix {
    let mut out = CMatrix::zeros(rows, cols);
    for (ci, b) in c.iter().zip(basis) {
        out.axpy(*ci, b);
    }
    out
}

fn check_orthogonal(basis: &[CMatrix], tol: &Tolerances) -> Result<Vec<f64>> {
    let norms: Vec<f64> = basis.iter().map(|b| b.hs_inner(b).re).collect();
    for (i, bi) in basis.iter().enumerate() {
        if norms[i] <= tol.eq_abs {
            return domain_err("hs_projection basis contains a zero element");
        }
        for (j, bj) in basis.iter().enumerate().skip(i + 1) {
            if bi.shape() != bj.shape() {
                return shape_err("hs_projection basis elements differ in shape");
            }
            let ip = bi.hs_inner(bj).norm();
            if ip > tol.eq_abs + tol.eq_rel * (norms[i] * norms[j]).sqrt() {
                return domain_err(format!(
                    "hs_projection basis is not trace-orthogonal (elements {i}, {j})"
                ));
            }
        }
    }
    Ok(norms)
}

/// `x ↦ Σ_b tr(b^*x)/tr(b^*b)·b` for a trace-orthogonal basis.
pub fn hs_projection(basis: &[CMatrix], tol: &Tolerances) -> Result<MatrixMap> {
    let Some(first) = basis.first() else {
        return domain_err("hs_projection needs a nonempty basis");
    };
    let (r, c) = first.shape();
    let norms = check_orthogonal(basis, tol)?;
    let basis = basis.to_vec();
    Ok(MatrixMap::new(BlockShape::single(r, c), BlockShape::single(r, c), move |x| {
        let cf = hs_coefficients(&basis, &norms, &x.parts[0]);
        BlockOperator::single(hs_combine(&basis, &cf, r, c), x.p)
    }))
}

/// `x ↦ tr(x·w)·a`.
pub fn functional_projection(w: &CMatrix, a: &CMatrix) -> MatrixMap {
    let (w, a) = (w.clone(), a.clone());
    MatrixMap::new(
        BlockShape::single(w.cols(), w.rows()),
        BlockShape::single(a.rows(), a.cols()),
        move |x| {
            let t = x.parts[0].trace_product(&w).expect("shape checked");
            BlockOperator::single(a.scale(t), x.p)
        },
    )
}

fn alpha(a1: &CMatrix, a2: &CMatrix, p: PIndex) -> Result<f64> {
    let q = p.finite().expect("finite p for two-block types");
    let n1 = schatten_norm(a1, p)?.powf(q);
    let n2 = schatten_norm(a2, p)?.powf(q);
    Ok(n1 / (n1 + n2))
}

/// Type-3 mixing map on `M_{I×J} ⊕ M_{J×I}`.
fn rect_mixer(i: usize, j: usize, alpha: f64) -> Result<MatrixMap> {
    let shape = BlockShape::new(vec![(i, j), (j, i)])?;
    let out = shape.clone();
    Ok(MatrixMap::new(shape.clone(), shape, move |z| {
        let (z1, z2) = (&z.parts[0], &z.parts[1]);
        let w = &z1.scale_real(alpha) + &z2.transpose().scale_real(1.0 - alpha);
        let wt = w.transpose();
        BlockOperator::new(out.clone(), vec![w, wt], z.p).expect("rect blocks")
    }))
}

struct SpinProjector {
    basis: Vec<CMatrix>,
    norms: Vec<f64>,
    dim: usize,
}

impl SpinProjector {
    fn coefficients(&self, x: &CMatrix) -> Vec<C64> {
        hs_coefficients(&self.basis, &self.norms, x)
    }

    fn combine(&self, c: &[C64]) -> CMatrix {
        hs_combine(&self.basis, c, self.dim, self.dim)
    }

    // Q then σ: the top word is last in the F_N basis
    fn sigma_of(&self, mut c: Vec<C64>) -> Vec<C64> {
        if let Some(last) = c.last_mut() {
            *last = -*last;
        }
        c
    }
}

/// Type-5 map on `M_{2^N} ⊕ M_{2^N}` with twist `v`.
fn spin_even_mixer(spins: &SpinSystem, v: &CMatrix, alpha: f64, tol: &Tolerances) -> Result<MatrixMap> {
    let f = spins.f_space();
    let norms = check_orthogonal(&f.basis, tol)?;
    let sv = f.sigma(v, tol)?;
    let d = spins.dim();
    let proj = SpinProjector {
        basis: f.basis.clone(),
        norms,
        dim: d,
    };
    let shape = BlockShape::new(vec![(d, d), (d, d)])?;
    let out = shape.clone();
    let (vd, svd) = (v.adjoint(), sv.adjoint());
    let v = v.clone();
    Ok(MatrixMap::new(shape.clone(), shape, move |z| {
        let c1 = proj.coefficients(&(&vd * &z.parts[0]));
        let c2 = proj.coefficients(&(&svd * &z.parts[1]));
        let s1 = proj.sigma_of(c1.clone());
        let s2 = proj.sigma_of(c2.clone());
        let first: Vec<C64> = c1.iter().zip(&s2).map(|(a, b)| a * alpha + b * (1.0 - alpha)).collect();
        let second: Vec<C64> = s1.iter().zip(&c2).map(|(a, b)| a * alpha + b * (1.0 - alpha)).collect();
        let parts = vec![&v * &proj.combine(&first), &sv * &proj.combine(&second)];
        BlockOperator::new(out.clone(), parts, z.p).expect("spin blocks")
    }))
}

/// Type-6 map `z ↦ v·R(v^*z)` on `M_{2^N}`.
fn spin_odd_map(spins: &SpinSystem, v: &CMatrix, tol: &Tolerances) -> Result<MatrixMap> {
    let r = hs_projection(&spins.e_space().basis, tol)?;
    let (v, vd) = (v.clone(), v.adjoint());
    let d = spins.dim();
    Ok(MatrixMap::new(BlockShape::square(d), BlockShape::square(d), move |z| {
        let y = r.apply(&BlockOperator::single(&vd * &z.parts[0], z.p)).expect("square");
        BlockOperator::single(&v * &y.parts[0], z.p)
    }))
}

/// The positive contractive projection onto `build_type(spec)`.
pub fn projection_for(spec: &TypeSpec, tol: &Tolerances) -> Result<MatrixMap> {
    if spec.kind == TypeKind::AFHilbert {
        return Err(LabError::Unsupported(
            "no positive contractive projection exists (type 4)".into(),
        ));
    }
    spec.validate(tol)?;
    let p = if spec.p.is_inf() {
        if !spec.projection_is_p_independent() {
            return Err(LabError::Unsupported(format!(
                "the {:?} projection is not defined at p = inf for this factor",
                spec.kind
            )));
        }
        // the scalar-factor projection does not depend on the exponent
        PIndex::TWO
    } else {
        spec.p
    };
    let a = spec.a.clone().expect("validated");
    match spec.kind {
        TypeKind::Sym | TypeKind::Antisym => {
            let o = spec.o.as_ref().expect("validated");
            let t = p_twisted(o, spec.kind == TypeKind::Sym, tol)?;
            tensor_slice(&t, &[a], p, tol)
        }
        TypeKind::Rect => {
            let (i, j) = (spec.i.expect("validated"), spec.j.expect("validated"));
            match &spec.a2 {
                Some(a2) => {
                    let t = rect_mixer(i, j, alpha(&a, a2, p)?)?;
                    tensor_slice(&t, &[a, a2.clone()], p, tol)
                }
                None => tensor_slice(&MatrixMap::identity(BlockShape::single(i, j)), &[a], p, tol),
            }
        }
        TypeKind::SpinEven => {
            let spins = SpinSystem::new(spec.n.expect("validated"))?;
            let a2 = spec.a2.clone().expect("validated");
            let t = spin_even_mixer(&spins, spec.v.as_ref().expect("validated"), alpha(&a, &a2, p)?, tol)?;
            tensor_slice(&t, &[a, a2], p, tol)
        }
        TypeKind::SpinOdd => {
            let spins = SpinSystem::new(spec.n.expect("validated"))?;
            let t = spin_odd_map(&spins, spec.v.as_ref().expect("validated"), tol)?;
            tensor_slice(&t, &[a], p, tol)
        }
        TypeKind::AFHilbert => unreachable!(),
    }
}

/// `Q(y) = V^*·P(V·y·U^*)·U` on the embedded form of `P`.
pub fn transport(p: &MatrixMap, w: &EquivWitness, tol: &Tolerances) -> Result<MatrixMap> {
    w.validate(tol)?;
    let flat = p.flatten();
    let (r, c) = p.shape_in.embedded();
    if p.shape_out.embedded() != (r, c) {
        return domain_err("transport needs a map with matching input and output shapes");
    }
    if w.v.rows() != r || w.u.rows() != c {
        return domain_err(format!(
            "witness V {:?}, U {:?} does not fit an ambient of shape {:?}",
            w.v.shape(),
            w.u.shape(),
            (r, c)
        ));
    }
    let shape = BlockShape::single(w.v.cols(), w.u.cols());
    let (u, ud, v, vd) = (w.u.clone(), w.u.adjoint(), w.v.clone(), w.v.adjoint());
    Ok(MatrixMap::new(shape.clone(), shape, move |y| {
        let x = &(&v * &y.parts[0]) * &ud;
        let px = flat.apply(&BlockOperator::single(x, y.p)).expect("embedded shape");
        BlockOperator::single(&(&vd * &px.parts[0]) * &u, y.p)
    }))
}

fn block_power(h: &BlockOperator, r: f64, tol: &Tolerances) -> Result<Vec<CMatrix>> {
    h.parts.iter().map(|m| m.pd_power(r, tol)).collect()
}

/// `V_p(y) = h^β·P2(h^{−β}·y·h^{−β})·h^β` with `β = 1/p − 1/2`.
pub fn v_p_bridge(p2: &MatrixMap, h: &BlockOperator, p: PIndex, tol: &Tolerances) -> Result<MatrixMap> {
    if p2.shape_in != p2.shape_out || !p2.shape_in.is_square_blocks() {
        return domain_err("V_p needs a projection on a square-block ambient");
    }
    if h.shape != p2.shape_in {
        return domain_err("h does not live in the ambient of P2");
    }
    for m in &h.parts {
        if !m.is_hermitian(tol) || m.min_eigenvalue_hermitian_part()? <= tol.rank_cut * m.max_abs() {
            return domain_err("h must be positive definite");
        }
    }
    if !tol.close_scalar(h.frobenius_norm(), 1.0) {
        return domain_err("h must have unit Hilbert-Schmidt norm");
    }
    let ph = p2.apply(h)?;
    if !ph.close(h, tol) {
        return domain_err("P2 must fix h");
    }
    let beta = p.reciprocal() - 0.5;
    let hb = block_power(h, beta, tol)?;
    let hmb = block_power(h, -beta, tol)?;
    let act = p2.clone();
    let shape = p2.shape_in.clone();
    let sh = shape.clone();
    Ok(MatrixMap::new(shape.clone(), shape, move |y| {
        let inner: Vec<CMatrix> = y.parts.iter().zip(&hmb).map(|(m, g)| &(g * m) * g).collect();
        let z = act
            .apply(&BlockOperator::new(sh.clone(), inner, y.p).expect("same blocks"))
            .expect("same blocks");
        let outer = z.parts.iter().zip(&hb).map(|(m, g)| &(g * m) * g).collect();
        BlockOperator::new(sh.clone(), outer, y.p).expect("same blocks")
    }))
}

/// `x ↦ Σ_α P_α(s_α·x·s_α)` for maps on consecutive diagonal corners.
pub fn assemble_disjoint(parts: &[MatrixMap]) -> Result<MatrixMap> {
    let flats: Vec<MatrixMap> = parts.iter().map(|m| m.flatten()).collect();
    let mut corners = Vec::with_capacity(flats.len());
    let (mut r0, mut c0) = (0, 0);
    for (m, f) in parts.iter().zip(&flats) {
        let (r, c) = f.shape_in.blocks[0];
        if m.shape_in != m.shape_out {
            return domain_err("assembled maps must be endomorphisms");
        }
        corners.push((r0, c0, r, c));
        r0 += r;
        c0 += c;
    }
    let shape = BlockShape::single(r0, c0);
    Ok(MatrixMap::new(shape.clone(), shape, move |x| {
        let mut out = CMatrix::zeros(r0, c0);
        for (f, &(i, j, r, c)) in flats.iter().zip(&corners) {
            let xa = x.parts[0].submatrix(i, j, r, c);
            let ya = f.apply(&BlockOperator::single(xa, x.p)).expect("corner shape");
            out.set_block(i, j, &ya.parts[0]);
        }
        BlockOperator::single(out, x.p)
    }))
}

/// Norming map of a p-direct sum: `N_p(x)_b = V_bS_b^{p−1}U_b^*/‖x‖_p^{p−2}`.
pub fn block_n_map(x: &BlockOperator, p: PIndex, tol: &Tolerances) -> Result<BlockOperator> {
    let q = match p {
        PIndex::Finite(q) if q > 1.0 => q,
        _ => return domain_err(format!("N_p needs 1 < p < inf, got {p}")),
    };
    let total = x.norm(p)?;
    let adj = x.shape.adjoint();
    if total < tol.eq_abs {
        return Ok(BlockOperator::zeros(&adj, p.conjugate()));
    }
    let mut parts = Vec::with_capacity(x.parts.len());
    for m in &x.parts {
        let svd = m.svd()?;
        let r = svd.rank(tol.rank_cut);
        let keep: Vec<usize> = (0..r).collect();
        let s: Vec<f64> = svd.s[..r].iter().map(|s| s.powf(q - 1.0)).collect();
        let y = &(&svd.v.select_columns(&keep) * &CMatrix::diag_real(&s)) * &svd.u.select_columns(&keep).adjoint();
        parts.push(if r == 0 { CMatrix::zeros(m.cols(), m.rows()) } else { y });
    }
    let op = BlockOperator::new(adj, parts, p.conjugate())?;
    Ok(op.scale_real(total.powf(2.0 - q)))
}

/// Pass thresholds for [`verify_projection`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub idempotency: f64,
    pub positivity: f64,
    pub contractivity: f64,
    pub range: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            idempotency: 1e-10,
            positivity: 1e-9,
            contractivity: 1e-9,
            range: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub seed: u64,
    pub samples: usize,
    pub p_list: Vec<PIndex>,
    pub tolerances: Tolerances,
    pub thresholds: Thresholds,
    /// Stream label; distinct cases draw independent samples.
    pub case: String,
    pub check_positivity: bool,
}

impl ProbeConfig {
    pub fn new(case: impl Into<String>, seed: u64, samples: usize, p_list: Vec<PIndex>) -> Self {
        Self {
            seed,
            samples,
            p_list,
            tolerances: Tolerances::default(),
            thresholds: Thresholds::default(),
            case: case.into(),
            check_positivity: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractivityEntry {
    pub p: PIndex,
    pub max_ratio: f64,
    pub excess: f64,
    pub samples: usize,
    /// `‖P^*(1)‖_∞`, a lower bound for `‖P‖_{1→1}` (exact for positive maps).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_unit_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityCounterexample {
    pub sample: usize,
    pub input: BlockOperator,
    pub image: BlockOperator,
    pub min_eigenvalue: f64,
    pub anti_hermitian_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub case: String,
    pub seed: u64,
    pub samples: usize,
    pub idempotency_defect: f64,
    /// Whether every matrix unit was probed (exact composition).
    pub idempotency_exact: bool,
    /// `None` when the ambient blocks are not square.
    pub positivity_defect: Option<f64>,
    pub positivity_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<PositivityCounterexample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choi_min_eigenvalue: Option<f64>,
    pub contractivity: Vec<ContractivityEntry>,
    pub contractivity_excess: f64,
    pub range_distance: f64,
    pub thresholds: Thresholds,
    pub failures: Vec<String>,
    pub passed: bool,
}

fn positivity_defect_of(y: &BlockOperator) -> Result<(f64, f64, f64)> {
    let mut worst = (0.0f64, f64::INFINITY, 0.0f64);
    for m in &y.parts {
        let anti = (m - &m.adjoint()).scale_real(0.5).frobenius_norm();
        let lmin = m.min_eigenvalue_hermitian_part()?;
        let d = anti + (-lmin).max(0.0);
        if d > worst.0 || worst.1.is_infinite() {
            worst = (d.max(worst.0), lmin.min(worst.1), anti.max(worst.2));
        }
    }
    Ok(worst)
}

fn random_psd_input<R: Rng + ?Sized>(rng: &mut R, shape: &BlockShape, p: PIndex, k: usize) -> BlockOperator {
    let nb = shape.len();
    let only = rng.random_range(0..nb);
    let mut parts = Vec::with_capacity(nb);
    let mut total = 0.0;
    for (b, &(n, _)) in shape.blocks.iter().enumerate() {
        let (rank, weight) = if k % 4 == 0 {
            (1, if b == only { 1.0 } else { 0.0 })
        } else {
            (rng.random_range(1..=n), real_normal(rng).abs() + 1e-3)
        };
        total += weight;
        parts.push(density(rng, n, rank).scale_real(weight));
    }
    BlockOperator::new(shape.clone(), parts, p)
        .expect("square blocks")
        .scale_real(1.0 / total)
}

fn contraction_input<R: Rng + ?Sized>(rng: &mut R, x: &Subspace, shape: &BlockShape, p: PIndex, k: usize) -> BlockOperator {
    let fam = k % 6;
    let mut parts = Vec::with_capacity(shape.len());
    for &(r, c) in &shape.blocks {
        let m = match fam {
            0 => ginibre(rng, r, c),
            1 => {
                let u = ginibre(rng, r, 1);
                let v = ginibre(rng, 1, c);
                &u * &v
            }
            2 => {
                let n = r.max(c);
                haar_unitary(rng, n).submatrix(0, 0, r, c)
            }
            3 if r == c => {
                let rank = rng.random_range(1..=r);
                density(rng, r, rank)
            }
            _ => ginibre(rng, r, c),
        };
        // uneven block weights probe the mixing in multi-block maps
        let w = (2.0 * real_normal(rng)).exp();
        parts.push(m.scale_real(w));
    }
    let mut out = BlockOperator::new(shape.clone(), parts, p).expect("shape");
    if fam >= 4 && x.dim() > 0 {
        let e = x.random_element(rng).with_p(p);
        let s = e.frobenius_norm().max(1e-300);
        let eps = if fam == 4 { 0.3 } else { 1e-3 };
        out = e.scale_real(1.0 / s).add(&out.scale_real(eps / out.frobenius_norm().max(1e-300)));
    }
    out
}

fn identity_block(shape: &BlockShape, p: PIndex) -> BlockOperator {
    BlockOperator::from_fn(shape, p, |_, i, j| if i == j { ONE } else { ZERO })
}

fn power_iteration(
    map: &MatrixMap,
    adj: &MatrixMap,
    p: PIndex,
    start: BlockOperator,
    steps: usize,
    tol: &Tolerances,
) -> Result<f64> {
    let q = p.conjugate();
    let mut x = start;
    let mut best = 0.0f64;
    for _ in 0..steps {
        let nx = x.norm(p)?;
        if nx <= tol.eq_abs {
            break;
        }
        x = x.scale_real(1.0 / nx);
        let y = map.apply(&x)?;
        let ny = y.norm(p)?;
        best = best.max(ny);
        if ny <= tol.eq_abs {
            break;
        }
        let g = block_n_map(&y, p, tol)?;
        let z = adj.apply(&g)?;
        x = block_n_map(&z, q, tol)?.with_p(p);
    }
    Ok(best)
}

fn choi_min_eigenvalue(map: &MatrixMap, tol: &Tolerances) -> Result<Option<f64>> {
    let Some(m) = map.materialized() else {
        return Ok(None);
    };
    let mut lmin = f64::INFINITY;
    let mut in_off = 0;
    for &(n, _) in &map.shape_in.blocks {
        let mut out_off = 0;
        for &(r, _) in &map.shape_out.blocks {
            if n * r > 256 {
                return Ok(None);
            }
            let c = CMatrix::from_fn(n * r, n * r, |row, col| {
                let (i, k) = (row / r, row % r);
                let (j, l) = (col / r, col % r);
                m[(out_off + k * r + l, in_off + i * n + j)]
            });
            lmin = lmin.min(c.min_eigenvalue_hermitian_part()?);
            out_off += r * r;
        }
        in_off += n * n;
    }
    let _ = tol;
    Ok(Some(lmin))
}

struct Probe {
    idem: f64,
    pos: Option<(f64, f64, f64, BlockOperator, BlockOperator)>,
    ratios: Vec<f64>,
}

/// Sampled (and, where materialized, exact) checks of the projection contract.
pub fn verify_projection(map: &MatrixMap, x: &Subspace, cfg: &ProbeConfig) -> Result<ProjectionReport> {
    if map.shape_in != map.shape_out || map.shape_in != x.shape {
        return shape_err("projection and subspace live on different ambients");
    }
    if cfg.samples == 0 {
        return domain_err("at least one sample is required");
    }
    let tol = &cfg.tolerances;
    let shape = &map.shape_in;
    let square = shape.is_square_blocks();
    let do_pos = square && cfg.check_positivity;
    let own_p = x.p;

    let probes: Vec<Probe> = (0..cfg.samples)
        .into_par_iter()
        .map(|k| -> Result<Probe> {
            let mut rng = case_rng(cfg.seed, &cfg.case, k as u64);
            let g = gaussian_block(&mut rng, shape, own_p);
            let pg = map.apply(&g)?;
            let idem = pg.distance(&map.apply(&pg)?) / g.frobenius_norm();
            let pos = if do_pos {
                let inp = random_psd_input(&mut rng, shape, own_p, k);
                let img = map.apply(&inp)?;
                let (d, lmin, anti) = positivity_defect_of(&img)?;
                Some((d, lmin, anti, inp, img))
            } else {
                None
            };
            let inp = contraction_input(&mut rng, x, shape, own_p, k);
            let img = map.apply(&inp)?;
            let ratios = cfg
                .p_list
                .iter()
                .map(|&p| Ok(img.norm(p)? / inp.norm(p)?))
                .collect::<Result<Vec<f64>>>()?;
            Ok(Probe { idem, pos, ratios })
        })
        .collect::<Result<_>>()?;

    let mut idempotency = probes.iter().map(|p| p.idem).fold(0.0, f64::max);
    let exact = map.is_materializable();
    if exact {
        let n = shape.vec_dim();
        let worst = (0..n)
            .into_par_iter()
            .map(|u| -> Result<f64> {
                let pe = map.apply(&BlockOperator::unit(shape, own_p, u))?;
                Ok(pe.distance(&map.apply(&pe)?))
            })
            .collect::<Result<Vec<f64>>>()?;
        idempotency = worst.into_iter().fold(idempotency, f64::max);
    }

    let mut counterexample = None;
    let positivity_defect = if do_pos {
        let mut best: Option<(usize, &Probe)> = None;
        for (k, pr) in probes.iter().enumerate() {
            let d = pr.pos.as_ref().map_or(0.0, |t| t.0);
            if best.is_none_or(|(_, b)| d > b.pos.as_ref().map_or(0.0, |t| t.0)) {
                best = Some((k, pr));
            }
        }
        let (k, pr) = best.expect("at least one sample");
        let (d, lmin, anti, inp, img) = pr.pos.clone().expect("positivity probed");
        if d > cfg.thresholds.positivity {
            counterexample = Some(PositivityCounterexample {
                sample: k,
                input: inp,
                image: img,
                min_eigenvalue: lmin,
                anti_hermitian_norm: anti,
            });
        }
        Some(d)
    } else {
        None
    };

    let adj = if exact { Some(map.adjoint_map()) } else { None };
    let mut contractivity = Vec::with_capacity(cfg.p_list.len());
    for (pi, &p) in cfg.p_list.iter().enumerate() {
        let mut max_ratio = probes.iter().map(|pr| pr.ratios[pi]).fold(0.0, f64::max);
        let mut count = probes.len();
        if square {
            let one = identity_block(shape, own_p);
            max_ratio = max_ratio.max(map.apply(&one)?.norm(p)? / one.norm(p)?);
            count += 1;
        }
        let mut dual_unit_norm = None;
        if p == PIndex::ONE && square {
            let adj_map = adj.clone().unwrap_or_else(|| map.adjoint_map());
            let one = identity_block(&adj_map.shape_in, own_p);
            let bound = adj_map.apply(&one)?.norm(PIndex::Inf)?;
            dual_unit_norm = Some(bound);
            max_ratio = max_ratio.max(bound);
        }
        if let (Some(adj), PIndex::Finite(q)) = (&adj, p) {
            if q > 1.0 && shape.vec_dim() <= 256 {
                for s in 0..3u64 {
                    let mut rng = case_rng(cfg.seed, &format!("{}/power", cfg.case), (pi as u64) * 8 + s);
                    let start = gaussian_block(&mut rng, shape, own_p);
                    max_ratio = max_ratio.max(power_iteration(map, adj, p, start, 12, tol)?);
                    count += 1;
                }
            }
        }
        contractivity.push(ContractivityEntry {
            p,
            max_ratio,
            excess: (max_ratio - 1.0).max(0.0),
            samples: count,
            dual_unit_norm,
        });
    }
    let contractivity_excess = contractivity.iter().map(|c| c.excess).fold(0.0, f64::max);

    let range = map.range_subspace(own_p, x.dim() + 4, cfg.seed ^ 0x9E37_79B9, tol)?;
    let range_distance = x.range_distance(&range)?;
    let choi = if square { choi_min_eigenvalue(map, tol)? } else { None };

    let th = cfg.thresholds;
    let mut failures = Vec::new();
    if idempotency > th.idempotency {
        failures.push(format!("idempotency defect {idempotency:e}"));
    }
    if let Some(d) = positivity_defect {
        if d > th.positivity {
            failures.push(format!("positivity defect {d:e}"));
        }
    }
    for c in &contractivity {
        if c.excess > th.contractivity {
            failures.push(format!("contractivity excess {:e} at p = {}", c.excess, c.p));
        }
    }
    if range_distance > th.range {
        failures.push(format!("range distance {range_distance:e}"));
    }
    Ok(ProjectionReport {
        case: cfg.case.clone(),
        seed: cfg.seed,
        samples: cfg.samples,
        idempotency_defect: idempotency,
        idempotency_exact: exact,
        positivity_defect,
        positivity_samples: if do_pos { cfg.samples } else { 0 },
        counterexample,
        choi_min_eigenvalue: choi,
        contractivity,
        contractivity_excess,
        range_distance,
        thresholds: th,
        passed: failures.is_empty(),
        failures,
    })
}

/// Lower bound `‖P‖_{p→p} ≥ ‖P(x)‖_p/‖x‖_p` maximized over the given inputs.
pub fn norm_lower_bound(map: &MatrixMap, inputs: &[BlockOperator], p: PIndex) -> Result<f64> {
    let mut best = 0.0f64;
    for x in inputs {
        let nx = x.norm(p)?;
        if nx > 0.0 {
            best = best.max(map.apply(x)?.norm(p)? / nx);
        }
    }
    Ok(best)
}

/// `lp_norm` of block norms, exposed for report consumers.
pub fn direct_sum_norm(block_norms: &[f64], p: PIndex) -> f64 {
    lp_norm(block_norms, p)
}
