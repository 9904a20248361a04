//! Antisymmetric Fock space `Λ_N` with creation operators, the graded
//! isometries `φ_m`, and the even/odd spaces `AH(N)`, `BH(N)`, `DAH(N)`.
//!
//! Basis vectors are subsets of `{1..N}` stored as bitmasks (bit `k−1` for
//! element `k`), ordered by cardinality and then lexicographically on the
//! sorted elements.

use serde::{Deserialize, Serialize};

use crate::error::{domain_err, LabError, Result};
use crate::linalg::{CMatrix, Tolerances, C64, ONE, ZERO};
use crate::schatten::{BlockShape, PIndex};
use crate::spaces::Subspace;

/// Largest `N` for which full `2^N`-dimensional constructions are allowed.
pub const MAX_N: usize = 6;

pub fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: usize = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

fn elements(mask: u32) -> Vec<usize> {
    (0..32).filter(|b| mask & (1 << b) != 0).map(|b| b + 1).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockSpace {
    n: usize,
    basis: Vec<u32>,
    index: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct FockWire {
    #[serde(rename = "N")]
    n: usize,
    ordering: String,
}

impl Serialize for FockSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FockWire {
            n: self.n,
            ordering: "card-lex".into(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FockSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let w = FockWire::deserialize(d)?;
        if w.ordering != "card-lex" {
            return Err(D::Error::custom(format!("unknown ordering {:?}", w.ordering)));
        }
        FockSpace::new(w.n).map_err(D::Error::custom)
    }
}

/// Restriction `x_{k,m}` of a creation operator between graded slices.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedMap {
    pub m: usize,
    pub matrix: CMatrix,
}

/// Outcome of the type-4 rank obstruction check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Type4Rank {
    pub observed_rank: usize,
    pub slice_dim: usize,
}

/// The three appendix spaces with their ordered bases.
#[derive(Debug, Clone)]
pub struct AppendixSpaces {
    pub ah: Subspace,
    pub bh: Subspace,
    pub dah: Subspace,
}

impl FockSpace {
    pub fn new(n: usize) -> Result<Self> {
        if !(2..=MAX_N).contains(&n) {
            return domain_err(format!("Fock space needs 2 <= N <= {MAX_N}, got {n}"));
        }
        let mut basis: Vec<u32> = (0..(1u32 << n)).collect();
        basis.sort_by_key(|&m| (m.count_ones(), elements(m)));
        let mut index = vec![0; 1 << n];
        for (i, &m) in basis.iter().enumerate() {
            index[m as usize] = i;
        }
        Ok(Self { n, basis, index })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Basis subsets as sorted element lists.
    pub fn basis_subsets(&self) -> Vec<Vec<usize>> {
        self.basis.iter().map(|&m| elements(m)).collect()
    }

    pub fn masks(&self) -> &[u32] {
        &self.basis
    }

    pub fn index_of(&self, mask: u32) -> usize {
        self.index[mask as usize]
    }

    /// `(offset, length)` of the cardinality-`m` slice.
    pub fn slice(&self, m: usize) -> (usize, usize) {
        let offset = (0..m).map(|j| binom(self.n, j)).sum();
        (offset, binom(self.n, m))
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.n {
            return domain_err(format!("creation index {k} outside 1..={}", self.n));
        }
        Ok(())
    }

    /// `c_k`: `e_S ↦ (−1)^{|{i∈S: i<k}|} e_{S∪{k}}`, zero when `k ∈ S`.
    pub fn creation(&self, k: usize) -> Result<CMatrix> {
        self.check_k(k)?;
        let bit = 1u32 << (k - 1);
        let below = bit - 1;
        let dim = self.dim();
        let mut c = CMatrix::zeros(dim, dim);
        for (col, &s) in self.basis.iter().enumerate() {
            if s & bit != 0 {
                continue;
            }
            let sign = if (s & below).count_ones() % 2 == 0 { ONE } else { -ONE };
            c[(self.index_of(s | bit), col)] = sign;
        }
        Ok(c)
    }

    pub fn restricted_creation(&self, k: usize, m: usize) -> Result<GradedMap> {
        self.check_k(k)?;
        if m == 0 || m > self.n {
            return domain_err(format!("grade {m} outside 1..={}", self.n));
        }
        let (ro, rl) = self.slice(m);
        let (co, cl) = self.slice(m - 1);
        let c = self.creation(k)?;
        Ok(GradedMap {
            m,
            matrix: c.submatrix(ro, co, rl, cl),
        })
    }

    /// `φ_m(t) = Σ_k t_k x_{k,m} / binom(N−1, m−1)^{1/p}`.
    pub fn phi_m(&self, m: usize, t: &[C64], p: PIndex) -> Result<CMatrix> {
        let PIndex::Finite(p) = p else {
            return domain_err("phi_m is defined for finite p only");
        };
        if t.len() != self.n {
            return domain_err(format!("phi_m needs {} coefficients, got {}", self.n, t.len()));
        }
        if m == 0 || m > self.n {
            return domain_err(format!("grade {m} outside 1..={}", self.n));
        }
        let (_, rl) = self.slice(m);
        let (_, cl) = self.slice(m - 1);
        let mut out = CMatrix::zeros(rl, cl);
        for (k, &tk) in t.iter().enumerate() {
            if tk != ZERO {
                out.axpy(tk, &self.restricted_creation(k + 1, m)?.matrix);
            }
        }
        let scale = (binom(self.n - 1, m - 1) as f64).powf(-1.0 / p);
        Ok(out.scale_real(scale))
    }

    /// Rank of `φ_m(t)` against the dimension of its domain slice.
    pub fn type4_rank_check(&self, m: usize, t: &[C64], tol: &Tolerances) -> Result<Type4Rank> {
        let z = self.phi_m(m, t, PIndex::TWO)?;
        Ok(Type4Rank {
            observed_rank: z.rank(tol.rank_cut)?,
            slice_dim: binom(self.n, m - 1),
        })
    }

    /// Indices of even-cardinality basis vectors, then odd ones, each in basis order.
    pub fn parity_indices(&self) -> (Vec<usize>, Vec<usize>) {
        let even = (0..self.dim())
            .filter(|&i| self.basis[i].count_ones() % 2 == 0)
            .collect();
        let odd = (0..self.dim())
            .filter(|&i| self.basis[i].count_ones() % 2 == 1)
            .collect();
        (even, odd)
    }

    /// Permutation matrix taking basis order to the even-then-odd order.
    pub fn parity_permutation(&self) -> CMatrix {
        let (even, odd) = self.parity_indices();
        let order: Vec<usize> = even.into_iter().chain(odd).collect();
        CMatrix::from_fn(self.dim(), self.dim(), |i, j| if order[i] == j { ONE } else { ZERO })
    }

    /// `x_k` and `x̃_k`: restrictions of `c_k` and `c_k^*` to `Λ^e → Λ^o`.
    pub fn ah_generators(&self, k: usize) -> Result<(CMatrix, CMatrix)> {
        let (even, odd) = self.parity_indices();
        let c = self.creation(k)?;
        Ok((c.select(&odd, &even), c.adjoint().select(&odd, &even)))
    }

    /// `AH(N)` with basis `x_1..x_N, x̃_1..x̃_N`; `BH(N)` with the adjoint basis;
    /// `DAH(N)` with basis `x_2..x_N, x̃_2..x̃_N, x_1 + x̃_1`.
    pub fn ah_spaces(&self, p: PIndex, tol: &Tolerances) -> Result<AppendixSpaces> {
        let mut xs = Vec::with_capacity(self.n);
        let mut xt = Vec::with_capacity(self.n);
        for k in 1..=self.n {
            let (a, b) = self.ah_generators(k)?;
            xs.push(a);
            xt.push(b);
        }
        let ah: Vec<CMatrix> = xs.iter().chain(&xt).cloned().collect();
        let bh: Vec<CMatrix> = ah.iter().map(|x| x.adjoint()).collect();
        let mut dah: Vec<CMatrix> = xs[1..].iter().chain(&xt[1..]).cloned().collect();
        dah.push(&xs[0] + &xt[0]);
        let half = self.dim() / 2;
        let shape = BlockShape::square(half);
        Ok(AppendixSpaces {
            ah: Subspace::from_matrices(shape.clone(), ah, p, tol)?,
            bh: Subspace::from_matrices(shape.clone(), bh, p, tol)?,
            dah: Subspace::from_matrices(shape, dah, p, tol)?,
        })
    }

    /// `T(x_k) = x̃_k^*`, `T(x̃_k) = x_k^*`, extended linearly.
    pub fn t_map(&self, spaces: &AppendixSpaces, x: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
        let coeffs = spaces
            .ah
            .matrix_coefficients(x, tol)
            .map_err(|e| LabError::Domain(format!("T is defined on AH(N) only: {e}")))?;
        let n = self.n;
        let bh = spaces.bh.basis_matrices();
        let mut out = CMatrix::zeros(x.cols(), x.rows());
        for k in 0..n {
            // x_k ↦ x̃_k^* (BH index n+k); x̃_k ↦ x_k^* (BH index k).
            out.axpy(coeffs[k], &bh[n + k]);
            out.axpy(coeffs[n + k], &bh[k]);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_and_dimensions() {
        let f = FockSpace::new(3).unwrap();
        assert_eq!(f.dim(), 8);
        assert_eq!(
            f.basis_subsets(),
            vec![
                vec![],
                vec![1],
                vec![2],
                vec![3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3],
                vec![1, 2, 3]
            ]
        );
        for m in 0..=3 {
            assert_eq!(f.slice(m).1, binom(3, m));
        }
        assert!(FockSpace::new(1).is_err());
        assert!(FockSpace::new(7).is_err());
    }

    #[test]
    fn creation_signs_n2() {
        let f = FockSpace::new(2).unwrap();
        let c1 = f.creation(1).unwrap();
        let c2 = f.creation(2).unwrap();
        // basis: {}, {1}, {2}, {1,2}
        assert_eq!(c1[(1, 0)], ONE);
        assert!((0..4).all(|i| c1[(i, 1)] == ZERO));
        assert_eq!(c2[(3, 1)], -ONE);
        assert_eq!(c1[(3, 2)], ONE);
        assert!(f.creation(3).is_err());
    }

    #[test]
    fn restricted_creation_n2() {
        let f = FockSpace::new(2).unwrap();
        let g = f.restricted_creation(1, 1).unwrap();
        assert_eq!(g.matrix.shape(), (2, 1));
        assert_eq!(g.matrix[(0, 0)], ONE);
        assert_eq!(g.matrix[(1, 0)], ZERO);
        assert!(f.restricted_creation(1, 0).is_err());
    }

    #[test]
    fn phi_small() {
        let f = FockSpace::new(2).unwrap();
        let z = f.phi_m(1, &[ZERO, ZERO], PIndex::Finite(3.0)).unwrap();
        assert_eq!(z, CMatrix::zeros(2, 1));
        let z = f.phi_m(1, &[ONE, ZERO], PIndex::Finite(3.0)).unwrap();
        assert_eq!(z, CMatrix::from_real_rows(&[&[1.0], &[0.0]]));
        assert!(f.phi_m(1, &[ONE, ZERO], PIndex::Inf).is_err());
    }

    #[test]
    fn rank_single_direction() {
        let tol = Tolerances::default();
        for n in 2..=5 {
            let f = FockSpace::new(n).unwrap();
            let mut t = vec![ZERO; n];
            t[0] = ONE;
            for m in 1..=n {
                let r = f.type4_rank_check(m, &t, &tol).unwrap();
                assert_eq!(r.observed_rank, binom(n - 1, m - 1));
                assert_eq!(r.slice_dim, binom(n, m - 1));
            }
        }
    }

    #[test]
    fn appendix_dimensions() {
        let tol = Tolerances::default();
        let f = FockSpace::new(2).unwrap();
        let s = f.ah_spaces(PIndex::TWO, &tol).unwrap();
        assert_eq!(s.ah.dim(), 4);
        assert_eq!(s.ah.shape, BlockShape::square(2));
        let f = FockSpace::new(3).unwrap();
        let s = f.ah_spaces(PIndex::TWO, &tol).unwrap();
        assert_eq!(s.dah.dim(), 5);
        assert_eq!(s.bh.dim(), 6);
    }

    #[test]
    fn t_on_generators() {
        let tol = Tolerances::default();
        let f = FockSpace::new(3).unwrap();
        let s = f.ah_spaces(PIndex::TWO, &tol).unwrap();
        let (x1, xt1) = f.ah_generators(1).unwrap();
        assert!(tol.close(&f.t_map(&s, &x1, &tol).unwrap(), &xt1.adjoint()));
        assert!(tol.close(&f.t_map(&s, &xt1, &tol).unwrap(), &x1.adjoint()));
        let outside = CMatrix::unit(4, 4, 0, 0);
        assert!(matches!(f.t_map(&s, &outside, &tol), Err(LabError::Domain(_))));
    }

    #[test]
    fn fock_json() {
        let f = FockSpace::new(3).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"N":3,"ordering":"card-lex"}"#);
        assert_eq!(serde_json::from_str::<FockSpace>(&s).unwrap(), f);
    }
}
