//! Verification suites over parameter grids, and the space files consumed by
//! the command-line front end.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{LabError, Result};
use crate::fock::{binom, FockSpace};
use crate::linalg::{kron, CMatrix, Tolerances, C64};
use crate::projections::{
    assemble_disjoint, block_n_map, functional_projection, hs_projection, projection_for, transport,
    v_p_bridge, verify_projection, MatrixMap, ProbeConfig, ProjectionReport, Thresholds,
};
use crate::random::{case_rng, complex_normal, complex_vector, ginibre, haar_unitary};
use crate::schatten::{are_disjoint, n_map, pairing, schatten_norm, BlockOperator, BlockShape, PIndex};
use crate::spaces::{
    build_type, check_equivalence, disjoint_components, pullback_space, EquivWitness, Subspace, TypeKind,
    TypeSpec,
};
use crate::spin::{is_jc_triple, SpinSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub seed: u64,
    pub samples: usize,
    pub p_list: Vec<PIndex>,
    pub tolerances: Tolerances,
    #[serde(rename = "max_N")]
    pub max_n: usize,
    #[serde(rename = "max_I")]
    pub max_i: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 200,
            p_list: vec![
                PIndex::ONE,
                PIndex::Finite(1.5),
                PIndex::TWO,
                PIndex::Finite(3.0),
                PIndex::Inf,
            ],
            tolerances: Tolerances::default(),
            max_n: 5,
            max_i: 6,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(LabError::InvalidSpec("samples must be at least 1".into()));
        }
        if self.max_n > crate::fock::MAX_N {
            return Err(LabError::InvalidSpec(format!("max_N must be at most {}", crate::fock::MAX_N)));
        }
        if !(2..=crate::spaces::MAX_INDEX).contains(&self.max_i) {
            return Err(LabError::InvalidSpec("max_I must lie in 2..=8".into()));
        }
        if self.max_n < 2 {
            return Err(LabError::InvalidSpec("max_N must be at least 2".into()));
        }
        self.tolerances.validate()
    }

    fn finite_ps(&self) -> Vec<PIndex> {
        self.p_list.iter().copied().filter(|p| !p.is_inf()).collect()
    }

    fn probe(&self, case: &str, samples: usize, p_list: Vec<PIndex>) -> ProbeConfig {
        let mut c = ProbeConfig::new(case, self.seed, samples, p_list);
        c.tolerances = self.tolerances;
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteName {
    Fock,
    Spin,
    Catalog,
    Duality,
    Bridge,
    Impossibility,
    Appendix,
    All,
}

impl SuiteName {
    pub const EACH: [SuiteName; 7] = [
        SuiteName::Fock,
        SuiteName::Spin,
        SuiteName::Catalog,
        SuiteName::Duality,
        SuiteName::Bridge,
        SuiteName::Impossibility,
        SuiteName::Appendix,
    ];
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SuiteName::Fock => "fock",
            SuiteName::Spin => "spin",
            SuiteName::Catalog => "catalog",
            SuiteName::Duality => "duality",
            SuiteName::Bridge => "bridge",
            SuiteName::Impossibility => "impossibility",
            SuiteName::Appendix => "appendix",
            SuiteName::All => "all",
        };
        f.write_str(s)
    }
}

impl FromStr for SuiteName {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fock" => SuiteName::Fock,
            "spin" => SuiteName::Spin,
            "catalog" => SuiteName::Catalog,
            "duality" => SuiteName::Duality,
            "bridge" => SuiteName::Bridge,
            "impossibility" => SuiteName::Impossibility,
            "appendix" => SuiteName::Appendix,
            "all" => SuiteName::All,
            other => return Err(LabError::InvalidSpec(format!("unknown suite {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub id: String,
    pub passed: bool,
    pub failures: Vec<String>,
    pub details: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub config: SuiteConfig,
    pub cases: Vec<CaseReport>,
    pub failed: usize,
    pub passed: bool,
}

/// Accumulates checks and details for one case.
#[derive(Debug, Default)]
pub struct Outcome {
    failures: Vec<String>,
    details: Map<String, Value>,
}

impl Outcome {
    pub fn check(&mut self, ok: bool, what: impl Into<String>) -> bool {
        if !ok {
            self.failures.push(what.into());
        }
        ok
    }

    /// Record `value` and fail when it exceeds `limit`.
    pub fn bound(&mut self, key: &str, value: f64, limit: f64) {
        self.details.insert(key.into(), json!(value));
        if !(value <= limit) {
            self.failures.push(format!("{key} = {value:e} exceeds {limit:e}"));
        }
    }

    pub fn record(&mut self, key: &str, value: impl Serialize) {
        self.details.insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn report(&mut self, key: &str, r: &ProjectionReport) {
        for f in &r.failures {
            self.failures.push(format!("{key}: {f}"));
        }
        self.record(key, r);
    }

    pub fn failures(&self) -> &[String] {
        &self.failures
    }

    fn finish(self, id: String) -> CaseReport {
        CaseReport {
            id,
            passed: self.failures.is_empty(),
            failures: self.failures,
            details: Value::Object(self.details),
        }
    }
}

type CaseFn<'a> = Box<dyn Fn(&mut Outcome) -> Result<()> + Send + Sync + 'a>;

fn run_cases(cases: Vec<(String, CaseFn<'_>)>) -> Vec<CaseReport> {
    let mut out: Vec<CaseReport> = cases
        .into_par_iter()
        .map(|(id, f)| {
            let mut o = Outcome::default();
            if let Err(e) = f(&mut o) {
                o.failures.push(format!("error: {e}"));
            }
            o.finish(id)
        })
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

fn case<'a>(id: impl Into<String>, f: impl Fn(&mut Outcome) -> Result<()> + Send + Sync + 'a) -> (String, CaseFn<'a>) {
    (id.into(), Box::new(f))
}

pub fn run_suite(name: SuiteName, cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let cases = match name {
        SuiteName::All => SuiteName::EACH.iter().flat_map(|&s| suite_cases(s, cfg)).collect(),
        s => suite_cases(s, cfg),
    };
    let cases = run_cases(cases);
    let failed = cases.iter().filter(|c| !c.passed).count();
    Ok(SuiteReport {
        suite: name.to_string(),
        config: cfg.clone(),
        cases,
        failed,
        passed: failed == 0,
    })
}

fn suite_cases(name: SuiteName, cfg: &SuiteConfig) -> Vec<(String, CaseFn<'_>)> {
    let prefix = name.to_string();
    let cases = match name {
        SuiteName::Fock => fock_cases(cfg),
        SuiteName::Spin => spin_cases(cfg),
        SuiteName::Catalog => catalog_cases(cfg),
        SuiteName::Duality => duality_cases(cfg),
        SuiteName::Bridge => bridge_cases(cfg),
        SuiteName::Impossibility => impossibility_cases(cfg),
        SuiteName::Appendix => appendix_cases(cfg),
        SuiteName::All => Vec::new(),
    };
    cases.into_iter().map(|(id, f)| (format!("{prefix}/{id}"), f)).collect()
}

fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Largest relative deviation of `‖φ_m(t)‖_p` from `‖t‖_2` over `samples` directions.
pub fn phi_m_isometry_defect(fock: &FockSpace, m: usize, p: PIndex, samples: usize, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..samples {
        let mut rng = case_rng(seed, &format!("phi_m/{}/{m}/{p}", fock.n()), k as u64);
        let t = complex_vector(&mut rng, fock.n());
        let l2 = t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let z = fock.phi_m(m, &t, p)?;
        worst = worst.max(rel_dev(schatten_norm(&z, p)?, l2));
    }
    Ok(worst)
}

fn fock_cases(cfg: &SuiteConfig) -> Vec<(String, CaseFn<'_>)> {
    let mut out = Vec::new();
    for n in 2..=cfg.max_n {
        out.push(case(format!("phi_m_isometry/N{n}"), move |o: &mut Outcome| {
            let fock = FockSpace::new(n)?;
            for m in 1..=n {
                for p in cfg.finite_ps() {
                    let d = phi_m_isometry_defect(&fock, m, p, 100, cfg.seed)?;
                    o.bound(&format!("m{m}_p{p}"), d, 1e-9);
                }
            }
            Ok(())
        }));
        out.push(case(format!("car_relations/N{n}"), move |o: &mut Outcome| {
            let fock = FockSpace::new(n)?;
            let d = fock.dim();
            let mut worst = 0.0f64;
            for j in 1..=n {
                let cj = fock.creation(j)?;
                for k in 1..=n {
                    let ck = fock.creation(k)?;
                    let anti = &(&cj * &ck) + &(&ck * &cj);
                    worst = worst.max(anti.max_abs());
                    let mixed = &(&cj * &ck.adjoint()) + &(&ck.adjoint() * &cj);
                    let target = if j == k { CMatrix::identity(d) } else { CMatrix::zeros(d, d) };
                    worst = worst.max(mixed.distance(&target));
                }
            }
            o.bound("car_defect", worst, 1e-12);
            Ok(())
        }));
    }
    out
}

/// Generator axioms: self-adjoint unitaries that pairwise anticommute.
pub fn spin_axiom_defect(spins: &SpinSystem) -> Result<f64> {
    let d = spins.dim();
    let id = CMatrix::identity(d);
    let gens: Vec<CMatrix> = spins
        .labels()
        .iter()
        .map(|&j| spins.generator(j).cloned())
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for (a, x) in gens.iter().enumerate() {
        worst = worst.max(x.distance(&x.adjoint()));
        worst = worst.max((x * x).distance(&id));
        for y in &gens[a + 1..] {
            worst = worst.max((&(x * y) + &(y * x)).max_abs());
        }
    }
    let top = spins.extra_generator();
    worst = worst.max(top.distance(&top.adjoint())).max((&top * &top).distance(&id));
    for x in &gens {
        worst = worst.max((&(x * &top) + &(&top * x)).max_abs());
    }
    Ok(worst)
}

/// Worst `‖Q(x)‖_p/‖x‖_p − 1` over `samples` inputs of mixed structure.
pub fn sampled_excess(map: &MatrixMap, p: PIndex, samples: usize, seed: u64, case_id: &str) -> Result<f64> {
    let shape = map.shape_in.clone();
    let worst = (0..samples)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let mut rng = case_rng(seed, case_id, k as u64);
            let parts = shape
                .blocks
                .iter()
                .map(|&(r, c)| match k % 3 {
                    0 => ginibre(&mut rng, r, c),
                    1 => &ginibre(&mut rng, r, 1) * &ginibre(&mut rng, 1, c),
                    _ => haar_unitary(&mut rng, r.max(c)).submatrix(0, 0, r, c),
                })
                .collect();
            let x = BlockOperator::new(shape.clone(), parts, p)?;
            Ok(map.apply(&x)?.norm(p)? / x.norm(p)? - 1.0)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

fn spin_cases(cfg: &SuiteConfig) -> Vec<(String, CaseFn<'_>)> {
    let mut out = Vec::new();
    for n in 2..=cfg.max_n.min(5) {
        out.push(case(format!("axioms/N{n}"), move |o: &mut Outcome| {
            let spins = SpinSystem::new(n)?;
            o.bound("axiom_defect", spin_axiom_defect(&spins)?, 1e-12);
            o.check(spins.dim() == 1 << n, "dim Lambda_N = 2^N");
            o.check(spins.f_space().dim() == 2 * n + 2, "dim F_N = 2N+2");
            o.check(spins.e_space().dim() == 2 * n + 1, "dim E_2N = 2N+1");
            o.record("dims", json!({"Lambda": spins.dim(), "F": spins.f_space().dim(), "E": spins.e_space().dim()}));
            Ok(())
        }));
    }
    for n in 2..=cfg.max_n.min(4) {
        out.push(case(format!("projections/N{n}"), move |o: &mut Outcome| {
            let spins = SpinSystem::new(n)?;
            let tol = &cfg.tolerances;
            let d = spins.dim();
            let id = BlockOperator::single(CMatrix::identity(d), PIndex::TWO);
            for (name, basis) in [("Q", spins.f_space().basis), ("R", spins.e_space().basis)] {
                let map = hs_projection(&basis, tol)?;
                let unit_defect = map.apply(&id)?.distance(&id);
                o.bound(&format!("{name}_unital_defect"), unit_defect, 1e-12);
                for p in [PIndex::ONE, PIndex::TWO, PIndex::Inf] {
                    let ex = sampled_excess(&map, p, 300, cfg.seed, &format!("spin/{name}/{n}/{p}"))?;
                    o.bound(&format!("{name}_excess_p{p}"), ex.max(0.0), 1e-9);
                }
            }
            let mut rng = case_rng(cfg.seed, "spin/jc", n as u64);
            o.check(is_jc_triple(&spins.f_space().basis, 20, &mut rng, tol)?, "F_N is a JC*-triple");
            o.check(is_jc_triple(&spins.e_space().basis, 20, &mut rng, tol)?, "E_2N is a JC*-triple");
            let f = spins.f_space();
            let mut sigma_worst = 0.0f64;
            for _ in 0..20 {
                let x = f.random_element(&mut rng);
                let sx = f.sigma(&x, tol)?;
                sigma_worst = sigma_worst.max(f.sigma(&sx, tol)?.distance(&x) / x.frobenius_norm());
                for p in [PIndex::ONE, PIndex::Finite(3.0), PIndex::Inf] {
                    sigma_worst = sigma_worst.max(rel_dev(schatten_norm(&sx, p)?, schatten_norm(&x, p)?));
                }
            }
            o.bound("sigma_defect", sigma_worst, 1e-9);
            Ok(())
        }));
    }
    out
}

/// One (spec, exponent list) cell of the catalog grid.
#[derive(Debug, Clone)]
pub struct CatalogCell {
    pub id: String,
    pub spec: TypeSpec,
    /// Exponents at which contractivity is sampled.
    pub p_list: Vec<PIndex>,
}

/// Types 1, 2, 3, 5, 6 over `I, J ≤ max_I`, `N ≤ min(max_N, 4)`, three seeds.
///
/// Seed 0 uses scalar factors, which makes the single-factor projections
/// independent of `p`; those cells are checked for every configured `p`.
/// All other cells are built and checked at one finite `p` each.
pub fn catalog_grid(cfg: &SuiteConfig) -> Vec<CatalogCell> {
    let mut specs: Vec<(String, TypeSpec)> = Vec::new();
    for i in 2..=cfg.max_i {
        specs.push((format!("sym/I{i}"), TypeSpec::sym(i)));
        if i % 2 == 0 {
            specs.push((format!("antisym/I{i}"), TypeSpec::antisym(i)));
        }
        specs.push((format!("rect/I{i}J{i}"), TypeSpec::rect(i, i)));
    }
    for (i, j) in [(2, 3), (3, 2), (2, 5), (4, 6)] {
        if i.max(j) <= cfg.max_i {
            specs.push((format!("rect/I{i}J{j}"), TypeSpec::rect(i, j)));
        }
    }
    for n in 2..=cfg.max_n.min(4) {
        specs.push((format!("spin_even/N{n}"), TypeSpec::spin_even(n)));
        specs.push((format!("spin_odd/N{n}"), TypeSpec::spin_odd(n)));
    }
    let mut cells = Vec::new();
    for (id, base) in specs {
        for s in 0..3u64 {
            let mut spec = base.clone().with_seed(cfg.seed.wrapping_mul(1000) + s);
            spec.a_dim = Some(if s == 0 { 1 } else { 2 });
            if spec.kind == TypeKind::Rect && s == 0 {
                spec.two_blocks = Some(false);
            }
            if s == 0 && spec.kind != TypeKind::SpinEven && spec.two_blocks != Some(true) {
                cells.push(CatalogCell {
                    id: format!("{id}/s{s}"),
                    spec: spec.clone().with_p(PIndex::TWO),
                    p_list: cfg.p_list.clone(),
                });
                continue;
            }
            for p in cfg.finite_ps() {
                cells.push(CatalogCell {
                    id: format!("{id}/s{s}/p{p}"),
                    spec: spec.clone().with_p(p),
                    p_list: vec![p],
                });
            }
        }
    }
    cells
}

/// Build, project, and verify one catalog cell.
pub fn check_catalog_cell(cell: &CatalogCell, cfg: &SuiteConfig, o: &mut Outcome) -> Result<()> {
    let tol = &cfg.tolerances;
    let spec = cell.spec.resolve(tol)?;
    let x = build_type(&spec, tol)?;
    o.check(Some(x.dim()) == spec.expected_dim(), "dimension matches the type");
    o.record("dim", x.dim());
    let p = projection_for(&spec, tol)?;
    let mut probe = cfg.probe(&cell.id, cfg.samples, cell.p_list.clone());
    probe.check_positivity = spec.has_square_blocks();
    let r = verify_projection(&p, &x, &probe)?;
    o.report("projection", &r);
    Ok(())
}

fn catalog_cases(cfg: &SuiteConfig) -> Vec<(String, CaseFn<'_>)> {
    let mut out: Vec<(String, CaseFn<'_>)> = catalog_grid(cfg)
        .into_iter()
        .map(|cell| {
            let id = format!("types/{}", cell.id);
            case(id, move |o: &mut Outcome| check_catalog_cell(&cell, cfg, o))
        })
        .collect();
    for k in 0..20usize {
        out.push(case(format!("equivalence/w{k:02}"), move |o: &mut Outcome| {
            equivalence_case(k, cfg, o)
        }));
    }
    out.push(case("equivalence/p1_pair", move |o: &mut Outcome| p1_pair_case(cfg, o)));
    out.push(case("equivalence/non_positive_witness", move |o: &mut Outcome| {
        non_positive_witness_case(cfg, o)
    }));
    for k in 0..decomposition_combos().len() {
        out.push(case(format!("decomposition/c{k}"), move |o: &mut Outcome| {
            decomposition_case(k, cfg, o)
        }));
    }
    out
}

fn equivalence_bases() -> Vec<TypeSpec> {
    vec![
        TypeSpec::sym(3).with_a_dim(1),
        TypeSpec::antisym(4).with_a_dim(1),
        TypeSpec::rect(2, 2).with_a_dim(2),
        TypeSpec::spin_odd(2).with_a_dim(1),
        TypeSpec::sym(2).with_a_dim(2),
    ]
}

/// Positive witness `U = V`: a Haar unitary, or the first rows of one (a
/// co-isometry into a larger ambient).
pub fn positive_witness(seed: u64, k: usize, n: usize) -> EquivWitness {
    let mut rng = case_rng(seed, "witness", k as u64);
    if k % 2 == 0 {
        EquivWitness::positive(haar_unitary(&mut rng, n))
    } else {
        let m = n + 1 + k % 3;
        EquivWitness::positive(haar_unitary(&mut rng, m).submatrix(0, 0, n, m))
    }
}

/// Transport across the `k`-th positive witness and verify the result.
pub fn equivalence_case(k: usize, cfg: &SuiteConfig, o: &mut Outcome) -> Result<()> {
    let tol = &cfg.tolerances;
    let bases = equivalence_bases();
    let ps = [PIndex::ONE, PIndex::Finite(1.5), PIndex::TWO, PIndex::Finite(3.0)];
    let p = ps[k % ps.len()];
    let spec = bases[k % bases.len()].clone().with_seed(cfg.seed + k as u64).with_p(p).resolve(tol)?;
    let x = build_type(&spec, tol)?;
    let proj = projection_for(&spec, tol)?;
    let (r, c) = x.shape.embedded();
    if r != c {
        return Err(LabError::Domain("equivalence cases use square ambients".into()));
    }
    let w = positive_witness(cfg.seed, k, r);
    let y = pullback_space(&x, &w, tol)?;
    let chk = check_equivalence(&x, &y, &w, tol)?;
    o.check(chk.equivalent, "X = V Y U^* and Y = V^* X U");
    o.check(chk.support_identities, "normalized witness support identities");
    o.record("kind", spec.kind);
    o.record("p", p);
    o.record("ambient", [w.v.cols(), w.u.cols()]);
    let q = transport(&proj, &w, tol)?;
    let probe = cfg.probe(&format!("equivalence/{k}"), cfg.samples, vec![p]);
    let rep = verify_projection(&q, &y, &probe)?;
    o.report("transported", &rep);
    Ok(())
}

/// The `p = 1` pair on `M_3`: `Q(x) = tr(xv)·a` and `P_w(x) = tr(xw)·a`
/// project onto `span(a)`; only `Q` is positive.
pub fn p1_pair_maps() -> (MatrixMap, MatrixMap, CMatrix) {
    let a = CMatrix::unit(3, 3, 0, 0);
    let w = &CMatrix::unit(3, 3, 0, 0) + &CMatrix::unit(3, 3, 2, 1);
    (functional_projection(&a, &a), functional_projection(&w, &a), a)
}

fn p1_pair_case(cfg: &SuiteConfig, o: &mut Outcome) -> Result<()> {
    let tol = &cfg.tolerances;
    let (q, pw, a) = p1_pair_maps();
    let x = Subspace::from_matrices(BlockShape::square(3), vec![a.clone()], PIndex::ONE, tol)?;
    let probe = cfg.probe("equivalence/p1", cfg.samples, vec![PIndex::ONE]);
    let rq = verify_projection(&q, &x, &probe)?;
    o.report("Q", &rq);
    let rw = verify_projection(&pw, &x, &probe)?;
    o.check(rw.idempotency_defect <= 1e-10, "P_w is a projection");
    o.check(rw.range_distance <= 1e-9, "P_w has range span(a)");
    o.check(rw.contractivity_excess <= 1e-9, "P_w is contractive in S^1");
    o.check(rw.counterexample.is_some(), "P_w fails positivity with a recorded input");
    o.record("P_w", &rw);
    // canonical form P(x) = P(s_l x s_r)
    let s = x.support_left(tol)?;
    let sr = x.support_right(tol)?;
    let mut rng = case_rng(cfg.seed, "p1_pair/canonical", 0);
    let z = ginibre(&mut rng, 3, 3);
    let compressed = &(&s * &z) * &sr;
    let qd = q.apply_matrix(&z, PIndex::ONE)?.distance(&q.apply_matrix(&compressed, PIndex::ONE)?);
    let wd = pw.apply_matrix(&z, PIndex::ONE)?.distance(&pw.apply_matrix(&compressed, PIndex::ONE)?);
    o.check(qd <= 1e-12, "Q = Q(s_l . s_r)");
    o.record("canonical_defect_Q", qd);
    o.record("canonical_defect_P_w", wd);
    Ok(())
}

fn non_positive_witness_case(cfg: &SuiteConfig, o: &mut Outcome) -> Result<()> {
    let tol = &cfg.tolerances;
    let spec = TypeSpec::sym(3).with_a_dim(1).with_seed(cfg.seed).resolve(tol)?;
    let x = build_type(&spec, tol)?;
    let proj = projection_for(&spec, tol)?;
    let mut rng = case_rng(cfg.seed, "non_positive_witness", 0);
    let w = EquivWitness {
        u: haar_unitary(&mut rng, 3),
        v: haar_unitary(&mut rng, 3),
    };
    let y = pullback_space(&x, &w, tol)?;
    let q = transport(&proj, &w, tol)?;
    let rep = verify_projection(&q, &y, &cfg.probe("non_positive_witness", cfg.samples, vec![PIndex::TWO]))?;
    o.check(rep.idempotency_defect <= 1e-10, "transported map is a projection");
    o.check(rep.contractivity_excess <= 1e-9, "transported map is contractive");
    o.check(rep.range_distance <= 1e-9, "transported map has the pulled-back range");
    // positivity is reported, not required, for U != V
    o.record("positivity_defect", rep.positivity_defect);
    o.record("positivity_counterexample_found", rep.counterexample.is_some());
    let adj = q.adjoint_map();
    let swapped = transport(&proj.adjoint_map(), &w.swapped(), tol)?;
    let mut worst = 0.0f64;
    for k in 0..10 {
        let mut r2 = case_rng(cfg.seed, "non_positive_witness/adj", k);
        let z = BlockOperator::single(ginibre(&mut r2, 3, 3), PIndex::TWO);
        worst = worst.max(adj.apply(&z)?.distance(&swapped.apply(&z)?) / z.frobenius_norm());
    }
    o.bound("adjoint_transport_defect", worst, 1e-10);
    Ok(())
}

/// Disjoint sums used for the decomposition round trip.
pub fn decomposition_combos() -> Vec<(Vec<TypeSpec>, PIndex)> {
    vec![
        (vec![TypeSpec::sym(2).with_a_dim(1), TypeSpec::spin_odd(2).with_a_dim(1)], PIndex::TWO),
        (
            vec![TypeSpec::antisym(4).with_a_dim(1), TypeSpec::rect(2, 3).with_a_dim(1), TypeSpec::sym(3).with_a_dim(2)],
            PIndex::Finite(1.5),
        ),
        (vec![TypeSpec::rect(2, 2).with_a_dim(1), TypeSpec::sym(2).with_a_dim(2)], PIndex::Finite(3.0)),
        (
            vec![TypeSpec::spin_even(2).with_a_dim(1), TypeSpec::sym(2).with_a_dim(1), TypeSpec::antisym(2).with_a_dim(1)],
            PIndex::ONE,
        ),
    ]
}

/// Place the blocks' embedded forms on consecutive diagonal corners.
pub fn disjoint_sum(blocks: &[Subspace], p: PIndex, tol: &Tolerances) -> Result<Subspace> {
    let shapes: Vec<(usize, usize)> = blocks.iter().map(|b| b.shape.embedded()).collect();
    let rows: usize = shapes.iter().map(|s| s.0).sum();
    let cols: usize = shapes.iter().map(|s| s.1).sum();
    let mut basis = Vec::new();
    let (mut r0, mut c0) = (0, 0);
    for (b, &(r, c)) in blocks.iter().zip(&shapes) {
        for e in &b.basis {
            let mut m = CMatrix::zeros(rows, cols);
            m.set_block(r0, c0, &e.embed());
            basis.push(m);
        }
        r0 += r;
        c0 += c;
    }
    Subspace::from_matrices(BlockShape::single(rows, cols), basis, p, tol)
}

fn decomposition_case(k: usize, cfg: &SuiteConfig, o: &mut Outcome) -> Result<()> {
    let tol = &cfg.tolerances;
    let (specs, p) = decomposition_combos().swap_remove(k);
    let mut blocks = Vec::new();
    let mut maps = Vec::new();
    for (i, s) in specs.iter().enumerate() {
        let r = s.clone().with_seed(cfg.seed + 10 * k as u64 + i as u64).with_p(p).resolve(tol)?;
        blocks.push(build_type(&r, tol)?);
        maps.push(projection_for(&r, tol)?);
    }
    let x = disjoint_sum(&blocks, p, tol)?;
    let comps = disjoint_components(&x, tol)?;
    o.check(comps.len() == blocks.len(), format!("{} components recovered, expected {}", comps.len(), blocks.len()));
    o.record("components", comps.iter().map(|c| c.dim()).collect::<Vec<_>>());
    let assembled = assemble_disjoint(&maps)?;
    let mut probe = cfg.probe(&format!("decomposition/{k}"), cfg.samples, vec![p]);
    probe.check_positivity = specs.iter().all(TypeSpec::has_square_blocks);
    let rep = verify_projection(&assembled, &x, &probe)?;
    o.report("assembled", &rep);
    Ok(())
}

/// `(‖N_p(x)‖_q − ‖x‖_p, ⟨x, N_p(x)⟩ − ‖x‖_p², N_q(N_p(x)) − x)`, relative.
pub fn n_p_identity_defects(x: &CMatrix, p: PIndex, tol: &Tolerances) -> Result<(f64, f64, f64)> {
    let q = p.conjugate();
    let np = n_map(x, p, tol)?;
    let nx = schatten_norm(x, p)?;
    let a = rel_dev(schatten_norm(&np, q)?, nx);
    let pr = pairing(x, &np)?;
    let b = (pr - C64::new(nx * nx, 0.0)).norm() / (nx * nx);
    let c = n_map(&np, q, tol)?.distance(x) / x.frobenius_norm();
    Ok((a, b, c))
}

fn duality_cases(cfg: &SuiteConfig) -> Vec<(String, CaseFn<'_>)> {
    let mut out = Vec::new();
    for (p, label) in [(PIndex::Finite(3.0), "p3"), (PIndex::Finite(4.0), "p4")] {
        out.push(case(format!("n_p_identities/{label}"), move |o: &mut Outcome| {
            let tol = &cfg.tolerances;
            let (mut a, mut b, mut c) = (0.0f64, 0.0f64, 0.0f64);
            for k in 0..200 {
                let mut rng = case_rng(cfg.seed, &format!("n_p/{label}"), k);
                let x = ginibre(&mut rng, 5, 5);
                let d = n_p_identity_defects(&x, p, tol)?;
                a = a.max(d.0);
                b = b.max(d.1);
                c = c.max(d.2);
            }
            o.record("q", p.conjugate());
            o.bound("norm_defect", a, 1e-9);
            o.bound("pairing_defect", b, 1e-9);
            o.bound("inverse_defect", c, 1e-9);
            Ok(())
        }));
    }
    out.push(case("n_p_identities/p2", move |o: &mut Outcome| {
        let mut worst = 0.0f64;
        for k in 0..200 {
            let mut rng = case_rng(cfg.seed, "n_p/p2", k);
            let x = ginibre(&mut rng, 5, 5);
            worst = worst.max(n_map(&x, PIndex::TWO, &cfg.tolerances)?.distance(&x.adjoint()));
        }
        o.bound("adjoint_defect", worst, 1e-12);
        Ok(())
    }));
    out.push(case("disjoint_norms", move |o: &mut Outcome| {
        let mut worst = 0.0f64;
        let mut all_disjoint = true;
        for k in 0..200 {
            let (x, y) = disjoint_pair(cfg.seed, k);
            all_disjoint &= are_disjoint(&x, &y, &cfg.tolerances)?;
            for p in [1.0, 1.5, 2.0, 3.0] {
                let pi = PIndex::Finite(p);
                let lhs = schatten_norm(&(&x + &y), pi)?.powf(p);
                let rhs = schatten_norm(&x, pi)?.powf(p) + schatten_norm(&y, pi)?.powf(p);
                worst = worst.max(rel_dev(lhs, rhs));
            }
        }
        o.check(all_disjoint, "constructed pairs are disjoint");
        o.bound("additivity_defect", worst, 1e-10);
        Ok(())
    }));
    let specs = [
        TypeSpec::sym(3),
        TypeSpec::antisym(4),
        TypeSpec::rect(2, 3),
        TypeSpec::rect(3, 3),
        TypeSpec::spin_even(2),
        TypeSpec::spin_odd(3),
    ];
    for (i, s) in specs.into_iter().enumerate() {
        for p in cfg.finite_ps().into_iter().filter(|p| p.finite().is_some_and(|v| v > 1.0)) {
            let s = s.clone();
            out.push(case(format!("projection/{:?}{i}/p{p}", s.kind), move |o: &mut Outcome| {
                projection_duality_case(&s.clone().with_seed(cfg.seed + i as u64).with_p(p), cfg, o)
            }));
        }
    }
    out
}

/// `x`, `y` with orthogonal left and right supports in `M_5`.
pub fn disjoint_pair(seed: u64, k: u64) -> (CMatrix, CMatrix) {
    let mut rng = case_rng(seed, "disjoint_pair", k);
    let n = 5;
    let split = 1 + (k as usize % 4);
    let u = haar_unitary(&mut rng, n);
    let v = haar_unitary(&mut rng, n);
    let a = ginibre(&mut rng, split, split);
    let b = ginibre(&mut rng, n - split, n - split);
    let mut da = CMatrix::zeros(n, n);
    da.set_block(0, 0, &a);
    let mut db = CMatrix::zeros(n, n);
    db.set_block(split, split, &b);
    let conj = |m: &CMatrix| &(&u * m) * &v.adjoint();
    (conj(&da), conj(&db))
}

fn projection_duality_case(spec: &TypeSpec, cfg: &SuiteConfig, o: &mut Outcome) -> Result<()> {
    let tol = &cfg.tolerances;
    let spec = spec.resolve(tol)?;
    let p = spec.p;
    let q = p.conjugate();
    let x = build_type(&spec, tol)?;
    let proj = projection_for(&spec, tol)?;
    let adj = proj.adjoint_map();
    let mut fwd = 0.0f64;
    let mut back = 0.0f64;
    for k in 0..20 {
        let mut rng = case_rng(cfg.seed, "duality/projection", k);
        let e = x.random_element(&mut rng);
        let n = block_n_map(&e, p, tol)?;
        fwd = fwd.max(adj.apply(&n)?.distance(&n) / n.frobenius_norm());
        let g = BlockOperator::from_fn(&adj.shape_in, q, |_, _, _| complex_normal(&mut rng));
        let y = adj.apply(&g)?;
        let ny = block_n_map(&y, q, tol)?.with_p(p);
        back = back.max(proj.apply(&ny)?.distance(&ny) / ny.frobenius_norm());
    }
    o.bound("n_p_into_adjoint_range", fwd, 1e-9);
    o.bound("n_q_into_range", back, 1e-9);
    let range_adj = adj.range_subspace(q, x.dim() + 4, cfg.seed, tol)?;
    o.check(range_adj.dim() == x.dim(), "dim Ran(P^*) = dim Ran(P)");
    let sl = x.support_left(tol)?;
    let sr_adj = range_adj.support_right(tol)?;
    o.check(tol.close(&sl, &sr_adj), "s_l(Ran P) = s_r(Ran P^*)");
    Ok(())
}

/// Type-1 instance used by the bridge: `I = 3`, two-dimensional factor, `p = 2`.
pub fn bridge_base(seed: u64) -> TypeSpec {
    TypeSpec::sym(3).with_a_dim(2).with_seed(seed).with_p(PIndex::TWO)
}

/// `h = (1 ⊗ a)/‖1 ⊗ a‖_2`.
pub fn bridge_h(spec: &TypeSpec) -> BlockOperator {
    let i = spec.i.expect("type-1 spec");
    let h = kron(&CMatrix::identity(i), spec.a.as_ref().expect("resolved spec"));
    let n = h.frobenius_norm();
    BlockOperator::single(h.scale_real(1.0 / n), PIndex::TWO)
}

fn bridge_cases(cfg: &SuiteConfig) -> Vec<(String, CaseFn<'_>)> {
    let ps = [(PIndex::ONE, "p1"), (PIndex::Finite(4.0 / 3.0), "p4_3"), (PIndex::Finite(1.5), "p1_5"), (PIndex::TWO, "p2")];
    ps.into_iter()
        .map(|(p, label)| case(format!("v_p/{label}"), move |o: &mut Outcome| bridge_case(p, cfg, o)))
        .collect()
}

/// All bridge checks at exponent `p`.
pub fn bridge_case(p: PIndex, cfg: &SuiteConfig, o: &mut Outcome) -> Result<()> {
    let tol = &cfg.tolerances;
    let spec = bridge_base(cfg.seed).resolve(tol)?;
    let x2 = build_type(&spec, tol)?;
    let p2 = projection_for(&spec, tol)?;
    let h = bridge_h(&spec);
    let vp = v_p_bridge(&p2, &h, p, tol)?;
    let beta = p.reciprocal() - 0.5;
    let h0 = &h.parts[0];
    let hb = h0.pd_power(beta, tol)?;
    // X_p = h^β X h^β
    let conj: Vec<CMatrix> = x2.basis_matrices().iter().map(|b| &(&hb * b) * &hb).collect();
    let xp = Subspace::from_matrices(x2.shape.clone(), conj, p, tol)?;
    let rep = verify_projection(&vp, &xp, &cfg.probe(&format!("bridge/{p}"), cfg.samples, vec![p]))?;
    o.report("v_p", &rep);
    let h2p = BlockOperator::single(h0.pd_power(2.0 * p.reciprocal(), tol)?, p);
    o.bound("fixes_h_2_over_p", vp.apply(&h2p)?.distance(&h2p) / h2p.frobenius_norm(), 1e-9);
    // predicted factor: O·S_I ⊗ a^{2/p}
    let a = spec.a.as_ref().expect("resolved");
    let mut predicted = spec.clone();
    predicted.a = Some(a.pd_power(2.0 * p.reciprocal(), tol)?);
    predicted.p = p;
    let xpred = build_type(&predicted, tol)?;
    o.bound("range_vs_predicted_factor", xp.range_distance(&xpred)?, 1e-9);
    let direct = projection_for(&predicted, tol)?;
    let mut agree = 0.0f64;
    for k in 0..10 {
        let mut rng = case_rng(cfg.seed, "bridge/direct", k);
        let y = BlockOperator::from_fn(&vp.shape_in, p, |_, _, _| complex_normal(&mut rng));
        agree = agree.max(vp.apply(&y)?.distance(&direct.apply(&y)?) / y.frobenius_norm());
    }
    o.bound("agrees_with_type1_projection", agree, 1e-9);
    let comps = disjoint_components(&xp, tol)?;
    o.check(comps.len() == 1, format!("Ran(V_p) splits into {} components", comps.len()));
    let q = p.conjugate();
    if let PIndex::Finite(qv) = q {
        if qv >= 2.0 {
            let vq = v_p_bridge(&p2, &h, q, tol)?;
            let adj = vp.adjoint_map();
            let mut worst = 0.0f64;
            for k in 0..10 {
                let mut rng = case_rng(cfg.seed, "bridge/dual", k);
                let y = BlockOperator::from_fn(&vq.shape_in, q, |_, _, _| complex_normal(&mut rng));
                worst = worst.max(vq.apply(&y)?.distance(&adj.apply(&y)?) / y.frobenius_norm());
            }
            o.bound("v_q_is_adjoint", worst, 1e-9);
        }
    }
    Ok(())
}

/// Observed rank of `φ_m(t)` for `directions` random `t`; all must agree.
pub fn type4_ranks(n: usize, m: usize, directions: usize, seed: u64, tol: &Tolerances) -> Result<(Vec<usize>, usize)> {
    let fock = FockSpace::new(n)?;
    let mut ranks = Vec::with_capacity(directions);
    let mut dim = 0;
    for k in 0..directions {
        let mut rng = case_rng(seed, &format!("type4/{n}/{m}"), k as u64);
        let t = complex_vector(&mut rng, n);
        let r = fock.type4_rank_check(m, &t, tol)?;
        ranks.push(r.observed_rank);
        dim = r.slice_dim;
    }
    Ok((ranks, dim))
}

fn impossibility_cases(cfg: &SuiteConfig) -> Vec<(String, CaseFn<'_>)> {
    let mut out = Vec::new();
    for n in 2..=cfg.max_n.max(2) {
        out.push(case(format!("type4/N{n}"), move |o: &mut Outcome| {
            let tol = &cfg.tolerances;
            let mut table = Vec::new();
            for m in 1..=n {
                let (ranks, dim) = type4_ranks(n, m, 50, cfg.seed, tol)?;
                let expect = binom(n - 1, m - 1);
                o.check(
                    ranks.iter().all(|&r| r == expect),
                    format!("rank of phi_{m} differs from binom({}, {})", n - 1, m - 1),
                );
                o.check(dim == binom(n, m - 1), "slice dimension");
                table.push(json!({"m": m, "rank": ranks[0], "slice_dim": dim}));
            }
            o.record("ranks", table);
            let spec = TypeSpec::af_hilbert(n).with_seed(cfg.seed).resolve(tol)?;
            match projection_for(&spec, tol) {
                Err(LabError::Unsupported(msg)) => o.record("projection", msg),
                _ => {
                    o.check(false, "type 4 must have no positive contractive projection");
                }
            }
            Ok(())
        }));
    }
    out
}

/// dims of `AH(N+1)` and `F_N`, and the worst `T` isometry defect over `p`.
pub fn appendix_check(n: usize, samples: usize, seed: u64, tol: &Tolerances) -> Result<(usize, usize, f64)> {
    let fock = FockSpace::new(n + 1)?;
    let spaces = fock.ah_spaces(PIndex::TWO, tol)?;
    let spins = SpinSystem::new(n)?;
    let mut worst = 0.0f64;
    for k in 0..samples {
        let mut rng = case_rng(seed, &format!("appendix/{n}"), k as u64);
        let x = spaces.ah.random_element(&mut rng).parts.remove(0);
        let tx = fock.t_map(&spaces, &x, tol)?;
        if !spaces.bh.contains_matrix(&tx, tol) {
            return Err(LabError::Numerical("T left BH(N)".into()));
        }
        for p in [PIndex::ONE, PIndex::TWO, PIndex::Finite(3.0), PIndex::Inf] {
            worst = worst.max(rel_dev(schatten_norm(&tx, p)?, schatten_norm(&x, p)?));
        }
    }
    Ok((spaces.ah.dim(), spins.f_space().dim(), worst))
}

fn appendix_cases(cfg: &SuiteConfig) -> Vec<(String, CaseFn<'_>)> {
    [2usize, 3]
        .into_iter()
        .filter(|&n| n < cfg.max_n.max(4))
        .map(|n| {
            case(format!("ah/N{n}"), move |o: &mut Outcome| {
                let (ah, f, worst) = appendix_check(n, 100, cfg.seed, &cfg.tolerances)?;
                o.check(ah == 2 * n + 2, format!("dim AH(N+1) = {ah}"));
                o.check(f == ah, "dim AH(N+1) = dim F_N");
                o.record("dim_AH", ah);
                o.bound("t_isometry_defect", worst, 1e-9);
                let fock = FockSpace::new(n + 1)?;
                let spaces = fock.ah_spaces(PIndex::TWO, &cfg.tolerances)?;
                o.record("dim_DAH", spaces.dah.dim());
                Ok(())
            })
        })
        .collect()
}

/// Output of `build`: the resolved spec, its space, and the materialized map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceFile {
    pub spec: TypeSpec,
    pub space: Subspace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<CMatrix>,
}

pub fn build_space_file(spec: &TypeSpec, tol: &Tolerances) -> Result<SpaceFile> {
    let spec = spec.resolve(tol)?;
    let proj = projection_for(&spec, tol)?;
    let space = build_type(&spec, tol)?;
    Ok(SpaceFile {
        projection: proj.materialized().cloned(),
        spec,
        space,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub kind: TypeKind,
    pub dim: usize,
    pub stored_projection: bool,
    pub projection: ProjectionReport,
    pub space_matches_spec: bool,
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Verify a space file. A stored projection matrix is checked as given;
/// otherwise the projection is rebuilt from the spec.
pub fn verify_space_file(file: &SpaceFile, cfg: &SuiteConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let tol = &cfg.tolerances;
    let spec = file.spec.resolve(tol)?;
    let rebuilt = build_type(&spec, tol)?;
    let space_matches = file.space.shape == rebuilt.shape && file.space.span_eq(&rebuilt, tol)?;
    let shape = file.space.shape.clone();
    let map = match &file.projection {
        Some(m) => MatrixMap::from_matrix(shape.clone(), shape, m.clone())?,
        None => projection_for(&spec, tol)?,
    };
    let mut p_list = vec![spec.p];
    if spec.projection_is_p_independent() {
        p_list.extend(cfg.p_list.iter().copied().filter(|p| *p != spec.p));
    }
    let mut probe = cfg.probe(&format!("verify/{:?}", spec.kind), cfg.samples, p_list);
    probe.check_positivity = spec.has_square_blocks();
    let report = verify_projection(&map, &file.space, &probe)?;
    let mut failures = report.failures.clone();
    if !space_matches {
        failures.push("stored space differs from the space built from its spec".into());
    }
    if Some(file.space.dim()) != spec.expected_dim() {
        failures.push("dimension does not match the type".into());
    }
    Ok(VerifyReport {
        kind: spec.kind,
        dim: file.space.dim(),
        stored_projection: file.projection.is_some(),
        projection: report,
        space_matches_spec: space_matches,
        passed: failures.is_empty(),
        failures,
    })
}

pub fn thresholds() -> Thresholds {
    Thresholds::default()
}
