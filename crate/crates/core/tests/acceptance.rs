//! Acceptance criteria 1–11. Each criterion runs the library check and an
//! independent reference computation from `common`, then prints one line.

mod common;

use std::time::{Duration, Instant};

use common as oracle;
use rand::Rng;
use rayon::prelude::*;
use schatten_lab::fock::FockSpace;
use schatten_lab::projections::{
    assemble_disjoint, hs_projection, projection_for, transport, v_p_bridge, verify_projection, MatrixMap,
    ProbeConfig,
};
use schatten_lab::schatten::{n_map, schatten_norm};
use schatten_lab::spaces::{build_type, disjoint_components, pullback_space, Subspace, TypeSpec};
use schatten_lab::spin::SpinSystem;
use schatten_lab::verify::*;
use schatten_lab::{BlockOperator, CMatrix, PIndex, Tolerances, C64};

#[derive(Default)]
struct Check {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn le(&mut self, what: &str, value: f64, limit: f64) {
        if !(value <= limit) {
            self.failures.push(format!("{what}: {value:e} > {limit:e}"));
        }
    }

    fn ok(&mut self, cond: bool, what: impl Into<String>) {
        if !cond {
            self.failures.push(what.into());
        }
    }

    fn lib(&mut self, label: &str, r: schatten_lab::Result<()>, o: &Outcome) {
        if let Err(e) = r {
            self.failures.push(format!("{label}: error {e}"));
        }
        for f in o.failures() {
            self.failures.push(format!("{label}: {f}"));
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn merge(&mut self, other: Check) {
        self.failures.extend(other.failures);
        self.notes.extend(other.notes);
    }
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn ps(values: &[f64]) -> Vec<PIndex> {
    values.iter().map(|&v| PIndex::Finite(v)).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn random_block(shape: &schatten_lab::BlockShape, rng: &mut impl Rng, p: PIndex) -> BlockOperator {
    let parts = shape.blocks.iter().map(|&(r, c)| oracle::gaussian(rng, r, c)).collect();
    BlockOperator::new(shape.clone(), parts, p).unwrap()
}

/// Reference checks of `map` as a positive contractive projection onto `span(basis)`.
fn reference_projection_check(
    label: &str,
    map: &MatrixMap,
    basis: &[BlockOperator],
    p_list: &[PIndex],
    positivity: bool,
    samples: usize,
) -> Check {
    let mut c = Check::default();
    let span = oracle::span_basis(&basis.iter().map(|b| oracle::flat(&b.parts)).collect::<Vec<_>>());
    c.ok(span.len() == basis.len(), format!("{label}: basis is dependent"));
    let shape = &map.shape_in;
    let (mut idem, mut range, mut fix, mut excess, mut neg) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for b in basis {
        let pb = map.apply(b).unwrap();
        fix = fix.max(pb.distance(b) / b.frobenius_norm());
    }
    for k in 0..samples {
        let mut rng = oracle::rng(label, k as u64);
        let y = if k % 2 == 0 {
            random_block(shape, &mut rng, PIndex::TWO)
        } else {
            // near the range, where contractivity is tight
            let mut x = BlockOperator::zeros(shape, PIndex::TWO);
            for b in basis {
                x.axpy(C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5), b);
            }
            x.add(&random_block(shape, &mut rng, PIndex::TWO).scale_real(0.05 * x.frobenius_norm()))
        };
        let py = map.apply(&y).unwrap();
        let ppy = map.apply(&py).unwrap();
        idem = idem.max(ppy.distance(&py) / y.frobenius_norm());
        range = range.max(oracle::span_residual(&span, &oracle::flat(&py.parts)));
        for &p in p_list {
            let r = oracle::block_norm(&py.parts, p) / oracle::block_norm(&y.parts, p);
            excess = excess.max(r - 1.0);
        }
        if positivity {
            let parts: Vec<CMatrix> = shape.blocks.iter().map(|&(n, _)| oracle::psd(&mut rng, n, 1 + k % n)).collect();
            let scale = parts.iter().map(oracle::fro).fold(0.0, f64::max);
            let rho = BlockOperator::new(shape.clone(), parts, PIndex::TWO).unwrap();
            for img in &map.apply(&rho).unwrap().parts {
                let anti = oracle::fro(&(img - &img.adjoint())) / 2.0;
                neg = neg.max((-oracle::min_eig(img)).max(0.0) / scale).max(anti / scale);
            }
        }
    }
    c.le(&format!("{label}: fixes X"), fix, 1e-10);
    c.le(&format!("{label}: idempotency"), idem, 1e-10);
    c.le(&format!("{label}: range"), range, 1e-9);
    c.le(&format!("{label}: contractivity excess"), excess, 1e-9);
    if positivity {
        c.le(&format!("{label}: positivity"), neg, 1e-9);
    }
    c
}

fn criterion_1() -> Check {
    let mut c = Check::default();
    let mut worst = 0.0f64;
    for n in 2..=5 {
        let fock = FockSpace::new(n).unwrap();
        for m in 1..=n {
            let b = oracle::binom(n - 1, m - 1);
            for p in ps(&[1.0, 1.5, 2.0, 3.0]) {
                let d = phi_m_isometry_defect(&fock, m, p, 100, 0).unwrap();
                c.le(&format!("library N={n} m={m} p={p}"), d, 1e-9);
                worst = worst.max(d);
                let pv = p.finite().unwrap();
                for k in 0..100 {
                    let mut rng = oracle::rng(&format!("c1/{n}/{m}/{p}"), k);
                    let t: Vec<C64> = oracle::gaussian(&mut rng, n, 1).data().to_vec();
                    let l2 = t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    let z = fock.phi_m(m, &t, p).unwrap();
                    let s = oracle::svals(&z);
                    let level = l2 * (b as f64).powf(-1.0 / pv);
                    let top = s[..b].iter().map(|v| rel(*v, level)).fold(0.0, f64::max);
                    let rest = s[b..].iter().fold(0.0f64, |a, v| a.max(*v)) / l2;
                    let reference = oracle::svals(&oracle::graded_creation_sum(n, m, &t).scale_real((b as f64).powf(-1.0 / pv)));
                    let agree = s.iter().zip(&reference).map(|(a, r)| (a - r).abs()).fold(0.0, f64::max) / l2;
                    let nd = rel(oracle::norm(&z, p), l2);
                    worst = worst.max(nd);
                    c.le(&format!("N={n} m={m} p={p}: singular levels"), top.max(rest), 1e-9);
                    c.le(&format!("N={n} m={m} p={p}: reference operator"), agree, 1e-12);
                    c.le(&format!("N={n} m={m} p={p}: reference norm"), nd, 1e-9);
                }
            }
        }
    }
    c.note(format!("max relative deviation {worst:.1e}"));
    c
}

fn criterion_2() -> Check {
    let mut c = Check::default();
    let mut worst = 0.0f64;
    for n in 2..=5 {
        let spins = SpinSystem::new(n).unwrap();
        let d = spins.dim();
        let id = CMatrix::identity(d);
        let lib = spin_axiom_defect(&spins).unwrap();
        c.le(&format!("library N={n}"), lib, 1e-12);
        let mut gens: Vec<CMatrix> = spins.labels().iter().map(|&j| spins.generator(j).unwrap().clone()).collect();
        gens.push(spins.extra_generator());
        for (a, x) in gens.iter().enumerate() {
            worst = worst.max(oracle::fro(&(x - &x.adjoint())));
            worst = worst.max(oracle::fro(&(&(x * x) - &id)));
            for y in &gens[a + 1..] {
                worst = worst.max(oracle::fro(&(&(x * y) + &(y * x))));
            }
        }
        let rank = |basis: &[CMatrix]| oracle::span_basis(&basis.iter().map(|b| b.data().to_vec()).collect::<Vec<_>>()).len();
        let f = spins.f_space();
        let e = spins.e_space();
        c.ok(d == 1 << n, format!("dim Lambda_{n} = {d}"));
        c.ok(f.dim() == 2 * n + 2 && rank(&f.basis) == 2 * n + 2, format!("dim F_{n} = {}", rank(&f.basis)));
        c.ok(e.dim() == 2 * n + 1 && rank(&e.basis) == 2 * n + 1, format!("dim E_{} = {}", 2 * n, rank(&e.basis)));
    }
    c.le("reference axiom defect", worst, 1e-12);
    c.note(format!("axiom defect {worst:.1e}"));
    c
}

fn criterion_3() -> Check {
    let cfg = SuiteConfig::default();
    let cells = catalog_grid(&cfg);
    let checks: Vec<Check> = cells
        .par_iter()
        .map(|cell| {
            let mut c = Check::default();
            let mut o = Outcome::default();
            let r = check_catalog_cell(cell, &cfg, &mut o);
            c.lib(&cell.id, r, &o);
            let spec = cell.spec.resolve(&tol()).unwrap();
            let x = build_type(&spec, &tol()).unwrap();
            let map = projection_for(&spec, &tol()).unwrap();
            c.merge(reference_projection_check(
                &cell.id,
                &map,
                &x.basis,
                &cell.p_list,
                spec.has_square_blocks(),
                12,
            ));
            c
        })
        .collect();
    let mut c = Check::default();
    for k in checks {
        c.merge(k);
    }
    c.notes.clear();
    c.note(format!("{} cells", cells.len()));
    c
}

fn criterion_4() -> Check {
    let mut c = Check::default();
    for (n, m, rank, dim) in [(3, 2, 2, 3), (5, 3, 6, 10)] {
        let (ranks, slice) = type4_ranks(n, m, 50, 0, &tol()).unwrap();
        c.ok(ranks.iter().all(|&r| r == rank), format!("library ranks N={n}: {ranks:?}"));
        c.ok(slice == dim, format!("library slice dim N={n}: {slice}"));
        c.ok(oracle::subsets(n, m - 1).len() == dim, "reference slice dim");
        for k in 0..50 {
            let mut rng = oracle::rng(&format!("c4/{n}"), k);
            let t: Vec<C64> = oracle::gaussian(&mut rng, n, 1).data().to_vec();
            let r = oracle::rank(&oracle::graded_creation_sum(n, m, &t), 1e-10);
            c.ok(r == rank, format!("reference rank N={n}: {r}"));
        }
        c.note(format!("N={n}: ({rank},{dim})"));
    }
    c
}

fn reference_n_map(x: &CMatrix, p: f64) -> CMatrix {
    let np = oracle::norm(x, PIndex::Finite(p));
    oracle::odd_fn_adjoint(x, |s| s.signum() * s.abs().powf(p - 1.0)).scale_real(np.powf(2.0 - p))
}

fn criterion_5() -> Check {
    let mut c = Check::default();
    let t = tol();
    let mut exact = 0.0f64;
    let mut worst = 0.0f64;
    for k in 0..200 {
        let mut rng = oracle::rng("c5", k);
        let x = oracle::gaussian(&mut rng, 5, 5);
        for (p, q) in [(3.0, 1.5), (4.0, 4.0 / 3.0)] {
            let (pp, qq) = (PIndex::Finite(p), PIndex::Finite(q));
            let (a, b, d) = n_p_identity_defects(&x, pp, &t).unwrap();
            c.le(&format!("library identities p={p}"), a.max(b).max(d), 1e-9);
            let np = n_map(&x, pp, &t).unwrap();
            let xp = oracle::norm(&x, pp);
            let agree = oracle::fro(&(&np - &reference_n_map(&x, p))) / oracle::fro(&np);
            let norm_id = rel(oracle::norm(&np, qq), xp);
            let pairing = (&x * &np).trace();
            let pair_id = (pairing - C64::new(xp * xp, 0.0)).norm() / (xp * xp);
            let back = reference_n_map(&np, q);
            let inv = oracle::fro(&(&back - &x)) / oracle::fro(&x);
            worst = worst.max(agree).max(norm_id).max(pair_id).max(inv);
        }
        let n2 = n_map(&x, PIndex::TWO, &t).unwrap();
        exact = exact.max(oracle::fro(&(&n2 - &x.adjoint())) / oracle::fro(&x));
    }
    c.le("reference N_p identities", worst, 1e-9);
    c.le("N_2 = adjoint", exact, 1e-12);
    c.note(format!("identity defect {worst:.1e}, N_2 defect {exact:.1e}"));
    c
}

fn criterion_6() -> Check {
    let mut c = Check::default();
    let cfg = SuiteConfig::default();
    let t = tol();
    for p in [PIndex::ONE, PIndex::Finite(4.0 / 3.0), PIndex::TWO] {
        let mut o = Outcome::default();
        let r = bridge_case(p, &cfg, &mut o);
        c.lib(&format!("library p={p}"), r, &o);
        let spec = bridge_base(cfg.seed).resolve(&t).unwrap();
        let x2 = build_type(&spec, &t).unwrap();
        let h = bridge_h(&spec);
        let vp = v_p_bridge(&projection_for(&spec, &t).unwrap(), &h, p, &t).unwrap();
        let inv = p.reciprocal();
        let hb = oracle::herm_fn(&h.parts[0], |l| l.powf(inv - 0.5));
        let h2p = BlockOperator::single(oracle::herm_fn(&h.parts[0], |l| l.powf(2.0 * inv)), p);
        let fixed = vp.apply(&h2p).unwrap().distance(&h2p) / h2p.frobenius_norm();
        c.le(&format!("p={p}: V_p(h^(2/p)) = h^(2/p)"), fixed, 1e-9);
        let xp: Vec<BlockOperator> = x2
            .basis_matrices()
            .iter()
            .map(|b| BlockOperator::single(&(&hb * b) * &hb, p))
            .collect();
        c.merge(reference_projection_check(&format!("bridge p={p}"), &vp, &xp, &[p], true, 40));
    }
    c.note("p in {1, 4/3, 2}");
    c
}

fn criterion_7() -> Check {
    let mut c = Check::default();
    let mut worst = 0.0f64;
    for k in 0..200 {
        let (x, y) = disjoint_pair(0, k);
        let scale = oracle::fro(&x) * oracle::fro(&y);
        c.le("x^*y = 0", oracle::fro(&(&x.adjoint() * &y)) / scale, 1e-12);
        c.le("x y^* = 0", oracle::fro(&(&x * &y.adjoint())) / scale, 1e-12);
        let s = &x + &y;
        for p in [1.0, 1.5, 2.0, 3.0] {
            let pp = PIndex::Finite(p);
            let lhs = schatten_norm(&s, pp).unwrap().powf(p);
            let rhs = schatten_norm(&x, pp).unwrap().powf(p) + schatten_norm(&y, pp).unwrap().powf(p);
            let ref_lhs = oracle::norm(&s, pp).powf(p);
            let ref_rhs = oracle::norm(&x, pp).powf(p) + oracle::norm(&y, pp).powf(p);
            worst = worst.max(rel(lhs, rhs)).max(rel(ref_lhs, ref_rhs)).max(rel(lhs, ref_rhs));
        }
    }
    c.le("norm additivity", worst, 1e-10);
    c.note(format!("max defect {worst:.1e}"));
    c
}

fn criterion_8() -> Check {
    let mut c = Check::default();
    let t = tol();
    for n in 2..=4 {
        let spins = SpinSystem::new(n).unwrap();
        let d = spins.dim();
        for (name, space) in [("Q", spins.f_space()), ("R", spins.e_space())] {
            let map = hs_projection(&space.basis, &t).unwrap();
            let id = BlockOperator::single(CMatrix::identity(d), PIndex::TWO);
            c.le(&format!("{name} N={n} unital"), map.apply(&id).unwrap().distance(&id), 1e-12);
            let plist = [PIndex::ONE, PIndex::TWO, PIndex::Inf];
            for p in plist {
                let ex = sampled_excess(&map, p, 300, 0, &format!("c8/{name}/{n}/{p}")).unwrap();
                c.le(&format!("library {name} N={n} p={p}"), ex, 1e-9);
            }
            let basis: Vec<BlockOperator> = space.basis.iter().map(|b| BlockOperator::single(b.clone(), PIndex::TWO)).collect();
            c.merge(reference_projection_check(&format!("{name} N={n}"), &map, &basis, &plist, true, 60));
        }
    }
    c.note("N = 2..4, 300 inputs per exponent");
    c
}

fn criterion_9() -> Check {
    let mut c = Check::default();
    let cfg = SuiteConfig::default();
    let t = tol();
    let bases = [
        TypeSpec::sym(3).with_a_dim(1),
        TypeSpec::antisym(4).with_a_dim(1),
        TypeSpec::rect(2, 2).with_a_dim(2),
        TypeSpec::spin_odd(2).with_a_dim(1),
        TypeSpec::sym(2).with_a_dim(2),
    ];
    let exps = ps(&[1.0, 1.5, 2.0, 3.0]);
    let checks: Vec<Check> = (0..20usize)
        .into_par_iter()
        .map(|k| {
            let mut c = Check::default();
            let mut o = Outcome::default();
            let r = equivalence_case(k, &cfg, &mut o);
            c.lib(&format!("library witness {k}"), r, &o);
            let p = exps[k % exps.len()];
            let spec = bases[k % bases.len()].clone().with_seed(cfg.seed + k as u64).with_p(p).resolve(&t).unwrap();
            let x = build_type(&spec, &t).unwrap();
            let (n, _) = x.shape.embedded();
            let w = positive_witness(cfg.seed, k, n);
            let y = pullback_space(&x, &w, &t).unwrap();
            let pulled: Vec<BlockOperator> = x
                .basis
                .iter()
                .map(|b| BlockOperator::single(&(&w.v.adjoint() * &b.embed()) * &w.u, p))
                .collect();
            let pulled_span = oracle::span_basis(&pulled.iter().map(|b| oracle::flat(&b.parts)).collect::<Vec<_>>());
            c.ok(pulled_span.len() == y.dim(), format!("witness {k}: dim V^* X U"));
            for b in &y.basis {
                c.le(&format!("witness {k}: Y inside V^* X U"), oracle::span_residual(&pulled_span, &oracle::flat(&b.parts)), 1e-9);
            }
            let q = transport(&projection_for(&spec, &t).unwrap(), &w, &t).unwrap();
            c.merge(reference_projection_check(&format!("witness {k}"), &q, &y.basis, &[p], true, 20));
            c
        })
        .collect();
    for k in checks {
        c.merge(k);
    }

    let (q, pw, a) = p1_pair_maps();
    let x = Subspace::from_matrices(schatten_lab::BlockShape::square(3), vec![a.clone()], PIndex::ONE, &t).unwrap();
    let probe = ProbeConfig::new("c9/p1", 0, 200, vec![PIndex::ONE]);
    let rq = verify_projection(&q, &x, &probe).unwrap();
    c.ok(rq.passed, format!("Q fails: {:?}", rq.failures));
    let rw = verify_projection(&pw, &x, &probe).unwrap();
    c.ok(rw.idempotency_defect <= 1e-10 && rw.range_distance <= 1e-9, "P_w is a projection onto span(a)");
    c.le("P_w contractivity in S^1", rw.contractivity_excess, 1e-9);
    match &rw.counterexample {
        None => c.ok(false, "no recorded counterexample for P_w"),
        Some(ce) => {
            let input = &ce.input.parts[0];
            let image = &ce.image.parts[0];
            let scale = oracle::fro(input);
            c.le("counterexample input is PSD", (-oracle::min_eig(input)).max(0.0) / scale, 1e-12);
            c.le("counterexample input is Hermitian", oracle::fro(&(input - &input.adjoint())) / scale, 1e-12);
            let bad = (-oracle::min_eig(image)).max(oracle::fro(&(image - &image.adjoint())) / 2.0) / scale;
            c.ok(bad > 1e-9, "P_w image of the counterexample is PSD");
            let qimg = q.apply_matrix(input, PIndex::ONE).unwrap();
            c.le("Q image of the counterexample is PSD", (-oracle::min_eig(&qimg)).max(0.0) / scale, 1e-12);
            c.note(format!("P_w counterexample at sample {}", ce.sample));
        }
    }
    c.merge(reference_projection_check("p1 Q", &q, &x.basis, &[PIndex::ONE], true, 40));
    c
}

fn criterion_10() -> Check {
    let mut c = Check::default();
    let t = tol();
    let cfg = SuiteConfig::default();
    for (k, (specs, p)) in decomposition_combos().into_iter().enumerate() {
        let mut blocks = Vec::new();
        let mut maps = Vec::new();
        for (i, s) in specs.iter().enumerate() {
            let r = s.clone().with_seed(cfg.seed + 10 * k as u64 + i as u64).with_p(p).resolve(&t).unwrap();
            blocks.push(build_type(&r, &t).unwrap());
            maps.push(projection_for(&r, &t).unwrap());
        }
        let x = disjoint_sum(&blocks, p, &t).unwrap();
        let comps = disjoint_components(&x, &t).unwrap();
        c.ok(comps.len() == blocks.len(), format!("combo {k}: {} components, expected {}", comps.len(), blocks.len()));
        let total: usize = comps.iter().map(Subspace::dim).sum();
        c.ok(total == x.dim(), format!("combo {k}: component dims sum to {total}"));
        let mut got: Vec<usize> = comps.iter().map(Subspace::dim).collect();
        let mut want: Vec<usize> = blocks.iter().map(Subspace::dim).collect();
        got.sort();
        want.sort();
        c.ok(got == want, format!("combo {k}: dims {got:?} vs {want:?}"));
        let span = oracle::span_basis(&x.basis.iter().map(|b| oracle::flat(&b.parts)).collect::<Vec<_>>());
        let mut cross = 0.0f64;
        for (i, a) in comps.iter().enumerate() {
            for u in a.basis_matrices() {
                c.le(&format!("combo {k}: component inside X"), oracle::span_residual(&span, u.data()), 1e-9);
                for b in &comps[i + 1..] {
                    for v in b.basis_matrices() {
                        let s = oracle::fro(&u) * oracle::fro(&v);
                        cross = cross.max(oracle::fro(&(&u.adjoint() * &v)) / s).max(oracle::fro(&(&u * &v.adjoint())) / s);
                    }
                }
            }
        }
        c.le(&format!("combo {k}: components are operator-disjoint"), cross, 1e-9);
        let assembled = assemble_disjoint(&maps).unwrap();
        let square = specs.iter().all(TypeSpec::has_square_blocks);
        let mut probe = ProbeConfig::new(format!("c10/{k}"), cfg.seed, 200, vec![p]);
        probe.check_positivity = square;
        let rep = verify_projection(&assembled, &x, &probe).unwrap();
        c.ok(rep.passed, format!("combo {k}: assembled projection {:?}", rep.failures));
        c.merge(reference_projection_check(&format!("combo {k}"), &assembled, &x.basis, &[p], square, 30));
        c.note(format!("{got:?}"));
    }
    c
}

fn criterion_11() -> Check {
    let mut c = Check::default();
    let t = tol();
    for n in [2usize, 3] {
        let (ah, f, worst) = appendix_check(n, 100, 0, &t).unwrap();
        c.ok(ah == 2 * n + 2 && f == ah, format!("N={n}: dim AH = {ah}, dim F = {f}"));
        c.le(&format!("library T isometry N={n}"), worst, 1e-9);
        let fock = FockSpace::new(n + 1).unwrap();
        let spaces = fock.ah_spaces(PIndex::TWO, &t).unwrap();
        let ah_basis = spaces.ah.basis_matrices();
        let rank = oracle::span_basis(&ah_basis.iter().map(|b| b.data().to_vec()).collect::<Vec<_>>()).len();
        c.ok(rank == 2 * n + 2, format!("N={n}: reference dim AH = {rank}"));
        let images: Vec<Vec<C64>> = ah_basis.iter().map(|b| fock.t_map(&spaces, b, &t).unwrap().data().to_vec()).collect();
        let bh = oracle::span_basis(&spaces.bh.basis_matrices().iter().map(|b| b.data().to_vec()).collect::<Vec<_>>());
        c.ok(oracle::span_basis(&images).len() == bh.len(), format!("N={n}: T is onto BH"));
        let mut dev = 0.0f64;
        for k in 0..100 {
            let mut rng = oracle::rng(&format!("c11/{n}"), k);
            let coef = oracle::gaussian(&mut rng, ah_basis.len(), 1);
            let mut x = CMatrix::zeros(ah_basis[0].rows(), ah_basis[0].cols());
            for (b, z) in ah_basis.iter().zip(coef.data()) {
                x.axpy(*z, b);
            }
            let tx = fock.t_map(&spaces, &x, &t).unwrap();
            dev = dev.max(oracle::span_residual(&bh, tx.data()));
            for p in [PIndex::ONE, PIndex::TWO, PIndex::Finite(3.0), PIndex::Inf] {
                dev = dev.max(rel(oracle::norm(&tx, p), oracle::norm(&x, p)));
            }
        }
        c.le(&format!("reference T isometry N={n}"), dev, 1e-9);
        c.note(format!("N={n}: dim {ah}, defect {dev:.1e}"));
    }
    c
}

fn main() {
    let criteria: [(&str, fn() -> Check, Option<Duration>); 11] = [
        ("phi_m isometry", criterion_1, Some(Duration::from_secs(30))),
        ("spin system axioms and dimensions", criterion_2, None),
        ("catalog projections", criterion_3, Some(Duration::from_secs(300))),
        ("type 4 rank witness", criterion_4, None),
        ("duality map identities", criterion_5, None),
        ("V_p bridge", criterion_6, None),
        ("disjoint norm additivity", criterion_7, None),
        ("spin projections Q and R", criterion_8, None),
        ("equivalence transport and the p = 1 pair", criterion_9, None),
        ("decomposition round trip", criterion_10, None),
        ("appendix spaces and T", criterion_11, None),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut c = run();
        let elapsed = start.elapsed();
        if let Some(b) = budget {
            c.ok(elapsed < *b, format!("took {elapsed:.1?}, budget {b:?}"));
        }
        let status = if c.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("{status} criterion {}: {name} ({:.1?}) {}", i + 1, elapsed, c.notes.join("; "));
        for f in c.failures.iter().take(20) {
            println!("    {f}");
        }
        if !c.failures.is_empty() {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
