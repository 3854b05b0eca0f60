//! Acceptance run: one PASS/FAIL line per criterion. Numerical tolerances are
//! pinned here; table values are the reference values.

mod common;

use std::sync::Arc;
use std::time::Instant;

use common::{brute_b0_contributions, brute_operator, brute_t_gamma, coupled_energy, model};
use nalgebra::DMatrix;
use sgfem::adaptive::{doerfler_mark, AdaptTrace};
use sgfem::estimator::{detail_index_set, estimate, parametric_estimator_b0, parametric_rhs, AuxForm};
use sgfem::experiment::{run, AdaptiveResult, RunConfig, RunResult, SweepResult};
use sgfem::fem::{Assembler, ElementKind, FESpace, UniformGrid};
use sgfem::galerkin::KroneckerSystem;
use sgfem::polychaos::{composite_gauss_legendre, triangle_ok, triple_product, IndexSet, MultiIndex, UnivariateBasis};
use sgfem::randfield::{AffineField, CoefficientKind, CoefficientModel, Rect, SpatialFn};

struct Outcome {
    failed: Vec<String>,
}

impl Outcome {
    fn line(&mut self, name: &str, ok: bool, detail: String) {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(name.to_string());
        }
    }
}

fn preset(name: &str, overrides: &[&str]) -> RunConfig {
    let ov: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    RunConfig::from_preset(name, &ov).unwrap()
}

fn sweep(cfg: &RunConfig) -> SweepResult {
    match run(cfg).unwrap().result {
        RunResult::Sweep(s) => s,
        RunResult::Adaptive(_) => panic!("expected a sweep"),
    }
}

fn adaptive(cfg: &RunConfig) -> AdaptiveResult {
    match run(cfg).unwrap().result {
        RunResult::Adaptive(a) => a,
        RunResult::Sweep(_) => panic!("expected an adaptive run"),
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ")
}

fn loop_seconds(t: &AdaptTrace) -> f64 {
    t.records.iter().map(|r| r.seconds).sum()
}

fn idx(e: [u32; 5]) -> MultiIndex {
    MultiIndex::new(e.to_vec())
}

fn table1(out: &mut Outcome) {
    let reference = [(0.2, [1.3275, 1.1370, 1.0198]), (0.4, [1.3331, 1.1531, 1.0389])];
    let t = Instant::now();
    let s = sweep(&preset("table1", &["sweep.amplitudes=[0.2, 0.4]"]));
    let secs = t.elapsed().as_secs_f64();
    let mut ok = secs <= 600.0;
    let mut detail = String::new();
    for (sigma, want) in reference {
        let got: Vec<f64> = s
            .rows
            .iter()
            .filter(|r| r.amplitude == sigma)
            .map(|r| r.form(AuxForm::B0).unwrap().theta.unwrap())
            .collect();
        ok &= got.len() == 3 && got.iter().zip(want).all(|(&g, w)| within(g, w, 0.05));
        detail += &format!("sigma {sigma}: theta0 {} (reference {}); ", fmt(&got), fmt(&want));
    }
    out.line("1 table1 scaled", ok, format!("{detail}{secs:.0} s"));
}

fn table3(out: &mut Outcome) {
    let s = sweep(&preset("table3", &[]));
    let th = |f| {
        s.rows
            .iter()
            .map(|r| r.form(f).unwrap().theta.unwrap())
            .collect::<Vec<_>>()
    };
    let (t0, t1) = (th(AuxForm::B0), th(AuxForm::B1));
    let ok = t0.len() == 3
        && t0.windows(2).all(|w| w[1] >= w[0])
        && within(t0[2], 1.1078, 0.05)
        && within(t1[2], 1.0601, 0.05);
    out.line(
        "2 table3 stabilization",
        ok,
        format!("theta0 {} (1.1078), theta1 {} (1.0601)", fmt(&t0), fmt(&t1)),
    );
}

fn table6(out: &mut Outcome) -> Vec<(&'static str, Vec<f64>)> {
    let mut effectivities = Vec::new();

    let a = adaptive(&preset(
        "table6-alpha0.4",
        &["reference.enabled=true", "reference.adaptive=\"refined\""],
    ));
    let last = a.trace.last().unwrap();
    let k = a.trace.records.len() - 1;
    let secs_a = loop_seconds(&a.trace);
    let ok = a.trace.converged
        && k == 4
        && last.h == 2f64.powi(-5)
        && a.parametric_refinements() == 0
        && within(last.eta, 1.4633e-2, 0.1 * 1.4633e-2);
    out.line(
        "3a table6 alpha 0.4",
        ok,
        format!(
            "K = {k}, h_K = {}, parametric refinements {}, eta {:.4e} (1.4633e-2), {secs_a:.0} s",
            last.h,
            a.parametric_refinements(),
            last.eta
        ),
    );
    effectivities.push((
        "alpha 0.4, reference Q2 at h_K/2 with P_{M,d_K+1}",
        a.effectivities.clone(),
    ));

    let b = adaptive(&preset("table6-alpha1", &["reference.enabled=true"]));
    let last = b.trace.last().unwrap();
    let k = b.trace.records.len() - 1;
    let secs_b = loop_seconds(&b.trace);
    let mut expect = vec![
        [0, 0, 0, 0, 0],
        [0, 0, 0, 0, 1],
        [0, 0, 0, 1, 0],
        [0, 0, 1, 0, 0],
        [0, 1, 0, 0, 0],
    ];
    expect.extend([
        [1, 0, 0, 0, 0],
        [2, 0, 0, 0, 0],
        [1, 1, 0, 0, 0],
        [3, 0, 0, 0, 0],
        [2, 1, 0, 0, 0],
    ]);
    expect.extend([
        [4, 0, 0, 0, 0],
        [1, 0, 1, 0, 0],
        [5, 0, 0, 0, 0],
        [3, 1, 0, 0, 0],
        [1, 0, 0, 1, 0],
    ]);
    let want = IndexSet::from_indices(5, expect.into_iter().map(idx));
    let ok = b.trace.converged
        && k == 8
        && last.index_set == want
        && within(last.eta, 1.8534e-2, 0.1 * 1.8534e-2)
        && secs_a + secs_b <= 900.0;
    out.line(
        "3b table6 alpha 1",
        ok,
        format!(
            "K = {k}, #P = {} (15 expected, set {}), eta {:.4e} (1.8534e-2), {secs_b:.0} s",
            last.index_set.len(),
            if last.index_set == want { "matches" } else { "differs" },
            last.eta
        ),
    );
    effectivities.push(("alpha 1, reference Q2 at h_K with P_K and Q_K", b.effectivities.clone()));
    effectivities
}

fn corollary(out: &mut Outcome) {
    let cases = [
        (1, CoefficientKind::Exp, 0.2, 3, 2, 2),
        (2, CoefficientKind::Square, -0.3, 2, 1, 2),
        (2, CoefficientKind::Exp, 0.1, 3, 1, 1),
        (3, CoefficientKind::Square, 0.3, 2, 1, 1),
        (3, CoefficientKind::Exp, -0.2, 2, 2, 1),
        (1, CoefficientKind::Square, 0.0, 3, 1, 2),
    ];
    let mut worst = 0.0f64;
    for (m, kind, tilt, level, degree, extra) in cases {
        let mdl = model(kind, &[0.25, 0.15, 0.1][..m], tilt);
        let asm = q1(Rect::unit(), level);
        let p = IndexSet::complete(m, degree);
        let full = IndexSet::complete(m, degree + extra).difference(&p);
        let q = IndexSet::from_indices(m, full.iter().take(30).cloned());
        let sys = KroneckerSystem::assemble(mdl.clone(), asm.clone(), &p, 1.0).unwrap();
        let u = sys.solve(1e-12, 500).unwrap();
        let sum: f64 = parametric_estimator_b0(&sys, &u, &q).unwrap().iter().sum();
        let coupled = coupled_energy(&mdl, &asm, &q, &parametric_rhs(&sys, &u, &q).unwrap());
        worst = worst.max((sum - coupled).abs() / coupled);
    }
    out.line(
        "4 per-index sum equals coupled solve",
        worst <= 1e-10,
        format!("{} configurations, worst relative gap {worst:.1e}", cases.len()),
    );
}

fn q1(domain: Rect, level: u32) -> Arc<Assembler> {
    Arc::new(Assembler::new(Arc::new(FESpace::new(
        UniformGrid::new(domain, level).unwrap(),
        ElementKind::Q1,
    ))))
}

fn dense_of(sys: &KroneckerSystem) -> DMatrix<f64> {
    let len = sys.len();
    let mut a = DMatrix::zeros(len, len);
    for c in 0..len {
        let mut e = vec![0.0; len];
        e[c] = 1.0;
        a.set_column(c, &nalgebra::DVector::from_vec(sys.apply(&e)));
    }
    a
}

fn oracles(out: &mut Outcome) {
    let mut worst_op = 0.0f64;
    let mut worst_t = 0.0f64;
    let mut worst_b0 = 0.0f64;
    for (kind, m) in [
        (CoefficientKind::Exp, 1),
        (CoefficientKind::Exp, 2),
        (CoefficientKind::Square, 1),
        (CoefficientKind::Square, 2),
    ] {
        let mdl = model(kind, &[0.3, 0.2][..m], 0.25);
        let asm = q1(Rect::unit(), 2);
        let p = IndexSet::complete(m, 1);
        let sys = KroneckerSystem::assemble(mdl.clone(), asm.clone(), &p, 1.0).unwrap();
        let a = dense_of(&sys);
        let oracle = brute_operator(&mdl, &asm, &p, 24);
        worst_op = worst_op.max((&a - &oracle).amax() / oracle.amax());

        let scale = mdl.t_gamma(&MultiIndex::zero(m), [0.5, 0.5]).unwrap().abs();
        for g in IndexSet::complete(m, 4).iter() {
            for x in [[0.1, 0.7], [0.5, 0.5], [0.9, 0.2]] {
                let t = mdl.t_gamma(g, x).unwrap();
                worst_t = worst_t.max((t - brute_t_gamma(&mdl, g, x, 24)).abs() / scale);
            }
        }

        let u = sys.solve(1e-13, 500).unwrap();
        let q = IndexSet::complete(m, 3).difference(&p);
        let lib = parametric_estimator_b0(&sys, &u, &q).unwrap();
        let blocks: Vec<&[f64]> = (0..p.len()).map(|k| u.block(k)).collect();
        let brute = brute_b0_contributions(&mdl, &asm, &p, &blocks, &q, 24);
        let total: f64 = brute.iter().sum();
        for (l, b) in lib.iter().zip(&brute) {
            worst_b0 = worst_b0.max((l - b).abs() / total);
        }
    }
    let ok = worst_op <= 1e-9 && worst_t <= 1e-9 && worst_b0 <= 1e-9;
    out.line(
        "5 oracle equivalence",
        ok,
        format!("operator {worst_op:.1e}, t_gamma {worst_t:.1e}, per-index B0 {worst_b0:.1e} (relative)"),
    );
}

fn kernel(out: &mut Outcome) {
    let (x, w) = composite_gauss_legendre(-1.0, 1.0, 16, 20);
    let mut worst_orth = 0.0f64;
    for sigma0 in [0.5, 1.0, 2.0] {
        let b = UnivariateBasis::new(sigma0, 30).unwrap();
        let mut g = DMatrix::<f64>::zeros(21, 21);
        for (&y, &wy) in x.iter().zip(&w) {
            let p = nalgebra::DVector::from_vec(b.eval(20, y));
            g += &p * p.transpose() * (wy * b.density(y));
        }
        worst_orth = worst_orth.max((g - DMatrix::identity(21, 21)).amax());
    }
    let b = UnivariateBasis::new(1.0, 30).unwrap();
    let mut zeros_ok = true;
    for i in 0..=12 {
        for j in 0..=12 {
            for k in 0..=12 {
                if !triangle_ok(i, j, k) {
                    zeros_ok &= triple_product(&b, i, j, k).unwrap() == 0.0;
                }
            }
        }
    }
    let mut nb_ok = true;
    for m in 1..=5 {
        for d in 0..=3 {
            let p = IndexSet::complete(m, d);
            nb_ok &= p.neighborhood(&p) == IndexSet::complete(m, 2 * d);
        }
    }
    out.line(
        "6 polynomial kernel",
        worst_orth <= 1e-10 && zeros_ok && nb_ok,
        format!(
            "orthonormality {worst_orth:.1e}, triangle zeros exact: {zeros_ok}, N(P_Md, P_Md) = P_M2d for M <= 5, d <= 3: {nb_ok}"
        ),
    );
}

fn degenerate(out: &mut Outcome) {
    let basis = Arc::new(UnivariateBasis::new(1.0, 30).unwrap());
    let mut ok = true;
    let mut worst_block = 0.0f64;
    let mut worst_est = 0.0f64;
    for kind in [CoefficientKind::Exp, CoefficientKind::Square] {
        let a0 = SpatialFn::Linear { c: 0.8, g: [0.3, -0.2] };
        let field = AffineField::new(Rect::unit(), a0, vec![SpatialFn::Constant(0.0); 3]);
        let mdl = Arc::new(CoefficientModel::new(kind, field, basis.clone()).unwrap());
        let p = IndexSet::complete(3, 2);
        let sys = KroneckerSystem::assemble(mdl.clone(), q1(Rect::unit(), 3), &p, 1.0).unwrap();
        let u = sys.solve(1e-10, 500).unwrap();
        let scale = u.block(0).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (k, a) in p.iter().enumerate() {
            if !a.is_zero() {
                worst_block = worst_block.max(u.block(k).iter().fold(0.0f64, |s, v| s.max(v.abs())) / scale);
            }
        }
        let q = detail_index_set(&p, &mdl);
        for form in [AuxForm::B0, AuxForm::B1] {
            let rep = estimate(&sys, &u, &q, form).unwrap();
            worst_est = worst_est.max(rep.parametric_sq.abs() / rep.spatial_sq);
        }

        let zero = KroneckerSystem::assemble(mdl.clone(), q1(Rect::unit(), 3), &p, 0.0).unwrap();
        let uz = zero.solve(1e-10, 500).unwrap();
        let rep = estimate(&zero, &uz, &q, AuxForm::B0).unwrap();
        ok &= uz.coefficients.iter().all(|&v| v == 0.0) && rep.eta == 0.0;
    }
    let contrib: Vec<(MultiIndex, f64)> = (1..=40).map(|k| (MultiIndex::new(vec![k]), 1.0 / k as f64)).collect();
    ok &= doerfler_mark(&contrib, 1.0).len() == contrib.len();
    ok &= worst_block <= 1e-12 && worst_est <= 1e-10;
    out.line(
        "7 degenerate inputs",
        ok,
        format!("parameter-free blocks {worst_block:.1e}, parametric estimates {worst_est:.1e}, zero forcing and theta = 1 exact"),
    );
}

fn effectivity_range(out: &mut Outcome, runs: &[(&str, Vec<f64>)]) {
    let ok = runs
        .iter()
        .all(|(_, th)| !th.is_empty() && th.iter().all(|&t| t > 0.5 && t < 2.5));
    let detail = runs
        .iter()
        .map(|(label, th)| format!("{label}: {}", fmt(th)))
        .collect::<Vec<_>>()
        .join("; ");
    out.line("8 adaptive effectivity in (0.5, 2.5)", ok, detail);
}

fn table5(out: &mut Outcome) {
    let mut ok = true;
    let mut detail = Vec::new();
    for sigma in ["0.8", "1"] {
        let name = format!("table5-sigma{sigma}");
        let a = adaptive(&preset(&name, &[]));
        ok &= a.trace.converged && a.parametric_refinements() >= 1;
        detail.push(format!(
            "sigma {sigma}: {} parametric refinement(s)",
            a.parametric_refinements()
        ));
        let relaxed = adaptive(&preset(&name, &["adaptive.epsilon=4e-2"]));
        println!(
            "info table5 sigma {sigma} at epsilon 4e-2: {} parametric refinement(s), K = {}",
            relaxed.parametric_refinements(),
            relaxed.trace.records.len() - 1
        );
    }
    out.line(
        "table5 one parametric refinement at epsilon 2e-2",
        ok,
        detail.join(", "),
    );
}

fn main() {
    // `cargo test -- --list` and filters: nothing to enumerate
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut out = Outcome { failed: Vec::new() };
    let t = Instant::now();
    kernel(&mut out);
    oracles(&mut out);
    corollary(&mut out);
    degenerate(&mut out);
    table1(&mut out);
    table3(&mut out);
    let runs = table6(&mut out);
    effectivity_range(&mut out, &runs);
    table5(&mut out);
    println!("acceptance finished in {:.0} s", t.elapsed().as_secs_f64());
    if !out.failed.is_empty() {
        eprintln!("failed: {}", out.failed.join(", "));
        std::process::exit(1);
    }
}
