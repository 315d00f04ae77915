//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p vgc-lab --test acceptance -- --nocapture` to see
//! every line; failures repeat their lines in the panic message.

use std::sync::OnceLock;

use rand::RngExt;
use rand_chacha::ChaCha12Rng;

use vgc_lab::check::{panelled_quadrature, random_case, run_checks};
use vgc_lab::cli::{Overrides, build_scenario, config_from_str, render_csv};
use vgc_lab::estimators::{gauss_expectation, vgc_closed_form, vgc_mc};
use vgc_lab::experiments::{
    AggregateStats, EstimatorKind, HPolicy, Scenario, ScenarioKind, SweepAxis, run_replications,
    run_replications_detailed, sweep,
};
use vgc_lab::model::{
    BindingChoice, CoupledLp, FdOrder, Matrix, PerturbationSpec, ProblemInstance, Sense,
    Subproblem, WeaklyCoupledVars,
};
use vgc_lab::normal;
use vgc_lab::policies::AffinePolicy;
use vgc_lab::rng::StreamKey;
use vgc_lab::solvers::{coordinate_path, solve};

const FIG1_SEED: u64 = 20_240_001;
const FIG1_REPS: usize = 200_000;

fn figure1_scenario(h_policy: HPolicy, order: FdOrder, replications: usize) -> Scenario {
    Scenario {
        name: "figure1".into(),
        kind: ScenarioKind::SelectionToy {
            n: 100,
            plus_count: 14,
            per_sample_variance: 2.0,
            s_samples: Some(3),
        },
        policies: vec![AffinePolicy::Saa],
        estimators: vec![
            EstimatorKind::InSample,
            EstimatorKind::Oracle,
            EstimatorKind::Cv,
            EstimatorKind::CvOracle,
            EstimatorKind::VgcClosedForm,
        ],
        h_policy,
        folds: 3,
        order,
        draws: 8,
        replications,
        master_seed: FIG1_SEED,
        snr_override: None,
    }
}

fn figure1_run() -> &'static AggregateStats {
    static RUN: OnceLock<AggregateStats> = OnceLock::new();
    RUN.get_or_init(|| {
        let sc = figure1_scenario(HPolicy::InvSixthRoot, FdOrder::Second, FIG1_REPS);
        run_replications(&sc, 0).expect("figure-1 scenario must run")
    })
}

struct Criterion {
    label: String,
    failures: Vec<String>,
}

impl Criterion {
    fn new(label: &str) -> Self {
        Criterion {
            label: label.into(),
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl AsRef<str>) {
        let what = what.as_ref();
        println!(
            "  [{}] {}: {}",
            self.label,
            if ok { "pass" } else { "FAIL" },
            what
        );
        if !ok {
            self.failures.push(what.to_string());
        }
    }

    fn finish(self) {
        if self.failures.is_empty() {
            println!("[{}] PASS", self.label);
        } else {
            println!("[{}] FAIL", self.label);
            panic!("[{}] FAIL:\n  {}", self.label, self.failures.join("\n  "));
        }
    }
}

#[test]
fn criterion_1_figure1_reproduction() {
    let stats = figure1_run();
    let mut c = Criterion::new("criterion 1: figure-1 reproduction, h = n^-1/6");
    let mean = |name: &str| stats.cell(name, 0).unwrap().mean;

    let in_sample = mean("in_sample");
    c.check(
        (in_sample - 18.36).abs() <= 0.05,
        format!("mean in-sample {in_sample:.4} within 18.36 +/- 0.05"),
    );
    let oracle = mean("oracle");
    c.check(
        (oracle - 2.97).abs() <= 0.05,
        format!("mean oracle {oracle:.4} within 2.97 +/- 0.05"),
    );
    let cv = mean("cv");
    c.check(
        (cv + 1.86).abs() <= 0.10,
        format!("mean loo-cv {cv:.4} within -1.86 +/- 0.10"),
    );
    let cv_oracle = mean("cv_oracle");
    c.check(
        (cv_oracle + 1.87).abs() <= 0.10,
        format!("mean oracle of the cv-trained policy {cv_oracle:.4} within -1.87 +/- 0.10"),
    );
    let debiased = mean("vgc_cf2");
    let removed = 100.0 * (1.0 - (debiased - oracle).abs() / (in_sample - oracle));
    c.check(
        (debiased - 2.95).abs() <= 0.15,
        format!(
            "mean debiased {debiased:.4} within 2.95 +/- 0.15 (order-2 closed form at h = {:.4}; \
             the analytic expectation of this estimator at this step size is 0.862, so the window \
             is out of reach at h = n^-1/6 -- see the step-size study in the README)",
            stats.h
        ),
    );
    c.check(
        (debiased - oracle).abs() <= 0.20,
        format!(
            "|debiased - oracle| = {:.4} <= 0.20 ({removed:.1}% of the in-sample bias removed)",
            (debiased - oracle).abs()
        ),
    );
    c.finish();
}

/// Companion to criterion 1: the same pipeline reproduces the reference
/// numbers once the step size is small enough for the second-order scheme.
#[test]
fn figure1_reproduction_at_small_step() {
    let sc = figure1_scenario(HPolicy::Fixed(0.03), FdOrder::Second, FIG1_REPS);
    let stats = run_replications(&sc, 0).expect("figure-1 scenario must run");
    let mut c = Criterion::new("figure-1 reproduction at fixed h = 0.03");
    let oracle = stats.cell("oracle", 0).unwrap().mean;
    let debiased = stats.cell("vgc_cf2", 0).unwrap().mean;
    c.check(
        (debiased - 2.95).abs() <= 0.15,
        format!("mean debiased {debiased:.4} within 2.95 +/- 0.15"),
    );
    c.check(
        (debiased - oracle).abs() <= 0.20,
        format!(
            "|debiased - oracle| = {:.4} <= 0.20",
            (debiased - oracle).abs()
        ),
    );
    c.finish();
}

#[test]
fn criterion_2_analytic_oracles() {
    let stats = figure1_run();
    let mut c = Criterion::new("criterion 2: analytic oracles");
    let nu: f64 = 1.5;
    let root = nu.sqrt();
    // closed forms for the 14/86 toy: rectified means for the in-sample
    // value, tail masses for the oracle
    let term_in = |mu: f64| mu * normal::cdf(mu * root) + normal::pdf(mu * root) / root;
    let analytic_in = 14.0 * term_in(1.0) + 86.0 * term_in(-1.0);
    let analytic_or = 14.0 * normal::cdf(root) - 86.0 * normal::cdf(-root);
    c.check(
        (analytic_in - 18.36).abs() < 0.01 && (analytic_or - 2.97).abs() < 0.01,
        format!("closed forms evaluate to {analytic_in:.4} and {analytic_or:.4}"),
    );

    let cell_in = stats.cell("in_sample", 0).unwrap();
    c.check(
        (cell_in.mean - analytic_in).abs() <= 3.0 * cell_in.std_err,
        format!(
            "simulated in-sample {:.4} vs analytic {analytic_in:.4} within 3 se ({:.4})",
            cell_in.mean, cell_in.std_err
        ),
    );
    let cell_or = stats.cell("oracle", 0).unwrap();
    c.check(
        (cell_or.mean - analytic_or).abs() <= 3.0 * cell_or.std_err,
        format!(
            "simulated oracle {:.4} vs analytic {analytic_or:.4} within 3 se ({:.4})",
            cell_or.mean, cell_or.std_err
        ),
    );
    // independent leave-one-out closed form: training means carry precision
    // nu (S-1)/S = 1, and the held-out sample is independent of them
    let analytic_cv = 14.0 * normal::cdf(1.0) - 86.0 * normal::cdf(-1.0);
    let cell_cv = stats.cell("cv", 0).unwrap();
    c.check(
        (cell_cv.mean - analytic_cv).abs() <= 3.0 * cell_cv.std_err,
        format!(
            "simulated loo-cv {:.4} vs analytic {analytic_cv:.4} within 3 se ({:.4})",
            cell_cv.mean, cell_cv.std_err
        ),
    );
    c.finish();
}

#[test]
fn criterion_3_closed_form_correctness() {
    let mut c = Criterion::new("criterion 3: closed-form correction correctness");

    // quadrature of the defining integral on 50 random coordinate paths
    let mut rng = StreamKey::new(33_001).child(1).rng();
    let mut done = 0usize;
    let mut worst = 0.0f64;
    while done < 50 {
        let case = random_case(&mut rng, false);
        let (a, _) = case
            .policy
            .coefficients_with(case.obs.effective_nu(), case.spec.covariates())
            .unwrap();
        let sign = case.inst.sense().sign();
        let a_c: Vec<f64> = a.iter().map(|v| sign * v).collect();
        let r = case.policy.plugin_costs(case.obs.z(), &case.spec).unwrap();
        let Some(j) = (0..case.inst.n()).find(|&j| a_c[j] != 0.0) else {
            continue;
        };
        let path = coordinate_path(&case.inst, &r, j, sign * a_c[j]).unwrap();
        let sigma = PerturbationSpec::new(case.h, FdOrder::First, 1)
            .unwrap()
            .sigma(case.obs.effective_nu()[j]);
        let closed = gauss_expectation(&path, sigma) - path.value_at(0.0);
        let f = |t: f64| {
            let mut rt = r.clone();
            rt[j] += a_c[j] * sign * t;
            (solve(&case.inst, &rt).unwrap().value - path.value_at(0.0)) * normal::pdf(t / sigma)
                / sigma
        };
        let quad = panelled_quadrature(&f, -8.0 * sigma, 8.0 * sigma, 64, 1e-10);
        worst = worst.max((closed - quad).abs() / (1.0 + closed.abs()));
        done += 1;
    }
    c.check(
        worst <= 1e-6,
        format!("50 paths vs quadrature, worst relative error {worst:.2e}"),
    );

    // 1e5-draw Monte Carlo on 100 random instances, both orders
    let mut rng = StreamKey::new(33_002).child(2).rng();
    let mut bad = 0usize;
    let mut compared = 0usize;
    for i in 0..100 {
        let case = random_case(&mut rng, false);
        let order = if i % 2 == 0 {
            FdOrder::First
        } else {
            FdOrder::Second
        };
        let pert = PerturbationSpec::new(case.h, order, 100_000).unwrap();
        let cf = vgc_closed_form(&case.inst, &case.policy, &case.obs, &case.spec, &pert).unwrap();
        let mc = vgc_mc(
            &case.inst,
            &case.policy,
            &case.obs,
            &case.spec,
            &pert,
            rng.random(),
        )
        .unwrap();
        let se = mc.mc_std_err.unwrap();
        // exact corrections carry breakpoint tail mass that 1e5 draws cannot
        // resolve when the crossing probability is far below 1/draws; allow
        // that resolution floor on top of the 4-se band
        let floor = 1e-4;
        for jj in 0..case.inst.n() {
            if cf.components[jj] == 0.0 && mc.components[jj] == 0.0 {
                continue;
            }
            compared += 1;
            let tol = (4.0 * se[jj]).max(floor * (1.0 + cf.components[jj].abs()));
            if (cf.components[jj] - mc.components[jj]).abs() > tol {
                bad += 1;
            }
        }
    }
    c.check(
        bad == 0,
        format!("100 instances, {compared} per-coordinate comparisons vs 1e5-draw mc, {bad} outside 4 se"),
    );
    c.finish();
}

#[test]
fn criterion_4_bias_decay_in_h() {
    let mut c = Criterion::new("criterion 4: first-order bias decay over h");
    let grid = [0.3, 0.1, 0.03];
    let reps = 100_000;
    let mut bias = Vec::new();
    let mut se = Vec::new();
    for &h in &grid {
        let mut sc = figure1_scenario(HPolicy::Fixed(h), FdOrder::First, reps);
        sc.estimators = vec![EstimatorKind::Oracle, EstimatorKind::VgcClosedForm];
        let (_, detail) = run_replications_detailed(&sc, 0).unwrap();
        let deb = detail.column("vgc_cf1", 0).unwrap();
        let orc = detail.column("oracle", 0).unwrap();
        // paired difference per replication
        let diffs: Vec<f64> = deb.iter().zip(orc).map(|(d, o)| d - o).collect();
        let mean = diffs.iter().sum::<f64>() / reps as f64;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        bias.push(mean);
        se.push((var / reps as f64).sqrt());
    }
    println!(
        "  biases at h = {{0.3, 0.1, 0.03}}: {:.4} ({:.4}), {:.4} ({:.4}), {:.4} ({:.4})",
        bias[0], se[0], bias[1], se[1], bias[2], se[2]
    );
    for i in 0..2 {
        let gap = bias[i].abs() - bias[i + 1].abs();
        let margin = 2.0 * (se[i] * se[i] + se[i + 1] * se[i + 1]).sqrt();
        c.check(
            gap > margin,
            format!(
                "|bias|({}) - |bias|({}) = {gap:.4} exceeds 2 se = {margin:.4}",
                grid[i],
                grid[i + 1]
            ),
        );
    }
    c.finish();
}

#[test]
fn criterion_5_relative_rmse_decay_in_n() {
    let mut c = Criterion::new("criterion 5: relative rmse decay over n");
    let base = Scenario {
        name: "coupled_lp".into(),
        kind: ScenarioKind::CoupledLpRandom {
            n: 200,
            rows: 1,
            a_range: (0.5, 1.5),
            mu_range: (-1.0, 1.0),
            nu_range: (0.5, 2.0),
            target_activity: 0.5,
            s_samples: None,
        },
        policies: vec![AffinePolicy::Saa],
        estimators: vec![EstimatorKind::Oracle, EstimatorKind::VgcClosedForm],
        h_policy: HPolicy::InvFourthRoot,
        folds: 2,
        order: FdOrder::Second,
        draws: 8,
        replications: 200,
        master_seed: 7700,
        snr_override: None,
    };
    let points = sweep(&base, SweepAxis::N, &[200.0, 800.0, 3200.0], 0).unwrap();
    let rel: Vec<f64> = points
        .iter()
        .map(|p| {
            let deb = p.stats.cell("vgc_cf2", 0).unwrap();
            let orc = p.stats.cell("oracle", 0).unwrap();
            deb.rmse / orc.mean.abs()
        })
        .collect();
    println!(
        "  relative rmse at n = {{200, 800, 3200}}: {:.4}, {:.4}, {:.4}",
        rel[0], rel[1], rel[2]
    );
    c.check(
        rel[0] > rel[1] && rel[1] > rel[2],
        "relative rmse strictly decreasing across n",
    );
    c.finish();
}

// ---- criterion 6: brute-force oracles ------------------------------------

fn brute_force_selection(r_c: &[f64]) -> f64 {
    let n = r_c.len();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << n) {
        let v: f64 = (0..n).filter(|j| mask >> j & 1 == 1).map(|j| r_c[j]).sum();
        best = best.max(v);
    }
    best
}

fn brute_force_wcv(w: &WeaklyCoupledVars, r_c: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (b, binding) in w.bindings.iter().enumerate() {
        let base: f64 = w
            .binding_indices
            .iter()
            .zip(&binding.x0)
            .map(|(&j, x)| r_c[j] * x)
            .sum();
        // odometer over all candidate combinations, not per-block maxima
        let counts: Vec<usize> = w
            .subproblems
            .iter()
            .map(|s| s.candidates[b].len())
            .collect();
        let mut idx = vec![0usize; counts.len()];
        loop {
            let mut total = base;
            for (k, sub) in w.subproblems.iter().enumerate() {
                let cand = &sub.candidates[b][idx[k]];
                total += sub
                    .indices
                    .iter()
                    .zip(cand)
                    .map(|(&j, x)| r_c[j] * x)
                    .sum::<f64>();
            }
            best = best.max(total);
            let mut k = 0;
            loop {
                if k == counts.len() {
                    break;
                }
                idx[k] += 1;
                if idx[k] < counts[k] {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == counts.len() {
                break;
            }
        }
    }
    best
}

/// Enumerate candidate vertices: a fractional support F with |F| <= m, a 0/1
/// assignment elsewhere, and a binding row subset of size |F| solving the
/// square system exactly.
fn brute_force_lp(lp: &CoupledLp, r_c: &[f64]) -> f64 {
    let n = lp.n();
    let m = lp.m();
    let nf = n as f64;
    let feasible = |x: &[f64]| -> bool {
        (0..m).all(|i| (0..n).map(|j| lp.a.get(i, j) * x[j]).sum::<f64>() / nf <= lp.b[i] + 1e-9)
    };
    let value = |x: &[f64]| -> f64 { r_c.iter().zip(x).map(|(r, x)| r * x).sum() };
    let mut best = f64::NEG_INFINITY;

    let mut supports: Vec<Vec<usize>> = vec![vec![]];
    for j in 0..n {
        supports.push(vec![j]);
    }
    if m >= 2 {
        for j in 0..n {
            for k in j + 1..n {
                supports.push(vec![j, k]);
            }
        }
    }
    let rows_choices = |f: usize| -> Vec<Vec<usize>> {
        match (f, m) {
            (1, 1) => vec![vec![0]],
            (1, 2) => vec![vec![0], vec![1]],
            (2, 2) => vec![vec![0, 1]],
            _ => vec![],
        }
    };

    let mut x = vec![0.0; n];
    for support in &supports {
        let fixed: Vec<usize> = (0..n).filter(|j| !support.contains(j)).collect();
        for mask in 0u32..(1 << fixed.len()) {
            for (pos, &j) in fixed.iter().enumerate() {
                x[j] = if mask >> pos & 1 == 1 { 1.0 } else { 0.0 };
            }
            if support.is_empty() {
                if feasible(&x) {
                    best = best.max(value(&x));
                }
                continue;
            }
            for rows in rows_choices(support.len()) {
                // solve A[rows, support] * x_support = n b[rows] - fixed part
                let rhs: Vec<f64> = rows
                    .iter()
                    .map(|&i| {
                        nf * lp.b[i] - fixed.iter().map(|&j| lp.a.get(i, j) * x[j]).sum::<f64>()
                    })
                    .collect();
                let sol = match support.len() {
                    1 => {
                        let a = lp.a.get(rows[0], support[0]);
                        if a.abs() < 1e-12 {
                            None
                        } else {
                            Some(vec![rhs[0] / a])
                        }
                    }
                    2 => {
                        let a00 = lp.a.get(rows[0], support[0]);
                        let a01 = lp.a.get(rows[0], support[1]);
                        let a10 = lp.a.get(rows[1], support[0]);
                        let a11 = lp.a.get(rows[1], support[1]);
                        let det = a00 * a11 - a01 * a10;
                        if det.abs() < 1e-12 {
                            None
                        } else {
                            Some(vec![
                                (rhs[0] * a11 - rhs[1] * a01) / det,
                                (a00 * rhs[1] - a10 * rhs[0]) / det,
                            ])
                        }
                    }
                    _ => None,
                };
                let Some(vals) = sol else { continue };
                if !vals.iter().all(|v| (-1e-9..=1.0 + 1e-9).contains(v)) {
                    continue;
                }
                for (&j, v) in support.iter().zip(&vals) {
                    x[j] = v.clamp(0.0, 1.0);
                }
                if feasible(&x) {
                    best = best.max(value(&x));
                }
                for &j in support {
                    x[j] = 0.0;
                }
            }
        }
    }
    best
}

fn random_small_instance(rng: &mut ChaCha12Rng, which: usize) -> (ProblemInstance, Vec<f64>) {
    let sense = if rng.random::<bool>() {
        Sense::Maximize
    } else {
        Sense::Minimize
    };
    match which {
        0 => {
            let n = rng.random_range(2..=8usize);
            let r = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            (ProblemInstance::Selection { n, sense }, r)
        }
        1 => {
            // regenerate until ingestion accepts (mixed-sign rows can come
            // out jointly infeasible, which ingestion rejects exactly)
            let lp = loop {
                let n = rng.random_range(2..=8usize);
                let m = rng.random_range(1..=2usize);
                let mut a = vec![0.0; m * n];
                for v in a.iter_mut() {
                    *v = if rng.random::<f64>() < 0.15 {
                        rng.random_range(-0.6..0.0)
                    } else {
                        rng.random_range(0.2..1.5)
                    };
                }
                let a = Matrix::new(m, n, a).unwrap();
                let b: Vec<f64> = (0..m)
                    .map(|i| {
                        let row = a.row(i);
                        let lo: f64 = row.iter().map(|v| v.min(0.0)).sum::<f64>() / n as f64;
                        let hi: f64 = row.iter().map(|v| v.max(0.0)).sum::<f64>() / n as f64;
                        lo + rng.random_range(0.1..1.1) * (hi - lo)
                    })
                    .collect();
                if let Ok(lp) = CoupledLp::new(a, b, Sense::Maximize) {
                    break lp;
                }
            };
            let r = (0..lp.n()).map(|_| rng.random_range(-2.0..2.0)).collect();
            (ProblemInstance::CoupledLp(lp), r)
        }
        _ => {
            let binding_len = rng.random_range(0..=2usize);
            let n_bindings = rng.random_range(1..=3usize);
            let blocks = rng.random_range(1..=2usize);
            let mut next = binding_len;
            let mut subs = Vec::new();
            for _ in 0..blocks {
                let len = rng.random_range(1..=3usize);
                let indices: Vec<usize> = (next..next + len).collect();
                next += len;
                let candidates = (0..n_bindings)
                    .map(|_| {
                        (0..rng.random_range(1..=4usize))
                            .map(|_| (0..len).map(|_| rng.random::<f64>()).collect())
                            .collect()
                    })
                    .collect();
                subs.push(Subproblem {
                    indices,
                    candidates,
                });
            }
            let bindings = (0..n_bindings)
                .map(|_| BindingChoice {
                    x0: (0..binding_len)
                        .map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 })
                        .collect(),
                })
                .collect();
            let w = WeaklyCoupledVars::new((0..binding_len).collect(), bindings, subs, next, sense)
                .unwrap();
            let r = (0..next).map(|_| rng.random_range(-2.0..2.0)).collect();
            (ProblemInstance::WeaklyCoupledVars(w), r)
        }
    }
}

#[test]
fn criterion_6_solver_exactness() {
    let mut c = Criterion::new("criterion 6: solver exactness vs brute force");
    let mut rng = StreamKey::new(66_006).child(1).rng();
    let mut worst = 0.0f64;
    let mut worst_gap = 0.0f64;
    let mut lp_count = 0usize;
    for i in 0..500 {
        let (inst, r) = random_small_instance(&mut rng, i % 3);
        let sol = solve(&inst, &r).unwrap();
        let r_c: Vec<f64> = r.iter().map(|v| inst.sense().sign() * v).collect();
        let brute = match &inst {
            ProblemInstance::Selection { .. } => brute_force_selection(&r_c),
            ProblemInstance::WeaklyCoupledVars(w) => brute_force_wcv(w, &r_c),
            ProblemInstance::CoupledLp(lp) => {
                lp_count += 1;
                let lambda = sol.dual.as_ref().unwrap();
                let nf = lp.n() as f64;
                let mut nl: f64 = lambda.iter().zip(&lp.b).map(|(l, b)| nf * b * l).sum();
                for j in 0..lp.n() {
                    let col = lp.col(j);
                    let rc = r_c[j] - col.iter().zip(lambda).map(|(a, l)| a * l).sum::<f64>();
                    nl += rc.max(0.0);
                }
                worst_gap = worst_gap.max((sol.value - nl).abs() / (1.0 + sol.value.abs()));
                brute_force_lp(lp, &r_c)
            }
        };
        worst = worst.max((sol.value - brute).abs() / (1.0 + brute.abs()));
    }
    c.check(
        worst <= 1e-6,
        format!("500 instances, worst relative deviation {worst:.2e}"),
    );
    c.check(
        worst_gap <= 1e-6,
        format!("{lp_count} coupled LP solves, worst relative duality gap {worst_gap:.2e}"),
    );
    c.finish();
}

#[test]
fn criterion_7_property_suites() {
    let mut c = Criterion::new("criterion 7: property suites, 1000 cases each");
    let report = run_checks(77_007, 1000);
    for want in [
        "path_monotonicity",
        "path_convexity",
        "subgradient_bracket",
        "vgc_bound",
        "lm_zero",
        "sigma_identity",
    ] {
        let s = report.sections.iter().find(|s| s.name == want).unwrap();
        c.check(
            s.violations == 0 && s.cases >= 1000,
            format!("{}: {} cases, {} violations", s.name, s.cases, s.violations),
        );
    }
    for extra in [
        "path_solve_consistency",
        "strong_duality",
        "closed_form_vs_quadrature",
    ] {
        let s = report.sections.iter().find(|s| s.name == extra).unwrap();
        c.check(
            s.violations == 0,
            format!("{}: {} cases, {} violations", s.name, s.cases, s.violations),
        );
    }
    c.finish();
}

#[test]
fn criterion_8_byte_identical_csv_across_workers() {
    let mut c = Criterion::new("criterion 8: deterministic csv across worker counts");
    let cfg = config_from_str(
        r#"{
            "scenario": "figure1",
            "estimators": ["in_sample", "oracle", "cv", "cv_oracle", "vgc_cf", "vgc_mc", "stein"],
            "h_policy": "n^-1/6",
            "folds": 3,
            "order": 2,
            "draws": 16,
            "replications": 400,
            "seed": 808
        }"#,
    )
    .unwrap();
    let scenario = build_scenario(&cfg, &Overrides::default()).unwrap();
    let render = |workers: usize| {
        let stats = run_replications(&scenario, workers).unwrap();
        render_csv(&[(None, &stats)])
    };
    let w1 = render(1);
    let w4 = render(4);
    let w8 = render(8);
    c.check(w1 == w4, "workers 1 vs 4 byte-identical");
    c.check(w1 == w8, "workers 1 vs 8 byte-identical");
    c.check(w1 == render(1), "rerun at workers 1 byte-identical");
    c.check(
        w1.len() > 400,
        format!("csv carries content ({} bytes)", w1.len()),
    );
    c.finish();
}
