//! Fast invariant suite: randomized structural checks over solvers, paths,
//! and corrections. Run by `vgc-lab check` and reused verbatim by the
//! acceptance tests.

use rand::RngExt;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::estimators::{gauss_expectation, vgc_closed_form, vgc_mc};
use crate::model::{
    BindingChoice, CoupledLp, DataSpec, FdOrder, Matrix, Observation, PerturbationSpec,
    ProblemInstance, Sense, Subproblem, WeaklyCoupledVars,
};
use crate::normal;
use crate::policies::AffinePolicy;
use crate::rng::{StreamKey, purpose};
use crate::solvers::{CoordinatePath, coordinate_path, solve};

#[derive(Debug, Clone, Serialize)]
pub struct CheckSection {
    pub name: String,
    pub cases: usize,
    pub violations: usize,
    pub detail: Option<String>,
}

impl CheckSection {
    fn new(name: &str) -> Self {
        CheckSection {
            name: name.into(),
            cases: 0,
            violations: 0,
            detail: None,
        }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.violations += 1;
            if self.detail.is_none() {
                self.detail = Some(detail());
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub sections: Vec<CheckSection>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.sections.iter().all(|s| s.violations == 0)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.sections {
            let status = if s.violations == 0 { "PASS" } else { "FAIL" };
            out.push_str(&format!(
                "check {:<28} {:>5} cases  {:>3} violations  {status}\n",
                s.name, s.cases, s.violations
            ));
            if let Some(d) = &s.detail {
                out.push_str(&format!("    first violation: {d}\n"));
            }
        }
        let overall = if self.passed() { "PASS" } else { "FAIL" };
        out.push_str(&format!("overall: {overall}\n"));
        out
    }
}

/// One randomized test case: an instance, plug-in slopes, canonical costs.
pub struct CheckCase {
    pub inst: ProblemInstance,
    pub spec: DataSpec,
    pub obs: Observation,
    pub policy: AffinePolicy,
    pub h: f64,
}

fn random_wcv(rng: &mut ChaCha12Rng) -> ProblemInstance {
    let binding_len = rng.random_range(0..=2usize);
    let blocks = rng.random_range(1..=2usize);
    let mut next = binding_len;
    let mut subs = Vec::new();
    let n_bindings = rng.random_range(1..=3usize);
    for _ in 0..blocks {
        let len = rng.random_range(1..=3usize);
        let indices: Vec<usize> = (next..next + len).collect();
        next += len;
        let candidates = (0..n_bindings)
            .map(|_| {
                let cands = rng.random_range(1..=4usize);
                (0..cands)
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
    let sense = if rng.random::<bool>() {
        Sense::Maximize
    } else {
        Sense::Minimize
    };
    ProblemInstance::WeaklyCoupledVars(
        WeaklyCoupledVars::new((0..binding_len).collect(), bindings, subs, next, sense)
            .expect("randomized blocks partition by construction"),
    )
}

/// Random small instance over one of the three families.
pub fn random_case(rng: &mut ChaCha12Rng, lp_only_positive: bool) -> CheckCase {
    let variant = rng.random_range(0..3usize);
    let inst = match variant {
        0 => {
            let n = rng.random_range(2..=8usize);
            let sense = if rng.random::<bool>() {
                Sense::Maximize
            } else {
                Sense::Minimize
            };
            ProblemInstance::Selection { n, sense }
        }
        1 => {
            let n = rng.random_range(2..=8usize);
            let mut a = vec![0.0; n];
            for v in a.iter_mut() {
                *v = rng.random_range(0.3..1.5);
            }
            if !lp_only_positive && rng.random::<f64>() < 0.3 {
                a[rng.random_range(0..n)] = -rng.random_range(0.1..0.8);
            }
            let b = rng.random_range(0.1..0.8) * a.iter().sum::<f64>() / n as f64;
            let lp =
                CoupledLp::new(Matrix::new(1, n, a).unwrap(), vec![b], Sense::Maximize).unwrap();
            ProblemInstance::CoupledLp(lp)
        }
        _ => random_wcv(rng),
    };
    let n = inst.n();
    let mut nu: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..2.0)).collect();
    nu[0] = rng.random_range(0.2..0.9); // keep the smallest precision below one
    let mu: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w = Matrix::new(n, 1, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let spec = DataSpec::new(mu, nu.clone())
        .unwrap()
        .with_covariates(w)
        .unwrap();
    let z: Vec<f64> = (0..n)
        .map(|j| {
            let g: f64 = rng.sample(StandardNormal);
            spec.mu()[j] + g / nu[j].sqrt()
        })
        .collect();
    let obs = Observation::direct(z, nu).unwrap();
    let policy = match rng.random_range(0..3usize) {
        0 => AffinePolicy::Saa,
        1 => AffinePolicy::MixedEffects {
            tau: rng.random_range(0.0..2.0),
            beta: vec![rng.random_range(-1.0..1.0)],
        },
        _ => AffinePolicy::Saa,
    };
    let h = rng.random_range(0.02..0.35);
    CheckCase {
        inst,
        spec,
        obs,
        policy,
        h,
    }
}

fn canonical_slopes(case: &CheckCase) -> Vec<f64> {
    let (a, _) = case
        .policy
        .coefficients_with(case.obs.effective_nu(), case.spec.covariates())
        .expect("check policies always evaluate");
    let sign = case.inst.sense().sign();
    a.into_iter().map(|v| sign * v).collect()
}

fn user_costs(case: &CheckCase) -> Vec<f64> {
    case.policy
        .plugin_costs(case.obs.z(), &case.spec)
        .expect("check policies always evaluate")
}

/// Monotonicity of the solution coordinate along its own path: canonical
/// slopes never decrease, so x_j moves with the sign of a_j.
pub fn check_path_monotonicity<'a>(
    paths: impl IntoIterator<Item = (&'a CoordinatePath, f64)>,
) -> CheckSection {
    let mut section = CheckSection::new("path_monotonicity");
    for (path, a_j) in paths {
        let ok = path
            .pieces
            .windows(2)
            .all(|w| (w[1].x_j - w[0].x_j) * a_j.signum() >= -1e-12);
        section.record(ok, || {
            format!("coordinate {} with a_j = {a_j}", path.coordinate)
        });
    }
    section
}

/// Convexity of the canonical value along the path (the orientation-adjusted
/// concavity of the minimize form): slopes non-decreasing.
pub fn check_path_convexity<'a>(
    paths: impl IntoIterator<Item = &'a CoordinatePath>,
) -> CheckSection {
    let mut section = CheckSection::new("path_convexity");
    for path in paths {
        let ok = path
            .pieces
            .windows(2)
            .all(|w| w[1].slope >= w[0].slope - 1e-9);
        section.record(ok, || format!("coordinate {}", path.coordinate));
    }
    section
}

/// Run the full suite with `cases` randomized cases per section.
pub fn run_checks(seed: u64, cases: usize) -> CheckReport {
    let key = StreamKey::new(seed).child(purpose::CHECK);
    let mut sections = Vec::new();

    // collect paths once for the two path-shape sections
    {
        let mut rng = key.child(1).rng();
        let mut paths: Vec<(CoordinatePath, f64)> = Vec::with_capacity(cases);
        let mut built = 0usize;
        while built < cases {
            let case = random_case(&mut rng, false);
            let a_c = canonical_slopes(&case);
            let r = user_costs(&case);
            let js: Vec<usize> = (0..case.inst.n()).filter(|&j| a_c[j] != 0.0).collect();
            if js.is_empty() {
                continue;
            }
            let j = js[rng.random_range(0..js.len())];
            let sign = case.inst.sense().sign();
            let path = coordinate_path(&case.inst, &r, j, sign * a_c[j])
                .expect("single-row and structured paths must build");
            paths.push((path, a_c[j]));
            built += 1;
        }
        sections.push(check_path_monotonicity(paths.iter().map(|(p, a)| (p, *a))));
        sections.push(check_path_convexity(paths.iter().map(|(p, _)| p)));

        // evaluating each path at random offsets reproduces a direct solve
        let mut consistency = CheckSection::new("path_solve_consistency");
        let mut rng = key.child(7).rng();
        for _ in 0..cases.min(200) {
            let case = random_case(&mut rng, false);
            let a_c = canonical_slopes(&case);
            let r = user_costs(&case);
            let Some(j) = (0..case.inst.n()).find(|&j| a_c[j] != 0.0) else {
                continue;
            };
            let sign = case.inst.sense().sign();
            let path = coordinate_path(&case.inst, &r, j, sign * a_c[j]).unwrap();
            let mut ok = true;
            let mut worst = 0.0f64;
            for _ in 0..20 {
                let t: f64 = rng.random_range(-3.0..3.0);
                let mut rt = r.clone();
                rt[j] += a_c[j] * sign * t;
                let direct = solve(&case.inst, &rt).unwrap();
                let err = (path.value_at(t) - direct.value).abs();
                worst = worst.max(err);
                if err > 1e-9 * (1.0 + direct.value.abs()) {
                    ok = false;
                }
            }
            consistency.record(ok, || format!("worst value error {worst}"));
        }
        sections.push(consistency);
    }

    // strong duality on coupled LP solves
    {
        let mut rng = key.child(2).rng();
        let mut section = CheckSection::new("strong_duality");
        while section.cases < cases.min(500) {
            let case = random_case(&mut rng, false);
            let ProblemInstance::CoupledLp(lp) = &case.inst else {
                continue;
            };
            let r = user_costs(&case);
            let sol = solve(&case.inst, &r).unwrap();
            let nl = {
                let lambda = sol.dual.as_ref().unwrap();
                let n = lp.n() as f64;
                let mut acc: f64 = lambda.iter().zip(&lp.b).map(|(l, b)| n * b * l).sum();
                for j in 0..lp.n() {
                    let col = lp.col(j);
                    let rc = r[j] - col.iter().zip(lambda).map(|(a, l)| a * l).sum::<f64>();
                    acc += rc.max(0.0);
                }
                acc
            };
            section.record(
                (sol.value - nl).abs() <= 1e-6 * (1.0 + sol.value.abs()),
                || format!("gap {} at value {}", (sol.value - nl).abs(), sol.value),
            );
        }
        sections.push(section);
    }

    // subgradient bracket: a_j x_j(z) t <= V(z + t e_j) - V(z)
    //                      <= a_j x_j(z + t e_j) t  (canonical maximize)
    {
        let mut rng = key.child(3).rng();
        let mut section = CheckSection::new("subgradient_bracket");
        while section.cases < cases {
            let case = random_case(&mut rng, false);
            let a_c = canonical_slopes(&case);
            let r = user_costs(&case);
            let Some(j) = (0..case.inst.n()).find(|&j| a_c[j] != 0.0) else {
                continue;
            };
            let sign = case.inst.sense().sign();
            let t: f64 = rng.random_range(-2.0..2.0);
            let base = solve(&case.inst, &r).unwrap();
            let mut rt = r.clone();
            rt[j] += a_c[j] * sign * t;
            let moved = solve(&case.inst, &rt).unwrap();
            let dv = moved.value - base.value;
            let lo = a_c[j] * base.x[j] * t;
            let hi = a_c[j] * moved.x[j] * t;
            let tol = 1e-9 * (1.0 + base.value.abs());
            section.record(dv >= lo - tol && dv <= hi + tol, || {
                format!("bracket [{lo}, {hi}] missed dv = {dv} at t = {t}")
            });
        }
        sections.push(section);
    }

    // first-order correction bound |D_j| <= sqrt(3) nu_min^{-3/4} h^{-1/2},
    // and zero correction with zero draws for slope-free classes
    {
        let mut rng = key.child(4).rng();
        let mut bound = CheckSection::new("vgc_bound");
        let mut zero = CheckSection::new("lm_zero");
        while bound.cases < cases {
            let case = random_case(&mut rng, false);
            let pert = PerturbationSpec::new(case.h, FdOrder::First, 64).unwrap();
            let nu_min = case
                .obs
                .effective_nu()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            let cap = 3f64.sqrt() * nu_min.powf(-0.75) / case.h.sqrt();
            let cf =
                vgc_closed_form(&case.inst, &case.policy, &case.obs, &case.spec, &pert).unwrap();
            let mc = vgc_mc(
                &case.inst,
                &case.policy,
                &case.obs,
                &case.spec,
                &pert,
                rng.random(),
            )
            .unwrap();
            let worst = cf
                .components
                .iter()
                .chain(&mc.components)
                .fold(0.0f64, |acc, c| acc.max(c.abs()));
            bound.record(worst <= cap, || {
                format!("|D_j| = {worst} exceeds cap {cap}")
            });

            let lm = AffinePolicy::LinearModel {
                theta: vec![rng.random_range(-1.0..1.0)],
            };
            let out = vgc_mc(&case.inst, &lm, &case.obs, &case.spec, &pert, 1).unwrap();
            zero.record(out.total == 0.0 && out.draws_used == 0, || {
                format!("total {} draws {}", out.total, out.draws_used)
            });
        }
        sections.push(bound);
        sections.push(zero);
    }

    // perturbation variance identity (1 + h sqrt(nu))^2 / nu = 1/nu + sigma^2
    {
        let mut rng = key.child(5).rng();
        let mut section = CheckSection::new("sigma_identity");
        for _ in 0..cases {
            let h: f64 = rng.random_range(0.001..0.99);
            let nu: f64 = rng.random_range(0.05..50.0);
            let pert = PerturbationSpec::new(h, FdOrder::First, 1).unwrap();
            let lhs = (1.0 + h * nu.sqrt()).powi(2) / nu;
            let rhs = 1.0 / nu + pert.sigma(nu).powi(2);
            section.record((lhs - rhs).abs() <= 4.0 * f64::EPSILON * lhs.abs(), || {
                format!("h = {h}, nu = {nu}: {lhs} vs {rhs}")
            });
        }
        sections.push(section);
    }

    // closed-form correction against adaptive quadrature of the defining
    // integral, with values along the path taken from direct solves
    {
        let mut rng = key.child(6).rng();
        let mut section = CheckSection::new("closed_form_vs_quadrature");
        while section.cases < cases.min(50) {
            let case = random_case(&mut rng, false);
            let a_c = canonical_slopes(&case);
            let r = user_costs(&case);
            let Some(j) = (0..case.inst.n()).find(|&j| a_c[j] != 0.0) else {
                continue;
            };
            let sign = case.inst.sense().sign();
            let path = coordinate_path(&case.inst, &r, j, sign * a_c[j]).unwrap();
            let sigma = PerturbationSpec::new(case.h, FdOrder::First, 1)
                .unwrap()
                .sigma(case.obs.effective_nu()[j]);
            let closed = gauss_expectation(&path, sigma) - path.value_at(0.0);
            let f = |t: f64| {
                let mut rt = r.clone();
                rt[j] += a_c[j] * sign * t;
                let v = solve(&case.inst, &rt).unwrap().value;
                (v - path.value_at(0.0)) * normal::pdf(t / sigma) / sigma
            };
            let quad = panelled_quadrature(&f, -8.0 * sigma, 8.0 * sigma, 64, 1e-10);
            section.record((closed - quad).abs() <= 1e-6 * (1.0 + closed.abs()), || {
                format!("closed {closed} vs quadrature {quad} (coordinate {j})")
            });
        }
        sections.push(section);
    }

    CheckReport { sections }
}

/// Adaptive Simpson on [a, b].
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, eps: f64, depth: usize) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    simpson_step(
        f,
        a,
        b,
        fa,
        fm,
        fb,
        simpson_rule(a, b, fa, fm, fb),
        eps,
        depth,
    )
}

/// Adaptive Simpson over fixed panels. Pre-slicing defeats the early
/// convergence that plain adaptive Simpson reports on integrands whose
/// localized features cancel in the first coarse estimates.
pub fn panelled_quadrature(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    panels: usize,
    eps: f64,
) -> f64 {
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * width;
            adaptive_simpson(f, lo, lo + width, eps / panels as f64, 20)
        })
        .sum()
}

fn simpson_rule(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_rule(a, m, fa, flm, fm);
    let right = simpson_rule(m, b, fm, frm, fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
        left + right + (left + right - whole) / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
    }
}
