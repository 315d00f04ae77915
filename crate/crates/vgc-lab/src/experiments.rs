//! Scenario builders and the seeded replication harness.
//!
//! A scenario fixes a data-generating process, an instance, a policy grid,
//! and an estimator list. The harness replays it `R` times, each replication
//! drawing its observation from the substream `(master_seed, REPLICATION, r)`,
//! and aggregates mean / bias / variance / RMSE per (estimator, policy)
//! against the oracle. Replications are computed in parallel but always
//! folded in replication order, so aggregate output is bit-identical for any
//! worker count or evaluation order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{
    self, EstimatorError, EstimatorReport, VgcMethod, cross_validation, stein_baseline,
    vgc_closed_form, vgc_mc,
};
use crate::model::{
    BindingChoice, CoupledLp, DataSpec, FdOrder, Matrix, ModelError, Observation, PerturbationSpec,
    ProblemInstance, Sense, Subproblem, WeaklyCoupledVars, compute_snr, generate_observation,
};
use crate::policies::{AffinePolicy, PolicyError};
use crate::rng::{StreamKey, purpose};
use crate::solvers::solve;

use rand::RngExt;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("replication {replication} failed: {source}")]
    Replication {
        replication: usize,
        #[source]
        source: EstimatorError,
    },
}

/// Step-size policies exposed by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HPolicy {
    #[serde(rename = "fixed")]
    Fixed(f64),
    #[serde(rename = "n^-1/6")]
    InvSixthRoot,
    #[serde(rename = "n^-1/3")]
    InvCubeRoot,
    #[serde(rename = "n^-1/4")]
    InvFourthRoot,
}

impl HPolicy {
    pub fn resolve(&self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            HPolicy::Fixed(h) => *h,
            HPolicy::InvSixthRoot => nf.powf(-1.0 / 6.0),
            HPolicy::InvCubeRoot => nf.powf(-1.0 / 3.0),
            HPolicy::InvFourthRoot => nf.powf(-0.25),
        }
    }
}

/// Which estimates to produce per replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    InSample,
    Oracle,
    VgcClosedForm,
    VgcMc,
    Cv,
    CvOracle,
    Stein,
}

impl EstimatorKind {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "in_sample" => EstimatorKind::InSample,
            "oracle" => EstimatorKind::Oracle,
            "vgc_cf" => EstimatorKind::VgcClosedForm,
            "vgc_mc" => EstimatorKind::VgcMc,
            "cv" => EstimatorKind::Cv,
            "cv_oracle" => EstimatorKind::CvOracle,
            "stein" => EstimatorKind::Stein,
            _ => return None,
        })
    }

    /// Column label; VGC labels carry the finite-difference order.
    pub fn label(&self, order: FdOrder) -> String {
        let ord = match order {
            FdOrder::First => "1",
            FdOrder::Second => "2",
        };
        match self {
            EstimatorKind::InSample => "in_sample".into(),
            EstimatorKind::Oracle => "oracle".into(),
            EstimatorKind::VgcClosedForm => format!("vgc_cf{ord}"),
            EstimatorKind::VgcMc => format!("vgc_mc{ord}"),
            EstimatorKind::Cv => "cv".into(),
            EstimatorKind::CvOracle => "cv_oracle".into(),
            EstimatorKind::Stein => "stein".into(),
        }
    }
}

/// Deterministic instance generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioKind {
    /// Selection over {0,1}^n with means +1 on the first `plus_count`
    /// coordinates and -1 elsewhere; observations average `s_samples` raw
    /// samples of the given per-sample variance.
    SelectionToy {
        n: usize,
        plus_count: usize,
        per_sample_variance: f64,
        #[serde(default)]
        s_samples: Option<usize>,
    },
    /// Box LP with one or more averaged coupling rows, coefficients drawn
    /// uniformly from `a_range`, means from `mu_range`, precisions from
    /// `nu_range`; budgets calibrated so roughly `target_activity` of the
    /// coordinates activate at the means.
    CoupledLpRandom {
        n: usize,
        rows: usize,
        a_range: (f64, f64),
        mu_range: (f64, f64),
        nu_range: (f64, f64),
        target_activity: f64,
        #[serde(default)]
        s_samples: Option<usize>,
    },
    /// Synthetic two-stage dispatch instance: open at most `budget` of
    /// `depots` bases, then route each of `locations` demands to an open
    /// base or fall back to the default responder.
    DroneLike {
        depots: usize,
        locations: usize,
        budget: usize,
        nu_range: (f64, f64),
        #[serde(default)]
        s_samples: Option<usize>,
        #[serde(default)]
        enumeration_cap: Option<usize>,
    },
    /// Fully explicit data spec and instance.
    Custom {
        data: DataSpec,
        instance: ProblemInstance,
        #[serde(default)]
        s_samples: Option<usize>,
    },
}

impl ScenarioKind {
    pub fn build(
        &self,
        seed: u64,
    ) -> Result<(DataSpec, ProblemInstance, Option<usize>), ExperimentError> {
        match self {
            ScenarioKind::SelectionToy {
                n,
                plus_count,
                per_sample_variance,
                s_samples,
            } => {
                if plus_count > n {
                    return Err(ExperimentError::Invalid("plus_count exceeds n".into()));
                }
                if !(*per_sample_variance > 0.0) {
                    return Err(ExperimentError::Invalid(
                        "per-sample variance must be positive".into(),
                    ));
                }
                let mut mu = vec![1.0; *plus_count];
                mu.extend(vec![-1.0; n - plus_count]);
                let samples = s_samples.unwrap_or(1).max(1) as f64;
                let nu = vec![samples / per_sample_variance; *n];
                let spec = DataSpec::new(mu, nu)?;
                Ok((
                    spec,
                    ProblemInstance::Selection {
                        n: *n,
                        sense: Sense::Maximize,
                    },
                    *s_samples,
                ))
            }
            ScenarioKind::CoupledLpRandom {
                n,
                rows,
                a_range,
                mu_range,
                nu_range,
                target_activity,
                s_samples,
            } => {
                if *rows == 0 || *n == 0 {
                    return Err(ExperimentError::Invalid("need rows >= 1 and n >= 1".into()));
                }
                if !(0.0..=1.0).contains(target_activity) {
                    return Err(ExperimentError::Invalid(
                        "target_activity must lie in [0,1]".into(),
                    ));
                }
                let mut rng = StreamKey::new(seed).child(purpose::INSTANCE).rng();
                let mut a = vec![0.0; rows * n];
                for v in a.iter_mut() {
                    *v = rng.random_range(a_range.0..=a_range.1);
                }
                let mu: Vec<f64> = (0..*n)
                    .map(|_| rng.random_range(mu_range.0..=mu_range.1))
                    .collect();
                let nu: Vec<f64> = (0..*n)
                    .map(|_| rng.random_range(nu_range.0..=nu_range.1))
                    .collect();
                let a = Matrix::new(*rows, *n, a)?;
                // calibrate each budget so the mean-cost solution keeps about
                // target_activity of the coordinates active
                let mut b = vec![0.0; *rows];
                if *rows == 1 {
                    let mut ratios: Vec<f64> = (0..*n).map(|j| mu[j] / a.get(0, j)).collect();
                    ratios.sort_by(f64::total_cmp);
                    let cut = ((1.0 - target_activity) * (*n as f64 - 1.0)).round() as usize;
                    let lambda = ratios[cut.min(n - 1)];
                    b[0] = (0..*n)
                        .map(|j| {
                            if mu[j] / a.get(0, j) > lambda {
                                a.get(0, j)
                            } else {
                                0.0
                            }
                        })
                        .sum::<f64>()
                        / *n as f64;
                } else {
                    for i in 0..*rows {
                        b[i] = target_activity * a.row(i).iter().sum::<f64>() / *n as f64;
                    }
                }
                let spec = DataSpec::new(mu, nu)?;
                let lp = CoupledLp::new(a, b, Sense::Maximize)?;
                Ok((spec, ProblemInstance::CoupledLp(lp), *s_samples))
            }
            ScenarioKind::DroneLike {
                depots,
                locations,
                budget,
                nu_range,
                s_samples,
                enumeration_cap,
            } => {
                let cap = enumeration_cap.unwrap_or(1_000_000);
                let (inst, spec) = build_drone_like_instance_with(
                    *depots, *locations, *budget, seed, *nu_range, cap,
                )?;
                Ok((spec, inst, *s_samples))
            }
            ScenarioKind::Custom {
                data,
                instance,
                s_samples,
            } => {
                if data.n() != instance.n() {
                    return Err(ExperimentError::Invalid(format!(
                        "data spec has n = {}, instance has n = {}",
                        data.n(),
                        instance.n()
                    )));
                }
                Ok((data.clone(), instance.clone(), *s_samples))
            }
        }
    }

    /// Rebuild the generator at a different dimension (sweep axis `n`).
    pub fn with_n(&self, n_new: usize) -> Result<ScenarioKind, ExperimentError> {
        match self {
            ScenarioKind::SelectionToy {
                n,
                plus_count,
                per_sample_variance,
                s_samples,
            } => {
                let frac = *plus_count as f64 / *n as f64;
                Ok(ScenarioKind::SelectionToy {
                    n: n_new,
                    plus_count: (frac * n_new as f64).round() as usize,
                    per_sample_variance: *per_sample_variance,
                    s_samples: *s_samples,
                })
            }
            ScenarioKind::CoupledLpRandom { .. } => {
                let mut k = self.clone();
                if let ScenarioKind::CoupledLpRandom { n, .. } = &mut k {
                    *n = n_new;
                }
                Ok(k)
            }
            _ => Err(ExperimentError::Invalid(
                "dimension sweep is only defined for selection_toy and coupled_lp scenarios".into(),
            )),
        }
    }
}

/// A fully specified experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    pub policies: Vec<AffinePolicy>,
    pub estimators: Vec<EstimatorKind>,
    pub h_policy: HPolicy,
    pub folds: usize,
    pub order: FdOrder,
    pub draws: usize,
    pub replications: usize,
    pub master_seed: u64,
    /// Rescale precisions so the spec hits this signal-to-noise ratio
    /// (sweep axis `snr`).
    #[serde(default)]
    pub snr_override: Option<f64>,
}

impl Scenario {
    fn validate(&self) -> Result<(), ExperimentError> {
        if self.replications == 0 {
            return Err(ExperimentError::Invalid("replications must be >= 1".into()));
        }
        if self.policies.is_empty() {
            return Err(ExperimentError::Invalid(
                "at least one policy required".into(),
            ));
        }
        if self.estimators.is_empty() {
            return Err(ExperimentError::Invalid(
                "at least one estimator required".into(),
            ));
        }
        if self.draws == 0 {
            return Err(ExperimentError::Invalid("draws must be >= 1".into()));
        }
        Ok(())
    }

    /// Materialize the data spec / instance / perturbation for this run.
    pub fn materialize(
        &self,
    ) -> Result<(DataSpec, ProblemInstance, Option<usize>, PerturbationSpec), ExperimentError> {
        self.validate()?;
        let (mut spec, inst, s_samples) = self.kind.build(self.master_seed)?;
        if let Some(target) = self.snr_override {
            let current = compute_snr(&spec)?;
            if !(current > 0.0) {
                return Err(ExperimentError::Invalid(
                    "snr override needs a nonzero-signal spec".into(),
                ));
            }
            let factor = target / current;
            spec = spec.with_nu(spec.nu().iter().map(|v| v * factor).collect())?;
        }
        let needs_cv = self
            .estimators
            .iter()
            .any(|e| matches!(e, EstimatorKind::Cv | EstimatorKind::CvOracle));
        if needs_cv {
            let s = s_samples.ok_or_else(|| {
                ExperimentError::Invalid("cv estimators need s_samples in the scenario".into())
            })?;
            if self.folds < 2 || self.folds > s {
                return Err(ExperimentError::Invalid(format!(
                    "folds = {} incompatible with s_samples = {s}",
                    self.folds
                )));
            }
        }
        let h = self.h_policy.resolve(inst.n());
        let pert = PerturbationSpec::new(h, self.order, self.draws)?;
        Ok((spec, inst, s_samples, pert))
    }
}

/// One estimator value per replication for one (estimator, policy) cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CellKey {
    pub estimator: String,
    pub policy_class: String,
    pub theta_id: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellStats {
    pub key: CellKey,
    pub mean: f64,
    /// mean minus the same policy's oracle mean.
    pub bias: f64,
    pub variance: f64,
    /// sqrt(bias^2 + variance).
    pub rmse: f64,
    pub std_err: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AggregateStats {
    pub scenario: String,
    pub n: usize,
    pub h: f64,
    pub seed: u64,
    pub replications: usize,
    pub cells: Vec<CellStats>,
}

impl AggregateStats {
    pub fn cell(&self, estimator: &str, theta_id: usize) -> Option<&CellStats> {
        self.cells
            .iter()
            .find(|c| c.key.estimator == estimator && c.key.theta_id == theta_id)
    }
}

/// Raw per-replication values, ordered cell-major.
#[derive(Debug, Clone)]
pub struct ReplicationValues {
    pub keys: Vec<CellKey>,
    /// values[c][r] = value of cell c in replication r.
    pub values: Vec<Vec<f64>>,
}

impl ReplicationValues {
    pub fn column(&self, estimator: &str, theta_id: usize) -> Option<&[f64]> {
        self.keys
            .iter()
            .position(|k| k.estimator == estimator && k.theta_id == theta_id)
            .map(|i| self.values[i].as_slice())
    }
}

/// Evaluate every requested estimator for one policy on one observation.
/// The true means are supplied by the harness for oracle columns only.
pub fn evaluate_policy(
    inst: &ProblemInstance,
    spec: &DataSpec,
    obs: &Observation,
    policy: &AffinePolicy,
    theta_id: usize,
    pert: &PerturbationSpec,
    seed: u64,
    estimators: &[EstimatorKind],
    folds: usize,
    mu: Option<&[f64]>,
) -> Result<EstimatorReport, EstimatorError> {
    let (a, b) = policy.coefficients_with(obs.effective_nu(), spec.covariates())?;
    let r = crate::policies::plugin_costs_from(&a, &b, obs.z());
    let sol = solve(inst, &r)?;
    let in_sample = estimators::in_sample(&sol, obs.z());
    let oracle = mu.map(|m| estimators::oracle(&sol, m));

    let mut report = EstimatorReport {
        policy_class: policy.class_name().to_string(),
        theta_id,
        h: pert.h,
        in_sample,
        oracle,
        debiased: Vec::new(),
        cv: None,
        cv_oracle: None,
        stein: None,
    };

    let wants_cv = estimators
        .iter()
        .any(|e| matches!(e, EstimatorKind::Cv | EstimatorKind::CvOracle));
    if wants_cv {
        let out = cross_validation(inst, policy, obs, folds, spec)?;
        report.cv = Some(out.estimate);
        if let Some(m) = mu {
            report.cv_oracle = Some(out.oracle(m));
        }
    }
    for kind in estimators {
        match kind {
            EstimatorKind::VgcClosedForm => {
                let out = vgc_closed_form(inst, policy, obs, spec, pert)?;
                report
                    .debiased
                    .push((VgcMethod::ClosedForm, in_sample - out.total));
            }
            EstimatorKind::VgcMc => {
                let out = vgc_mc(inst, policy, obs, spec, pert, seed)?;
                report.debiased.push((out.method, in_sample - out.total));
            }
            EstimatorKind::Stein => {
                let corr = stein_baseline(inst, policy, obs, spec, pert.h)?;
                report.stein = Some(in_sample - corr);
            }
            _ => {}
        }
    }
    Ok(report)
}

fn cell_value(report: &EstimatorReport, kind: EstimatorKind) -> f64 {
    match kind {
        EstimatorKind::InSample => report.in_sample,
        EstimatorKind::Oracle => report.oracle.unwrap_or(f64::NAN),
        EstimatorKind::VgcClosedForm => report
            .debiased
            .iter()
            .find(|(m, _)| *m == VgcMethod::ClosedForm)
            .map(|(_, v)| *v)
            .unwrap_or(f64::NAN),
        EstimatorKind::VgcMc => report
            .debiased
            .iter()
            .find(|(m, _)| matches!(m, VgcMethod::Mc1 | VgcMethod::Mc2))
            .map(|(_, v)| *v)
            .unwrap_or(f64::NAN),
        EstimatorKind::Cv => report.cv.unwrap_or(f64::NAN),
        EstimatorKind::CvOracle => report.cv_oracle.unwrap_or(f64::NAN),
        EstimatorKind::Stein => report.stein.unwrap_or(f64::NAN),
    }
}

struct Welford {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn new() -> Self {
        Welford {
            count: 0,
            mean: 0.0,
            m2: 0.0,
        }
    }

    fn push(&mut self, v: f64) {
        self.count += 1;
        let d = v - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (v - self.mean);
    }

    fn variance(&self) -> f64 {
        if self.count > 1 {
            self.m2 / (self.count - 1) as f64
        } else {
            0.0
        }
    }
}

const CHUNK: usize = 512;

fn run_impl(
    scenario: &Scenario,
    workers: usize,
    keep_values: bool,
) -> Result<(AggregateStats, Option<ReplicationValues>), ExperimentError> {
    let (spec, inst, s_samples, pert) = scenario.materialize()?;
    let estimators = &scenario.estimators;
    let policies = &scenario.policies;

    let mut keys = Vec::new();
    for (theta_id, policy) in policies.iter().enumerate() {
        for kind in estimators {
            keys.push(CellKey {
                estimator: kind.label(scenario.order),
                policy_class: policy.class_name().to_string(),
                theta_id,
            });
        }
    }
    // oracle means tracked per policy even when not requested as a column
    let cells_per_policy = estimators.len();
    let rep_key = StreamKey::new(scenario.master_seed).child(purpose::REPLICATION);

    let one_replication = |r: usize| -> Result<Vec<f64>, ExperimentError> {
        let seed = rep_key.child(r as u64).value();
        let obs = generate_observation(&spec, s_samples, seed).map_err(|e| {
            ExperimentError::Replication {
                replication: r,
                source: e.into(),
            }
        })?;
        let mut row = Vec::with_capacity(keys.len() + policies.len());
        for (theta_id, policy) in policies.iter().enumerate() {
            let report = evaluate_policy(
                &inst,
                &spec,
                &obs,
                policy,
                theta_id,
                &pert,
                seed,
                estimators,
                scenario.folds,
                Some(spec.mu()),
            )
            .map_err(|e| ExperimentError::Replication {
                replication: r,
                source: e,
            })?;
            for kind in estimators {
                row.push(cell_value(&report, *kind));
            }
            row.push(report.oracle.expect("harness supplies mu"));
        }
        Ok(row)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ExperimentError::Invalid(format!("thread pool: {e}")))?;

    let mut acc: Vec<Welford> = (0..keys.len()).map(|_| Welford::new()).collect();
    let mut oracle_acc: Vec<Welford> = (0..policies.len()).map(|_| Welford::new()).collect();
    let mut detail: Option<ReplicationValues> = keep_values.then(|| ReplicationValues {
        keys: keys.clone(),
        values: vec![Vec::with_capacity(scenario.replications); keys.len()],
    });

    let r_total = scenario.replications;
    let mut start = 0usize;
    while start < r_total {
        let end = (start + CHUNK).min(r_total);
        let rows: Result<Vec<Vec<f64>>, ExperimentError> =
            pool.install(|| (start..end).into_par_iter().map(one_replication).collect());
        for row in rows? {
            for (p, _) in policies.iter().enumerate() {
                let base = p * (cells_per_policy + 1);
                for c in 0..cells_per_policy {
                    let v = row[base + c];
                    acc[p * cells_per_policy + c].push(v);
                    if let Some(d) = detail.as_mut() {
                        d.values[p * cells_per_policy + c].push(v);
                    }
                }
                oracle_acc[p].push(row[base + cells_per_policy]);
            }
        }
        start = end;
    }

    let cells = keys
        .iter()
        .enumerate()
        .map(|(i, key)| {
            let w = &acc[i];
            let oracle_mean = oracle_acc[key.theta_id].mean;
            let bias = w.mean - oracle_mean;
            let variance = w.variance();
            CellStats {
                key: key.clone(),
                mean: w.mean,
                bias,
                variance,
                rmse: (bias * bias + variance).sqrt(),
                std_err: (variance / w.count.max(1) as f64).sqrt(),
                count: w.count,
            }
        })
        .collect();

    Ok((
        AggregateStats {
            scenario: scenario.name.clone(),
            n: inst.n(),
            h: pert.h,
            seed: scenario.master_seed,
            replications: r_total,
            cells,
        },
        detail,
    ))
}

/// Run all replications, aggregating in replication order.
pub fn run_replications(
    scenario: &Scenario,
    workers: usize,
) -> Result<AggregateStats, ExperimentError> {
    run_impl(scenario, workers, false).map(|(stats, _)| stats)
}

/// As `run_replications` but also returning every per-replication value.
pub fn run_replications_detailed(
    scenario: &Scenario,
    workers: usize,
) -> Result<(AggregateStats, ReplicationValues), ExperimentError> {
    run_impl(scenario, workers, true).map(|(stats, detail)| (stats, detail.unwrap()))
}

/// Sweep axes; grids are parsed from the CLI as comma-separated numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    H,
    N,
    Folds,
    Snr,
}

impl SweepAxis {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "h" => SweepAxis::H,
            "n" => SweepAxis::N,
            "folds" => SweepAxis::Folds,
            "snr" => SweepAxis::Snr,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub stats: AggregateStats,
}

/// One aggregate per grid point. Points share the master seed, so
/// replication r sees identical data wherever the axis leaves the
/// data-generating process unchanged (paired comparisons across the grid).
pub fn sweep(
    scenario: &Scenario,
    axis: SweepAxis,
    grid: &[f64],
    workers: usize,
) -> Result<Vec<SweepPoint>, ExperimentError> {
    if grid.is_empty() {
        return Err(ExperimentError::Invalid(
            "sweep grid must be non-empty".into(),
        ));
    }
    let mut out = Vec::with_capacity(grid.len());
    for &axis_value in grid {
        let mut sc = scenario.clone();
        match axis {
            SweepAxis::H => {
                if !(axis_value > 0.0 && axis_value < 1.0) {
                    return Err(ExperimentError::Invalid(format!(
                        "h grid value {axis_value} outside (0,1)"
                    )));
                }
                sc.h_policy = HPolicy::Fixed(axis_value);
            }
            SweepAxis::N => {
                if axis_value.fract() != 0.0 || axis_value < 1.0 {
                    return Err(ExperimentError::Invalid(format!(
                        "n grid value {axis_value} must be a positive integer"
                    )));
                }
                sc.kind = sc.kind.with_n(axis_value as usize)?;
            }
            SweepAxis::Folds => {
                if axis_value.fract() != 0.0 || axis_value < 2.0 {
                    return Err(ExperimentError::Invalid(format!(
                        "folds grid value {axis_value} must be an integer >= 2"
                    )));
                }
                sc.folds = axis_value as usize;
            }
            SweepAxis::Snr => {
                if !(axis_value > 0.0) {
                    return Err(ExperimentError::Invalid(
                        "snr grid values must be positive".into(),
                    ));
                }
                sc.snr_override = Some(axis_value);
            }
        }
        let stats = run_replications(&sc, workers)?;
        out.push(SweepPoint { axis_value, stats });
    }
    Ok(out)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Build a synthetic dispatch instance: coordinates are laid out per
/// location as [default responder, base 1, ..., base L]; the binding choice
/// enumerates every base subset of size at most `budget`.
pub fn build_drone_like_instance(
    depots: usize,
    locations: usize,
    budget: usize,
    seed: u64,
) -> Result<(ProblemInstance, DataSpec), ExperimentError> {
    build_drone_like_instance_with(depots, locations, budget, seed, (4e-6, 1e-4), 1_000_000)
}

pub fn build_drone_like_instance_with(
    depots: usize,
    locations: usize,
    budget: usize,
    seed: u64,
    nu_range: (f64, f64),
    enumeration_cap: usize,
) -> Result<(ProblemInstance, DataSpec), ExperimentError> {
    if locations == 0 {
        return Err(ExperimentError::Invalid(
            "need at least one location".into(),
        ));
    }
    if budget > depots {
        return Err(ExperimentError::Invalid(
            "budget exceeds depot count".into(),
        ));
    }
    let subsets: usize = (0..=budget).map(|i| binomial(depots, i)).sum();
    if subsets > enumeration_cap {
        return Err(ExperimentError::Invalid(format!(
            "{subsets} base subsets exceed the enumeration cap {enumeration_cap}"
        )));
    }

    let mut rng = StreamKey::new(seed).child(purpose::INSTANCE).rng();
    let depot_xy: Vec<(f64, f64)> = (0..depots)
        .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
        .collect();
    let loc_xy: Vec<(f64, f64)> = (0..locations)
        .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
        .collect();
    let default_time: Vec<f64> = (0..locations)
        .map(|_| rng.random_range(400.0..=900.0))
        .collect();

    let width = depots + 1;
    let n = locations * width;
    let mut mu = vec![0.0; n];
    let mut nu = vec![0.0; n];
    for k in 0..locations {
        mu[k * width] = default_time[k];
        for l in 0..depots {
            let dx = loc_xy[k].0 - depot_xy[l].0;
            let dy = loc_xy[k].1 - depot_xy[l].1;
            mu[k * width + 1 + l] = 20.0 + 900.0 * (dx * dx + dy * dy).sqrt();
        }
        for l in 0..width {
            nu[k * width + l] = rng.random_range(nu_range.0..=nu_range.1);
        }
    }

    // enumerate base subsets of size <= budget, smallest first
    let mut bindings: Vec<Vec<usize>> = Vec::with_capacity(subsets);
    for mask in 0u64..(1u64 << depots) {
        if (mask.count_ones() as usize) <= budget {
            bindings.push((0..depots).filter(|l| mask >> l & 1 == 1).collect());
        }
    }
    bindings.sort_by_key(|s| (s.len(), s.clone()));

    let subproblems: Vec<Subproblem> = (0..locations)
        .map(|k| {
            let indices: Vec<usize> = (0..width).map(|l| k * width + l).collect();
            let candidates = bindings
                .iter()
                .map(|open| {
                    let mut list = Vec::with_capacity(open.len() + 1);
                    let mut amb = vec![0.0; width];
                    amb[0] = 1.0;
                    list.push(amb);
                    for &l in open {
                        let mut c = vec![0.0; width];
                        c[1 + l] = 1.0;
                        list.push(c);
                    }
                    list
                })
                .collect();
            Subproblem {
                indices,
                candidates,
            }
        })
        .collect();

    let wcv = WeaklyCoupledVars::new(
        vec![],
        bindings
            .iter()
            .map(|_| BindingChoice { x0: vec![] })
            .collect(),
        subproblems,
        n,
        Sense::Minimize,
    )?;
    let spec = DataSpec::new(mu, nu)?;
    Ok((ProblemInstance::WeaklyCoupledVars(wcv), spec))
}
