//! Estimators of out-of-sample performance: in-sample value, oracle value,
//! the variance-gradient correction (Monte Carlo and closed form, first and
//! second order), k-fold cross-validation, and a Stein-style central
//! finite-difference baseline.
//!
//! The correction for coordinate j with plug-in slope a_j and prediction
//! precision nu_j is the conditional expectation of a randomized forward
//! finite difference of the plug-in optimal value:
//!
//!   D_j = E[ (V(z + d e_j) - V(z)) / (h sqrt(nu_j) a_j) | z ],
//!   d ~ N(0, h^2 + 2h/sqrt(nu_j)),
//!
//! and zero where a_j = 0. The second-order scheme combines steps at h and
//! 2h as (4 V_h - V_2h - 3 V_0) / (2 h sqrt(nu_j) a_j). The total correction
//! subtracts from the in-sample value to estimate the oracle value.
//!
//! Estimators read observations, precisions, and covariates; the true means
//! only ever enter through the explicit `oracle` evaluation used by the
//! synthetic harness.

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    DataSpec, FdOrder, Matrix, ModelError, Observation, PerturbationSpec, ProblemInstance,
};
use crate::normal;
use crate::policies::{AffinePolicy, PolicyError, plugin_costs_from};
use crate::rng::{StreamKey, purpose};
use crate::solvers::{
    CoordinatePath, PathBuilder, Solution, SolverError, solve, solve_value_canonical,
};

use rand::RngExt;
use rand_distr::StandardNormal;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// In-sample performance z . x of a solved policy.
pub fn in_sample(sol: &Solution, z: &[f64]) -> f64 {
    z.iter().zip(&sol.x).map(|(a, b)| a * b).sum()
}

/// Oracle (out-of-sample) performance mu . x; synthetic harness only.
pub fn oracle(sol: &Solution, mu: &[f64]) -> f64 {
    mu.iter().zip(&sol.x).map(|(a, b)| a * b).sum()
}

/// How a correction was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VgcMethod {
    Mc1,
    Mc2,
    ClosedForm,
}

/// Per-coordinate corrections plus their total.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VgcOutcome {
    pub components: Vec<f64>,
    pub total: f64,
    /// Monte Carlo standard error per component; None for the closed form.
    pub mc_std_err: Option<Vec<f64>>,
    pub method: VgcMethod,
    /// Gaussian variates consumed; stays zero when every slope vanishes.
    pub draws_used: usize,
}

/// Canonical-orientation slopes and plug-in costs for one policy evaluation.
fn canonical_parts(
    inst: &ProblemInstance,
    policy: &AffinePolicy,
    z: &[f64],
    nu: &[f64],
    covariates: Option<&Matrix>,
) -> Result<(Vec<f64>, Vec<f64>), EstimatorError> {
    if z.len() != inst.n() || nu.len() != inst.n() {
        return Err(EstimatorError::Invalid(format!(
            "observation dimension {} does not match instance dimension {}",
            z.len(),
            inst.n()
        )));
    }
    let (a, b) = policy.coefficients_with(nu, covariates)?;
    let sign = inst.sense().sign();
    let a_c: Vec<f64> = a.iter().map(|v| sign * v).collect();
    let b_c: Vec<f64> = b.iter().map(|v| sign * v).collect();
    let r_c = plugin_costs_from(&a_c, &b_c, z);
    Ok((a_c, r_c))
}

fn check_precisions(nu: &[f64], n: usize) -> Result<(), EstimatorError> {
    if nu.len() != n {
        return Err(EstimatorError::Invalid(format!(
            "precision vector length {} != n = {n}",
            nu.len()
        )));
    }
    if !nu.iter().all(|v| v.is_finite() && *v > 0.0) {
        return Err(EstimatorError::Invalid(
            "precisions must be positive".into(),
        ));
    }
    Ok(())
}

/// Optimal value only, skipping primal recovery where a dual value suffices.
fn objective_value(inst: &ProblemInstance, r_c: &[f64]) -> Result<f64, SolverError> {
    solve_value_canonical(inst, r_c)
}

/// Monte Carlo correction with the observation's own precisions.
pub fn vgc_mc(
    inst: &ProblemInstance,
    policy: &AffinePolicy,
    obs: &Observation,
    spec: &DataSpec,
    pert: &PerturbationSpec,
    seed: u64,
) -> Result<VgcOutcome, EstimatorError> {
    vgc_mc_impl(inst, policy, obs, spec, pert, seed, obs.effective_nu())
}

/// Monte Carlo correction built with estimated precisions `nu_hat` in both
/// the perturbation law and the divisor.
pub fn vgc_estimated_precision(
    inst: &ProblemInstance,
    policy: &AffinePolicy,
    obs: &Observation,
    spec: &DataSpec,
    pert: &PerturbationSpec,
    seed: u64,
    nu_hat: &[f64],
) -> Result<VgcOutcome, EstimatorError> {
    check_precisions(nu_hat, inst.n())?;
    vgc_mc_impl(inst, policy, obs, spec, pert, seed, nu_hat)
}

fn vgc_mc_impl(
    inst: &ProblemInstance,
    policy: &AffinePolicy,
    obs: &Observation,
    spec: &DataSpec,
    pert: &PerturbationSpec,
    seed: u64,
    nu: &[f64],
) -> Result<VgcOutcome, EstimatorError> {
    let (a_c, r_c) = canonical_parts(inst, policy, obs.z(), obs.effective_nu(), spec.covariates())?;
    let v0 = objective_value(inst, &r_c)?;
    let n = inst.n();
    let key = StreamKey::new(seed).child(purpose::VGC);

    let mut components = vec![0.0; n];
    let mut se = vec![0.0; n];
    let mut draws_used = 0usize;
    let mut r_mod = r_c.clone();
    for j in 0..n {
        if a_c[j] == 0.0 {
            continue;
        }
        let sigma_h = pert.sigma(nu[j]);
        let sigma_2h = pert.sigma_2h(nu[j]);
        let scale = pert.h * nu[j].sqrt() * a_c[j];
        let mut rng = key.child(j as u64).rng();
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for d in 0..pert.draws {
            let stat = match pert.order {
                FdOrder::First => {
                    let g: f64 = rng.sample(StandardNormal);
                    r_mod[j] = r_c[j] + a_c[j] * sigma_h * g;
                    draws_used += 1;
                    let v = objective_value(inst, &r_mod)?;
                    (v - v0) / scale
                }
                FdOrder::Second => {
                    let g1: f64 = rng.sample(StandardNormal);
                    let g2: f64 = rng.sample(StandardNormal);
                    draws_used += 2;
                    r_mod[j] = r_c[j] + a_c[j] * sigma_h * g1;
                    let v_h = objective_value(inst, &r_mod)?;
                    r_mod[j] = r_c[j] + a_c[j] * sigma_2h * g2;
                    let v_2h = objective_value(inst, &r_mod)?;
                    (4.0 * v_h - v_2h - 3.0 * v0) / (2.0 * scale)
                }
            };
            let delta = stat - mean;
            mean += delta / (d + 1) as f64;
            m2 += delta * (stat - mean);
        }
        r_mod[j] = r_c[j];
        components[j] = mean;
        se[j] = if pert.draws > 1 {
            (m2 / (pert.draws - 1) as f64 / pert.draws as f64).sqrt()
        } else {
            f64::INFINITY
        };
    }
    Ok(VgcOutcome {
        total: components.iter().sum(),
        components,
        mc_std_err: Some(se),
        method: match pert.order {
            FdOrder::First => VgcMethod::Mc1,
            FdOrder::Second => VgcMethod::Mc2,
        },
        draws_used,
    })
}

/// E[V(z + d e_j)] for d ~ N(0, sigma^2), integrated piece by piece against
/// the path: constant parts weight interval masses, linear parts weight
/// truncated first moments.
pub fn gauss_expectation(path: &CoordinatePath, sigma: f64) -> f64 {
    let mut acc = 0.0;
    let k = path.pieces.len();
    for (i, piece) in path.pieces.iter().enumerate() {
        let lo = if i == 0 {
            f64::NEG_INFINITY
        } else {
            path.breakpoints[i - 1]
        };
        let hi = if i + 1 == k {
            f64::INFINITY
        } else {
            path.breakpoints[i]
        };
        acc += piece.intercept * normal::interval_mass(lo, hi, sigma)
            + piece.slope * normal::partial_first_moment(lo, hi, sigma);
    }
    acc
}

/// Exact (Rao-Blackwellized) correction via coordinate paths; no Monte Carlo
/// error. Requires the instance to support parametric paths.
pub fn vgc_closed_form(
    inst: &ProblemInstance,
    policy: &AffinePolicy,
    obs: &Observation,
    spec: &DataSpec,
    pert: &PerturbationSpec,
) -> Result<VgcOutcome, EstimatorError> {
    vgc_cf_impl(inst, policy, obs, spec, pert, obs.effective_nu())
}

/// Closed-form correction with estimated precisions.
pub fn vgc_closed_form_estimated_precision(
    inst: &ProblemInstance,
    policy: &AffinePolicy,
    obs: &Observation,
    spec: &DataSpec,
    pert: &PerturbationSpec,
    nu_hat: &[f64],
) -> Result<VgcOutcome, EstimatorError> {
    check_precisions(nu_hat, inst.n())?;
    vgc_cf_impl(inst, policy, obs, spec, pert, nu_hat)
}

fn vgc_cf_impl(
    inst: &ProblemInstance,
    policy: &AffinePolicy,
    obs: &Observation,
    spec: &DataSpec,
    pert: &PerturbationSpec,
    nu: &[f64],
) -> Result<VgcOutcome, EstimatorError> {
    let (a_c, r_c) = canonical_parts(inst, policy, obs.z(), obs.effective_nu(), spec.covariates())?;
    let n = inst.n();
    let builder = PathBuilder::new(inst, r_c)?;
    let mut components = vec![0.0; n];
    for j in 0..n {
        if a_c[j] == 0.0 {
            continue;
        }
        let path = builder.coordinate_path(j, a_c[j])?;
        // anchoring V(z) on the path itself keeps the difference free of
        // cross-route rounding
        let v0 = path.value_at(0.0);
        let e_h = gauss_expectation(&path, pert.sigma(nu[j]));
        let scale = pert.h * nu[j].sqrt() * a_c[j];
        components[j] = match pert.order {
            FdOrder::First => (e_h - v0) / scale,
            FdOrder::Second => {
                let e_2h = gauss_expectation(&path, pert.sigma_2h(nu[j]));
                (4.0 * e_h - e_2h - 3.0 * v0) / (2.0 * scale)
            }
        };
    }
    Ok(VgcOutcome {
        total: components.iter().sum(),
        components,
        mc_std_err: None,
        method: VgcMethod::ClosedForm,
        draws_used: 0,
    })
}

/// One fold of a cross-validation split.
#[derive(Debug, Clone)]
pub struct CvFold {
    /// Fraction of the samples held out in this fold.
    pub weight: f64,
    /// Policy trained on the complement.
    pub x: Vec<f64>,
    /// Mean of the held-out samples.
    pub held_mean: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    /// Sample-weighted average of held-out evaluations.
    pub estimate: f64,
    pub folds: Vec<CvFold>,
}

impl CvOutcome {
    /// Oracle value of the fold policies; synthetic harness only.
    pub fn oracle(&self, mu: &[f64]) -> f64 {
        self.folds
            .iter()
            .map(|f| f.weight * mu.iter().zip(&f.x).map(|(m, x)| m * x).sum::<f64>())
            .sum()
    }
}

/// K-fold cross-validation over the raw samples behind an observation.
/// Sample i lands in fold i mod K; each fold's policy trains on the
/// complement mean with precision scaled down to the reduced sample count
/// and is scored on the held-out mean.
pub fn cross_validation(
    inst: &ProblemInstance,
    policy: &AffinePolicy,
    obs: &Observation,
    folds: usize,
    spec: &DataSpec,
) -> Result<CvOutcome, EstimatorError> {
    let raw = obs
        .raw_samples()
        .ok_or_else(|| EstimatorError::Invalid("cross-validation needs raw samples".into()))?;
    let s = raw.rows();
    if folds < 2 {
        return Err(EstimatorError::Invalid(format!(
            "folds = {folds}, need at least 2"
        )));
    }
    if folds > s {
        return Err(EstimatorError::Invalid(format!(
            "folds = {folds} exceeds sample count {s}"
        )));
    }
    let n = inst.n();
    if raw.cols() != n {
        return Err(EstimatorError::Invalid(
            "raw sample width != instance dimension".into(),
        ));
    }

    let mut out_folds = Vec::with_capacity(folds);
    let mut estimate = 0.0;
    for f in 0..folds {
        let held: Vec<usize> = (0..s).filter(|i| i % folds == f).collect();
        let train_count = s - held.len();
        let mut train_mean = vec![0.0; n];
        let mut held_mean = vec![0.0; n];
        for i in 0..s {
            let row = raw.row(i);
            let dst = if i % folds == f {
                &mut held_mean
            } else {
                &mut train_mean
            };
            for (d, v) in dst.iter_mut().zip(row) {
                *d += v;
            }
        }
        for v in train_mean.iter_mut() {
            *v /= train_count as f64;
        }
        for v in held_mean.iter_mut() {
            *v /= held.len() as f64;
        }
        let shrink = train_count as f64 / s as f64;
        let train_nu: Vec<f64> = obs.effective_nu().iter().map(|v| v * shrink).collect();
        let (a, b) = policy.coefficients_with(&train_nu, spec.covariates())?;
        let r_train = plugin_costs_from(&a, &b, &train_mean);
        let sol = solve(inst, &r_train)?;
        let value: f64 = held_mean.iter().zip(&sol.x).map(|(z, x)| z * x).sum();
        let weight = held.len() as f64 / s as f64;
        estimate += weight * value;
        out_folds.push(CvFold {
            weight,
            x: sol.x,
            held_mean,
        });
    }
    Ok(CvOutcome {
        estimate,
        folds: out_folds,
    })
}

/// Stein-style optimism estimate: central finite differences of each
/// solution coordinate in its own observation, weighted by the noise
/// variance. Deterministic, and discontinuous in z by construction.
pub fn stein_baseline(
    inst: &ProblemInstance,
    policy: &AffinePolicy,
    obs: &Observation,
    spec: &DataSpec,
    h: f64,
) -> Result<f64, EstimatorError> {
    if !(h > 0.0) {
        return Err(EstimatorError::Invalid(format!(
            "stein step must be positive, got {h}"
        )));
    }
    let nu = obs.effective_nu();
    let (a, b) = policy.coefficients_with(nu, spec.covariates())?;
    let r = plugin_costs_from(&a, &b, obs.z());
    let mut correction = 0.0;
    let mut r_mod = r.clone();
    for j in 0..inst.n() {
        if a[j] == 0.0 {
            continue;
        }
        r_mod[j] = r[j] + a[j] * h;
        let x_plus = solve(inst, &r_mod)?.x[j];
        r_mod[j] = r[j] - a[j] * h;
        let x_minus = solve(inst, &r_mod)?.x[j];
        r_mod[j] = r[j];
        correction += (x_plus - x_minus) / (2.0 * h * nu[j]);
    }
    Ok(correction)
}

/// Single-replication record of every requested estimate for one policy.
#[derive(Debug, Clone, Serialize)]
pub struct EstimatorReport {
    pub policy_class: String,
    pub theta_id: usize,
    pub h: f64,
    pub in_sample: f64,
    pub oracle: Option<f64>,
    /// Debiased out-of-sample estimates, in-sample minus correction total.
    pub debiased: Vec<(VgcMethod, f64)>,
    pub cv: Option<f64>,
    pub cv_oracle: Option<f64>,
    pub stein: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DataSpec, Sense, generate_observation};
    use crate::solvers::solve_canonical;

    fn selection(n: usize) -> ProblemInstance {
        ProblemInstance::Selection {
            n,
            sense: Sense::Maximize,
        }
    }

    fn obs_direct(z: Vec<f64>, nu: Vec<f64>) -> Observation {
        Observation::direct(z, nu).unwrap()
    }

    #[test]
    fn in_sample_and_oracle_on_zero_solution() {
        let sol = Solution {
            x: vec![0.0; 3],
            value: 0.0,
            dual: None,
            fractional: vec![],
        };
        assert_eq!(in_sample(&sol, &[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(oracle(&sol, &[1.0, 2.0, 3.0]), 0.0);
    }

    #[test]
    fn mc_correction_matches_rectified_gaussian() {
        // n = 1 selection, z = 0, nu = 1, h = 0.1: the correction is
        // E[(z + d)^+ - z^+] / h = sigma phi(0) / h with sigma = sqrt(0.21).
        let inst = selection(1);
        let spec = DataSpec::new(vec![0.0], vec![1.0]).unwrap();
        let obs = obs_direct(vec![0.0], vec![1.0]);
        let pert = PerturbationSpec::new(0.1, FdOrder::First, 1_000_000).unwrap();
        let out = vgc_mc(&inst, &AffinePolicy::Saa, &obs, &spec, &pert, 7).unwrap();
        let expected = 0.21f64.sqrt() * normal::pdf(0.0) / 0.1;
        assert!((expected - 1.828185).abs() < 1e-5);
        assert!(
            (out.components[0] - expected).abs() < 0.01,
            "mc {} vs analytic {expected}",
            out.components[0]
        );
        assert_eq!(out.method, VgcMethod::Mc1);
        assert_eq!(out.draws_used, 1_000_000);
    }

    #[test]
    fn closed_form_matches_rectified_gaussian_exactly() {
        let inst = selection(1);
        let spec = DataSpec::new(vec![0.0], vec![1.0]).unwrap();
        let obs = obs_direct(vec![0.0], vec![1.0]);
        let pert = PerturbationSpec::new(0.1, FdOrder::First, 1).unwrap();
        let out = vgc_closed_form(&inst, &AffinePolicy::Saa, &obs, &spec, &pert).unwrap();
        let expected = 0.21f64.sqrt() * normal::pdf(0.0) / 0.1;
        assert!((out.components[0] - expected).abs() < 1e-12);
        assert!(out.mc_std_err.is_none());
    }

    #[test]
    fn zero_slope_class_has_zero_correction_and_consumes_no_draws() {
        let n = 4;
        let w = Matrix::new(n, 1, vec![1.0, -0.5, 2.0, 0.3]).unwrap();
        let spec = DataSpec::new(vec![0.0; n], vec![1.0; n])
            .unwrap()
            .with_covariates(w)
            .unwrap();
        let obs = generate_observation(&spec, None, 11).unwrap();
        let lm = AffinePolicy::LinearModel { theta: vec![0.7] };
        let pert = PerturbationSpec::new(0.2, FdOrder::Second, 64).unwrap();
        let inst = selection(n);
        let mc = vgc_mc(&inst, &lm, &obs, &spec, &pert, 5).unwrap();
        assert!(mc.components.iter().all(|c| *c == 0.0));
        assert_eq!(mc.total, 0.0);
        assert_eq!(mc.draws_used, 0);
        let cf = vgc_closed_form(&inst, &lm, &obs, &spec, &pert).unwrap();
        assert_eq!(cf.total, 0.0);
    }

    #[test]
    fn estimated_precision_reduces_to_plain_mc() {
        let inst = selection(3);
        let spec = DataSpec::new(vec![0.2, -0.4, 0.9], vec![1.0, 2.0, 0.5]).unwrap();
        let obs = generate_observation(&spec, None, 3).unwrap();
        let pert = PerturbationSpec::new(0.15, FdOrder::First, 128).unwrap();
        let plain = vgc_mc(&inst, &AffinePolicy::Saa, &obs, &spec, &pert, 21).unwrap();
        let same = vgc_estimated_precision(
            &inst,
            &AffinePolicy::Saa,
            &obs,
            &spec,
            &pert,
            21,
            &[1.0, 2.0, 0.5],
        )
        .unwrap();
        assert_eq!(plain, same);
        assert!(
            vgc_estimated_precision(
                &inst,
                &AffinePolicy::Saa,
                &obs,
                &spec,
                &pert,
                21,
                &[1.0, -1.0, 0.5]
            )
            .is_err()
        );
    }

    #[test]
    fn estimated_precision_closed_form_matches_analytic_scaling() {
        // nu_hat = 4 nu on the n = 1 example: sigma_hat = sqrt(0.01 + 0.1),
        // divisor h sqrt(nu_hat) = 0.2.
        let inst = selection(1);
        let spec = DataSpec::new(vec![0.0], vec![1.0]).unwrap();
        let obs = obs_direct(vec![0.0], vec![1.0]);
        let pert = PerturbationSpec::new(0.1, FdOrder::First, 1).unwrap();
        let out = vgc_closed_form_estimated_precision(
            &inst,
            &AffinePolicy::Saa,
            &obs,
            &spec,
            &pert,
            &[4.0],
        )
        .unwrap();
        let expected = 0.11f64.sqrt() * normal::pdf(0.0) / 0.2;
        assert!((out.components[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn estimated_precision_bias_grows_with_distortion() {
        // closed-form corrections drift away from the true-precision one as
        // nu_hat moves away from nu; three grid points, monotone trend
        let inst = selection(6);
        let spec = DataSpec::new(vec![0.3; 6], vec![1.0; 6]).unwrap();
        let pert = PerturbationSpec::new(0.1, FdOrder::First, 1).unwrap();
        let mut gaps = Vec::new();
        for factor in [1.0, 2.0, 4.0] {
            let mut gap = 0.0;
            for seed in 0..200 {
                let obs = generate_observation(&spec, None, 40_000 + seed).unwrap();
                let base = vgc_closed_form(&inst, &AffinePolicy::Saa, &obs, &spec, &pert).unwrap();
                let hat = vgc_closed_form_estimated_precision(
                    &inst,
                    &AffinePolicy::Saa,
                    &obs,
                    &spec,
                    &pert,
                    &[factor; 6],
                )
                .unwrap();
                gap += (hat.total - base.total).abs();
            }
            gaps.push(gap / 200.0);
        }
        assert!(
            gaps[0] < 1e-12,
            "matching precisions must agree, gap {}",
            gaps[0]
        );
        assert!(gaps[1] > gaps[0] && gaps[2] > gaps[1], "gaps {gaps:?}");
    }

    #[test]
    fn closed_form_and_mc_agree_within_monte_carlo_error() {
        let inst = selection(4);
        let spec = DataSpec::new(vec![0.5, -0.2, 0.0, 1.2], vec![1.0, 0.7, 2.0, 1.4]).unwrap();
        let obs = generate_observation(&spec, None, 19).unwrap();
        for order in [FdOrder::First, FdOrder::Second] {
            let pert = PerturbationSpec::new(0.2, order, 40_000).unwrap();
            let cf = vgc_closed_form(&inst, &AffinePolicy::Saa, &obs, &spec, &pert).unwrap();
            let mc = vgc_mc(&inst, &AffinePolicy::Saa, &obs, &spec, &pert, 77).unwrap();
            let se = mc.mc_std_err.unwrap();
            for j in 0..4 {
                assert!(
                    (cf.components[j] - mc.components[j]).abs() < 4.0 * se[j],
                    "order {order:?} coordinate {j}: cf {} mc {} se {}",
                    cf.components[j],
                    mc.components[j],
                    se[j]
                );
            }
        }
    }

    #[test]
    fn fully_randomized_form_has_the_same_conditional_mean() {
        // D_j also equals E[ d/(h sqrt(nu) a) * x_j(z + d U e_j) | z ] with
        // U uniform; checked by simulation against the closed form.
        let inst = selection(2);
        let spec = DataSpec::new(vec![0.4, -0.1], vec![1.0, 2.5]).unwrap();
        let obs = obs_direct(vec![0.35, -0.2], vec![1.0, 2.5]);
        let pert = PerturbationSpec::new(0.15, FdOrder::First, 1).unwrap();
        let cf = vgc_closed_form(&inst, &AffinePolicy::Saa, &obs, &spec, &pert).unwrap();

        let (a_c, r_c) =
            canonical_parts(&inst, &AffinePolicy::Saa, obs.z(), obs.effective_nu(), None).unwrap();
        let draws = 400_000usize;
        let mut rng = StreamKey::new(5150).child(77).rng();
        for j in 0..2 {
            let sigma = pert.sigma(obs.effective_nu()[j]);
            let scale = pert.h * obs.effective_nu()[j].sqrt() * a_c[j];
            let mut mean = 0.0;
            let mut m2 = 0.0;
            let mut r_mod = r_c.clone();
            for d in 0..draws {
                let g: f64 = rng.sample(StandardNormal);
                let u: f64 = rng.random();
                let delta = sigma * g;
                r_mod[j] = r_c[j] + a_c[j] * delta * u;
                let xj = solve_canonical(&inst, &r_mod).unwrap().x[j];
                let stat = delta / scale * xj;
                let dlt = stat - mean;
                mean += dlt / (d + 1) as f64;
                m2 += dlt * (stat - mean);
            }
            let se = (m2 / (draws - 1) as f64 / draws as f64).sqrt();
            assert!(
                (mean - cf.components[j]).abs() < 4.0 * se,
                "coordinate {j}: randomized {mean} vs closed form {} (se {se})",
                cf.components[j]
            );
        }
    }

    #[test]
    fn cv_on_data_independent_policy_returns_in_sample_exactly() {
        // uneven folds: S = 5, K = 3; weighting by fold size keeps the
        // identity exact for a policy that never looks at the data
        let n = 3;
        let w = Matrix::new(n, 1, vec![0.2, -1.0, 0.5]).unwrap();
        let spec = DataSpec::new(vec![0.0; n], vec![1.0; n])
            .unwrap()
            .with_covariates(w)
            .unwrap();
        let obs = generate_observation(&spec, Some(5), 31).unwrap();
        let lm = AffinePolicy::LinearModel { theta: vec![1.0] };
        let inst = selection(n);
        let out = cross_validation(&inst, &lm, &obs, 3, &spec).unwrap();
        let sol = solve(&inst, &lm.plugin_costs(obs.z(), &spec).unwrap()).unwrap();
        let expect = in_sample(&sol, obs.z());
        assert!((out.estimate - expect).abs() < 1e-12);
    }

    #[test]
    fn cv_input_validation() {
        let spec = DataSpec::new(vec![0.0; 2], vec![1.0; 2]).unwrap();
        let inst = selection(2);
        let direct = obs_direct(vec![0.1, 0.2], vec![1.0, 1.0]);
        assert!(cross_validation(&inst, &AffinePolicy::Saa, &direct, 2, &spec).is_err());
        let sampled = generate_observation(&spec, Some(3), 1).unwrap();
        assert!(cross_validation(&inst, &AffinePolicy::Saa, &sampled, 4, &spec).is_err());
        assert!(cross_validation(&inst, &AffinePolicy::Saa, &sampled, 1, &spec).is_err());
        assert!(cross_validation(&inst, &AffinePolicy::Saa, &sampled, 3, &spec).is_ok());
    }

    #[test]
    fn stein_baseline_hand_values() {
        let spec1 = DataSpec::new(vec![0.0], vec![1.0]).unwrap();
        let inst1 = selection(1);
        // z = 0.05, h = 0.1: threshold crossed, correction (1-0)/(0.2) = 5
        let obs = obs_direct(vec![0.05], vec![1.0]);
        let c = stein_baseline(&inst1, &AffinePolicy::Saa, &obs, &spec1, 0.1).unwrap();
        assert!((c - 5.0).abs() < 1e-12);
        // z = 1: no crossing
        let obs = obs_direct(vec![1.0], vec![1.0]);
        let c = stein_baseline(&inst1, &AffinePolicy::Saa, &obs, &spec1, 0.1).unwrap();
        assert_eq!(c, 0.0);
        // data-independent policy: zero correction
        let w = Matrix::new(1, 1, vec![1.0]).unwrap();
        let spec_w = DataSpec::new(vec![0.0], vec![1.0])
            .unwrap()
            .with_covariates(w)
            .unwrap();
        let lm = AffinePolicy::LinearModel { theta: vec![3.0] };
        let obs = obs_direct(vec![0.05], vec![1.0]);
        let c = stein_baseline(&inst1, &lm, &obs, &spec_w, 0.1).unwrap();
        assert_eq!(c, 0.0);
        assert!(stein_baseline(&inst1, &AffinePolicy::Saa, &obs, &spec1, 0.0).is_err());
    }

    #[test]
    fn minimize_instances_debias_toward_the_oracle_side() {
        // on a minimize selection the in-sample value under-estimates; the
        // correction must come out negative so subtracting it raises the
        // estimate
        let inst = ProblemInstance::Selection {
            n: 20,
            sense: Sense::Minimize,
        };
        let spec = DataSpec::new(vec![0.0; 20], vec![1.0; 20]).unwrap();
        let pert = PerturbationSpec::new(0.1, FdOrder::First, 1).unwrap();
        let mut mean_corr = 0.0;
        for seed in 0..50 {
            let obs = generate_observation(&spec, None, 900 + seed).unwrap();
            let out = vgc_closed_form(&inst, &AffinePolicy::Saa, &obs, &spec, &pert).unwrap();
            mean_corr += out.total / 50.0;
        }
        assert!(
            mean_corr < -1.0,
            "mean correction {mean_corr} should be clearly negative"
        );
    }
}
