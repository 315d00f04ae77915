//! Affine plug-in policy classes. A policy maps the observed predictions to
//! coordinatewise plug-in costs r_j = a_j z_j + b_j; the solver then
//! optimizes r in place of the unknown means.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DataSpec, Matrix};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("policy requires covariates but the data spec has none")]
    MissingCovariates,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

/// One member of an affine plug-in class: the class tag plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum AffinePolicy {
    /// r_j = z_j.
    Saa,
    /// r_j = W_j . theta; ignores the observations entirely.
    LinearModel { theta: Vec<f64> },
    /// r_j = nu_j/(nu_j+tau) z_j + tau/(nu_j+tau) W_j . beta.
    MixedEffects { tau: f64, beta: Vec<f64> },
}

impl AffinePolicy {
    pub fn class_name(&self) -> &'static str {
        match self {
            AffinePolicy::Saa => "saa",
            AffinePolicy::LinearModel { .. } => "linear_model",
            AffinePolicy::MixedEffects { .. } => "mixed_effects",
        }
    }

    pub fn needs_covariates(&self) -> bool {
        !matches!(self, AffinePolicy::Saa)
    }

    fn check_theta(&self) -> Result<(), PolicyError> {
        if let AffinePolicy::MixedEffects { tau, .. } = self
            && (!tau.is_finite() || *tau < 0.0)
        {
            return Err(PolicyError::Invalid(format!("tau must be >= 0, got {tau}")));
        }
        Ok(())
    }

    /// Coefficient maps evaluated against explicit precisions/covariates.
    /// `nu` is the precision of the predictions the policy will be fed,
    /// which differs from the spec's when training on partial samples.
    pub fn coefficients_with(
        &self,
        nu: &[f64],
        covariates: Option<&Matrix>,
    ) -> Result<(Vec<f64>, Vec<f64>), PolicyError> {
        self.check_theta()?;
        let n = nu.len();
        let dot_w = |theta: &[f64]| -> Result<Vec<f64>, PolicyError> {
            let w = covariates.ok_or(PolicyError::MissingCovariates)?;
            if w.cols() != theta.len() {
                return Err(PolicyError::Dimension(format!(
                    "theta has length {}, covariates have {} columns",
                    theta.len(),
                    w.cols()
                )));
            }
            if w.rows() != n {
                return Err(PolicyError::Dimension(format!(
                    "covariates have {} rows, expected {n}",
                    w.rows()
                )));
            }
            Ok((0..n)
                .map(|j| w.row(j).iter().zip(theta).map(|(wj, t)| wj * t).sum())
                .collect())
        };
        match self {
            AffinePolicy::Saa => Ok((vec![1.0; n], vec![0.0; n])),
            AffinePolicy::LinearModel { theta } => Ok((vec![0.0; n], dot_w(theta)?)),
            AffinePolicy::MixedEffects { tau, beta } => {
                let wb = dot_w(beta)?;
                let mut a = Vec::with_capacity(n);
                let mut b = Vec::with_capacity(n);
                for j in 0..n {
                    let shrink = nu[j] / (nu[j] + tau);
                    a.push(shrink);
                    b.push((1.0 - shrink) * wb[j]);
                }
                Ok((a, b))
            }
        }
    }

    pub fn coefficients(&self, spec: &DataSpec) -> Result<(Vec<f64>, Vec<f64>), PolicyError> {
        self.coefficients_with(spec.nu(), spec.covariates())
    }

    /// Plug-in costs r with r_j = a_j z_j + b_j.
    pub fn plugin_costs(&self, z: &[f64], spec: &DataSpec) -> Result<Vec<f64>, PolicyError> {
        if z.len() != spec.n() {
            return Err(PolicyError::Dimension(format!(
                "z has length {}, spec has n = {}",
                z.len(),
                spec.n()
            )));
        }
        let (a, b) = self.coefficients(spec)?;
        Ok(plugin_costs_from(&a, &b, z))
    }
}

/// r_j = a_j z_j + b_j for precomputed coefficients.
pub fn plugin_costs_from(a: &[f64], b: &[f64], z: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .zip(z)
        .map(|((aj, bj), zj)| aj * zj + bj)
        .collect()
}

/// A finite family of policies evaluated side by side. Policy learning is an
/// argmax of the debiased estimate over this grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyGrid {
    members: Vec<AffinePolicy>,
}

impl PolicyGrid {
    /// Validates the grid against a spec: coefficient maps must evaluate and
    /// every nonzero |a_j| must stay bounded away from zero on the grid.
    pub fn new(members: Vec<AffinePolicy>, spec: &DataSpec) -> Result<Self, PolicyError> {
        if members.is_empty() {
            return Err(PolicyError::Invalid("policy grid must be non-empty".into()));
        }
        let mut a_min = f64::INFINITY;
        for m in &members {
            let (a, _) = m.coefficients(spec)?;
            for aj in a {
                if aj != 0.0 {
                    a_min = a_min.min(aj.abs());
                }
            }
        }
        if a_min != f64::INFINITY && a_min < 1e-12 {
            return Err(PolicyError::Invalid(format!(
                "grid drives nonzero plug-in slopes down to {a_min}; not bounded away from zero"
            )));
        }
        Ok(PolicyGrid { members })
    }

    pub fn members(&self) -> &[AffinePolicy] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}
