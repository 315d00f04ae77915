//! Stochastic data model, observations, and problem-instance descriptions
//! shared by the policy, solver, and estimator layers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{StreamKey, purpose};
use rand::RngExt;
use rand_distr::StandardNormal;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid value: {0}")]
    Invalid(String),
}

/// Dense row-major matrix. Small helper; the crate never needs linear algebra
/// beyond dot products and tiny square solves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, ModelError> {
        if data.len() != rows * cols {
            return Err(ModelError::Dimension(format!(
                "matrix data length {} != {rows}x{cols}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(ModelError::Invalid("matrix entries must be finite".into()));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Mean of column `j`.
    pub fn col_mean(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self.get(i, j)).sum::<f64>() / self.rows as f64
    }
}

/// Ground-truth description of one instance's uncertainty: means, precisions
/// (inverse variances of the predictions), and optional per-coordinate
/// covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    mu: Vec<f64>,
    nu: Vec<f64>,
    covariates: Option<Matrix>,
}

impl DataSpec {
    pub fn new(mu: Vec<f64>, nu: Vec<f64>) -> Result<Self, ModelError> {
        if mu.is_empty() || mu.len() != nu.len() {
            return Err(ModelError::Dimension(format!(
                "mu length {} and nu length {} must match and be >= 1",
                mu.len(),
                nu.len()
            )));
        }
        if !mu.iter().all(|v| v.is_finite()) {
            return Err(ModelError::Invalid("mu must be finite".into()));
        }
        if !nu.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(ModelError::Invalid("nu must be finite and positive".into()));
        }
        Ok(DataSpec {
            mu,
            nu,
            covariates: None,
        })
    }

    pub fn with_covariates(mut self, w: Matrix) -> Result<Self, ModelError> {
        if w.rows() != self.n() {
            return Err(ModelError::Dimension(format!(
                "covariates have {} rows, expected {}",
                w.rows(),
                self.n()
            )));
        }
        self.covariates = Some(w);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn covariates(&self) -> Option<&Matrix> {
        self.covariates.as_ref()
    }

    /// Replace the precisions, keeping means and covariates. Used by the
    /// cross-validation harness for training means over partial samples and
    /// by the SNR sweep axis.
    pub fn with_nu(&self, nu: Vec<f64>) -> Result<Self, ModelError> {
        let mut out = DataSpec::new(self.mu.clone(), nu)?;
        out.covariates = self.covariates.clone();
        Ok(out)
    }
}

/// Signal-to-noise ratio: population variance of the means divided by the
/// mean noise variance of the predictions.
pub fn compute_snr(spec: &DataSpec) -> Result<f64, ModelError> {
    let n = spec.n();
    if n < 2 {
        return Err(ModelError::Invalid("snr needs n >= 2".into()));
    }
    let mean = spec.mu.iter().sum::<f64>() / n as f64;
    let var_mu = spec.mu.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n as f64;
    let noise = spec.nu.iter().map(|v| 1.0 / v).sum::<f64>() / n as f64;
    Ok(var_mu / noise)
}

/// A realized prediction vector, optionally backed by the raw samples it was
/// averaged from. `effective_nu` is the precision of `z` itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    z: Vec<f64>,
    raw_samples: Option<Matrix>,
    effective_nu: Vec<f64>,
}

impl Observation {
    pub fn direct(z: Vec<f64>, effective_nu: Vec<f64>) -> Result<Self, ModelError> {
        if z.len() != effective_nu.len() || z.is_empty() {
            return Err(ModelError::Dimension(
                "z and effective_nu must have equal length >= 1".into(),
            ));
        }
        if !effective_nu.iter().all(|v| *v > 0.0) {
            return Err(ModelError::Invalid("effective_nu must be positive".into()));
        }
        Ok(Observation {
            z,
            raw_samples: None,
            effective_nu,
        })
    }

    pub fn from_samples(raw: Matrix, effective_nu: Vec<f64>) -> Result<Self, ModelError> {
        if raw.rows() == 0 {
            return Err(ModelError::Invalid(
                "raw samples need at least one row".into(),
            ));
        }
        let z: Vec<f64> = (0..raw.cols()).map(|j| raw.col_mean(j)).collect();
        let mut obs = Observation::direct(z, effective_nu)?;
        obs.raw_samples = Some(raw);
        Ok(obs)
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn raw_samples(&self) -> Option<&Matrix> {
        self.raw_samples.as_ref()
    }

    pub fn effective_nu(&self) -> &[f64] {
        &self.effective_nu
    }

    pub fn s_samples(&self) -> Option<usize> {
        self.raw_samples.as_ref().map(|m| m.rows())
    }

    /// Column means of the raw samples must reproduce `z`.
    pub fn validate(&self) -> Result<(), ModelError> {
        if let Some(raw) = &self.raw_samples {
            for j in 0..self.n() {
                if (raw.col_mean(j) - self.z[j]).abs() > 1e-12 {
                    return Err(ModelError::Invalid(format!(
                        "column {j} mean deviates from z by more than 1e-12"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Draw an observation from the spec. In direct mode `z_j ~ N(mu_j, 1/nu_j)`;
/// in sample mode `s` i.i.d. rows `Y_i ~ N(mu, s/nu)` are drawn so that their
/// column means again have precision `nu`. Deterministic given the seed.
pub fn generate_observation(
    spec: &DataSpec,
    s_samples: Option<usize>,
    seed: u64,
) -> Result<Observation, ModelError> {
    let n = spec.n();
    let mut rng = StreamKey::new(seed).child(purpose::DATA).rng();
    match s_samples {
        None => {
            let z = (0..n)
                .map(|j| {
                    let g: f64 = rng.sample(StandardNormal);
                    spec.mu[j] + g / spec.nu[j].sqrt()
                })
                .collect();
            Observation::direct(z, spec.nu.clone())
        }
        Some(0) => Err(ModelError::Invalid("s_samples must be positive".into())),
        Some(s) => {
            // per-sample std so the mean of s samples has precision nu_j
            let sd: Vec<f64> = spec.nu.iter().map(|v| (s as f64 / v).sqrt()).collect();
            let mut data = vec![0.0; s * n];
            for row in data.chunks_exact_mut(n) {
                for (j, cell) in row.iter_mut().enumerate() {
                    let g: f64 = rng.sample(StandardNormal);
                    *cell = spec.mu[j] + g * sd[j];
                }
            }
            let raw = Matrix::new(s, n, data)?;
            Observation::from_samples(raw, spec.nu.clone())
        }
    }
}

/// Optimization orientation of the user-facing instance. Solvers work in a
/// canonical maximize orientation internally; minimize instances are handled
/// by negating plug-in costs at the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Maximize,
    Minimize,
}

impl Sense {
    /// +1 for maximize, -1 for minimize.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        }
    }
}

/// Linear program over the box coupled by a few averaged rows:
/// feasible set { x in [0,1]^n : (1/n) sum_j A_j x_j <= b }.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledLp {
    /// m x n constraint matrix; column j is the vector A_j.
    pub a: Matrix,
    pub b: Vec<f64>,
    pub sense: Sense,
}

impl CoupledLp {
    pub fn new(a: Matrix, b: Vec<f64>, sense: Sense) -> Result<Self, ModelError> {
        let m = a.rows();
        if m == 0 || a.cols() == 0 {
            return Err(ModelError::Dimension(
                "coupled LP needs m >= 1 and n >= 1".into(),
            ));
        }
        if b.len() != m {
            return Err(ModelError::Dimension(format!(
                "b has length {}, expected {m}",
                b.len()
            )));
        }
        if !b.iter().all(|v| v.is_finite()) {
            return Err(ModelError::Invalid("b must be finite".into()));
        }
        // Reject rows that no x in the box can satisfy; b_i = 0 rows that
        // force x = 0 on the row support are fine.
        let n = a.cols();
        for i in 0..m {
            let row_min = a.row(i).iter().map(|v| v.min(0.0)).sum::<f64>() / n as f64;
            if b[i] < row_min - 1e-12 {
                return Err(ModelError::Invalid(format!(
                    "row {i} is infeasible: b = {} below attainable minimum {row_min}",
                    b[i]
                )));
            }
        }
        // Joint feasibility for two rows: the box admits a point iff
        // b . d >= min_x (1/n) sum_j (A_j . d) x_j for every d >= 0, and the
        // left-minus-right gap is piecewise linear in the direction, so
        // checking the axes and each column's orthogonal directions is exact.
        if m == 2 {
            let col = |j: usize| [a.get(0, j), a.get(1, j)];
            let mut dirs: Vec<[f64; 2]> = vec![[1.0, 0.0], [0.0, 1.0]];
            for j in 0..n {
                let c = col(j);
                for d in [[c[1], -c[0]], [-c[1], c[0]]] {
                    if d[0] >= 0.0 && d[1] >= 0.0 && (d[0] > 0.0 || d[1] > 0.0) {
                        dirs.push(d);
                    }
                }
            }
            for d in dirs {
                let scale = d[0].abs() + d[1].abs();
                let reach: f64 = (0..n)
                    .map(|j| {
                        let c = col(j);
                        (c[0] * d[0] + c[1] * d[1]).min(0.0)
                    })
                    .sum::<f64>()
                    / n as f64;
                if b[0] * d[0] + b[1] * d[1] < reach - 1e-12 * scale.max(1.0) {
                    return Err(ModelError::Invalid(format!(
                        "rows are jointly infeasible: direction ({}, {}) certifies no box point \
                         satisfies both budgets",
                        d[0], d[1]
                    )));
                }
            }
        }
        Ok(CoupledLp { a, b, sense })
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    /// Column j of A.
    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.m()).map(|i| self.a.get(i, j)).collect()
    }
}

/// One binding decision of a weakly-coupled-by-variables instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingChoice {
    /// 0/1 values over the binding index block (may be empty when the
    /// binding decision has no objective coordinates of its own).
    pub x0: Vec<f64>,
}

/// One decoupled subproblem: a block of coordinates and, per binding choice,
/// a finite list of candidate extreme points in [0,1]^{block len}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subproblem {
    /// Global coordinate indices of this block.
    pub indices: Vec<usize>,
    /// candidates[b] lists the admissible extreme points under binding
    /// choice b; each point has the block's length.
    pub candidates: Vec<Vec<Vec<f64>>>,
}

/// Problem that decomposes into independent subproblems once one of finitely
/// many binding decisions is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeaklyCoupledVars {
    /// Global coordinate indices of the binding block (possibly empty).
    pub binding_indices: Vec<usize>,
    pub bindings: Vec<BindingChoice>,
    pub subproblems: Vec<Subproblem>,
    pub n: usize,
    pub sense: Sense,
}

impl WeaklyCoupledVars {
    pub fn new(
        binding_indices: Vec<usize>,
        bindings: Vec<BindingChoice>,
        subproblems: Vec<Subproblem>,
        n: usize,
        sense: Sense,
    ) -> Result<Self, ModelError> {
        if bindings.is_empty() {
            return Err(ModelError::Invalid(
                "need at least one binding choice".into(),
            ));
        }
        let mut seen = vec![false; n];
        let mut mark = |idx: &[usize]| -> Result<(), ModelError> {
            for &j in idx {
                if j >= n {
                    return Err(ModelError::Dimension(format!("index {j} out of range {n}")));
                }
                if seen[j] {
                    return Err(ModelError::Invalid(format!(
                        "index {j} appears in two blocks"
                    )));
                }
                seen[j] = true;
            }
            Ok(())
        };
        mark(&binding_indices)?;
        for sub in &subproblems {
            mark(&sub.indices)?;
        }
        if !seen.iter().all(|s| *s) {
            return Err(ModelError::Invalid(
                "blocks must partition all coordinates".into(),
            ));
        }
        for b in &bindings {
            if b.x0.len() != binding_indices.len() {
                return Err(ModelError::Dimension(
                    "binding choice has wrong length".into(),
                ));
            }
            if !b.x0.iter().all(|v| (0.0..=1.0).contains(v)) {
                return Err(ModelError::Invalid(
                    "binding values must lie in [0,1]".into(),
                ));
            }
        }
        for (k, sub) in subproblems.iter().enumerate() {
            if sub.candidates.len() != bindings.len() {
                return Err(ModelError::Dimension(format!(
                    "subproblem {k} needs one candidate list per binding choice"
                )));
            }
            for list in &sub.candidates {
                if list.is_empty() {
                    return Err(ModelError::Invalid(format!(
                        "subproblem {k}: empty candidate list"
                    )));
                }
                for c in list {
                    if c.len() != sub.indices.len() {
                        return Err(ModelError::Dimension(format!(
                            "subproblem {k}: candidate has wrong length"
                        )));
                    }
                    if !c.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)) {
                        return Err(ModelError::Invalid(format!(
                            "subproblem {k}: candidate coordinates must lie in [0,1]"
                        )));
                    }
                }
            }
        }
        Ok(WeaklyCoupledVars {
            binding_indices,
            bindings,
            subproblems,
            n,
            sense,
        })
    }
}

/// The three structured instance families the solvers handle exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ProblemInstance {
    /// Pick any subset of coordinates: feasible set {0,1}^n.
    Selection {
        n: usize,
        sense: Sense,
    },
    CoupledLp(CoupledLp),
    WeaklyCoupledVars(WeaklyCoupledVars),
}

impl ProblemInstance {
    pub fn n(&self) -> usize {
        match self {
            ProblemInstance::Selection { n, .. } => *n,
            ProblemInstance::CoupledLp(lp) => lp.n(),
            ProblemInstance::WeaklyCoupledVars(w) => w.n,
        }
    }

    pub fn sense(&self) -> Sense {
        match self {
            ProblemInstance::Selection { sense, .. } => *sense,
            ProblemInstance::CoupledLp(lp) => lp.sense,
            ProblemInstance::WeaklyCoupledVars(w) => w.sense,
        }
    }
}

/// Finite-difference order of the variance-gradient correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FdOrder {
    #[serde(rename = "1")]
    First,
    #[serde(rename = "2")]
    Second,
}

/// Step size and sampling budget of the randomized finite difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub h: f64,
    pub order: FdOrder,
    pub draws: usize,
}

impl PerturbationSpec {
    pub fn new(h: f64, order: FdOrder, draws: usize) -> Result<Self, ModelError> {
        if !(h > 0.0 && h < 1.0) {
            return Err(ModelError::Invalid(format!("h must lie in (0,1), got {h}")));
        }
        if draws == 0 {
            return Err(ModelError::Invalid("draws must be >= 1".into()));
        }
        Ok(PerturbationSpec { h, order, draws })
    }

    /// Std of the step-h perturbation for precision `nu`.
    pub fn sigma(&self, nu: f64) -> f64 {
        (self.h * self.h + 2.0 * self.h / nu.sqrt()).sqrt()
    }

    /// Std of the step-2h perturbation for precision `nu`.
    pub fn sigma_2h(&self, nu: f64) -> f64 {
        (4.0 * self.h * self.h + 4.0 * self.h / nu.sqrt()).sqrt()
    }
}
