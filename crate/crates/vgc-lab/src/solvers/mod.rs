//! Exact solvers for the three structured instance families, plus coordinate
//! parametric solution paths.
//!
//! Everything below the public boundary works in a canonical MAXIMIZE
//! orientation; minimize instances are ingested by negating plug-in costs.
//! Solution values and coordinate paths are therefore reported in canonical
//! orientation.

mod coupled_lp;
pub mod path;
mod selection;
mod weakly_coupled;

use serde::Serialize;
use thiserror::Error;

use crate::model::{ProblemInstance, Sense};

pub use path::{CoordinatePath, PathPiece};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("instance infeasible: {0}")]
    Infeasible(String),
    #[error("duality gap {gap} not closed at value {value}")]
    DualityGap { gap: f64, value: f64 },
    #[error("coordinate path unsupported: {0}")]
    UnsupportedPath(String),
    #[error("perturbed coordinate has zero plug-in slope; correction must short-circuit")]
    ZeroSlope,
    #[error("solver internal error: {0}")]
    Internal(String),
}

/// An optimal solution in canonical (maximize) orientation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub x: Vec<f64>,
    /// Objective r . x for the canonical cost vector.
    pub value: f64,
    /// Dual prices of the coupled rows (CoupledLp only).
    pub dual: Option<Vec<f64>>,
    /// Indices with x strictly inside (0,1).
    pub fractional: Vec<usize>,
}

fn check_len(inst: &ProblemInstance, r: &[f64]) -> Result<(), SolverError> {
    if r.len() != inst.n() {
        return Err(SolverError::Dimension(format!(
            "cost vector length {} != instance dimension {}",
            r.len(),
            inst.n()
        )));
    }
    Ok(())
}

/// Canonicalize user-orientation plug-in costs.
fn canonical_costs(inst: &ProblemInstance, r: &[f64]) -> Vec<f64> {
    match inst.sense() {
        Sense::Maximize => r.to_vec(),
        Sense::Minimize => r.iter().map(|v| -v).collect(),
    }
}

pub(crate) fn solve_canonical(
    inst: &ProblemInstance,
    r_canon: &[f64],
) -> Result<Solution, SolverError> {
    check_len(inst, r_canon)?;
    match inst {
        ProblemInstance::Selection { .. } => Ok(selection::solve(r_canon)),
        ProblemInstance::WeaklyCoupledVars(w) => Ok(weakly_coupled::solve(w, r_canon)),
        ProblemInstance::CoupledLp(lp) => coupled_lp::solve(lp, r_canon),
    }
}

/// Optimal value only, skipping primal recovery and allocation where the
/// value is available directly. Hot path of the Monte Carlo correction.
pub(crate) fn solve_value_canonical(
    inst: &ProblemInstance,
    r_canon: &[f64],
) -> Result<f64, SolverError> {
    match inst {
        ProblemInstance::Selection { .. } => Ok(r_canon.iter().map(|v| v.max(0.0)).sum()),
        ProblemInstance::WeaklyCoupledVars(w) => Ok(weakly_coupled::solve_value(w, r_canon)),
        ProblemInstance::CoupledLp(lp) if lp.m() == 1 => coupled_lp::solve_value_m1(lp, r_canon),
        ProblemInstance::CoupledLp(lp) => coupled_lp::solve(lp, r_canon).map(|s| s.value),
    }
}

/// Solve an instance for user-orientation plug-in costs `r`.
pub fn solve(inst: &ProblemInstance, r: &[f64]) -> Result<Solution, SolverError> {
    check_len(inst, r)?;
    solve_canonical(inst, &canonical_costs(inst, r))
}

/// Per-(instance, cost vector) context amortizing shared work across the n
/// coordinate paths of one correction.
pub(crate) struct PathBuilder<'a> {
    inst: &'a ProblemInstance,
    r: Vec<f64>,
    kind: BuilderKind,
}

enum BuilderKind {
    Selection { total_positive: f64 },
    Wcv { table: weakly_coupled::WcvTable },
    LpFast { ctx: coupled_lp::LpPathCtx },
    LpGeneral,
}

impl<'a> PathBuilder<'a> {
    /// `r_canon` must already be in canonical orientation.
    pub(crate) fn new(inst: &'a ProblemInstance, r_canon: Vec<f64>) -> Result<Self, SolverError> {
        check_len(inst, &r_canon)?;
        let kind = match inst {
            ProblemInstance::Selection { .. } => BuilderKind::Selection {
                total_positive: r_canon.iter().map(|v| v.max(0.0)).sum(),
            },
            ProblemInstance::WeaklyCoupledVars(w) => BuilderKind::Wcv {
                table: weakly_coupled::build_table(w, &r_canon),
            },
            ProblemInstance::CoupledLp(lp) => {
                if lp.m() != 1 {
                    return Err(SolverError::UnsupportedPath(format!(
                        "coordinate paths require m = 1 coupled rows, instance has {}",
                        lp.m()
                    )));
                }
                let base = coupled_lp::solve(lp, &r_canon)?;
                match coupled_lp::LpPathCtx::new(lp, &r_canon, base.value) {
                    Some(ctx) => BuilderKind::LpFast { ctx },
                    None => BuilderKind::LpGeneral,
                }
            }
        };
        Ok(PathBuilder {
            inst,
            r: r_canon,
            kind,
        })
    }

    /// Path of coordinate `j` whose plug-in cost moves as r_j + a_j t.
    pub(crate) fn coordinate_path(
        &self,
        j: usize,
        a_j: f64,
    ) -> Result<CoordinatePath, SolverError> {
        if j >= self.inst.n() {
            return Err(SolverError::Dimension(format!(
                "coordinate {j} out of range"
            )));
        }
        if a_j == 0.0 {
            return Err(SolverError::ZeroSlope);
        }
        match (&self.kind, self.inst) {
            (BuilderKind::Selection { total_positive }, _) => {
                selection::coordinate_path(&self.r, j, a_j, *total_positive)
            }
            (BuilderKind::Wcv { table }, ProblemInstance::WeaklyCoupledVars(w)) => {
                weakly_coupled::coordinate_path(w, &self.r, j, a_j, table)
            }
            (BuilderKind::LpFast { ctx }, ProblemInstance::CoupledLp(lp)) => {
                ctx.coordinate_path(lp, &self.r, j, a_j)
            }
            (BuilderKind::LpGeneral, ProblemInstance::CoupledLp(lp)) => {
                coupled_lp::coordinate_path_general(lp, &self.r, j, a_j)
            }
            _ => Err(SolverError::Internal("path builder kind mismatch".into())),
        }
    }
}

/// Exact description of t -> V(z + t e_j) for user-orientation costs `r` and
/// plug-in slope `a_j`, reported in canonical orientation.
pub fn coordinate_path(
    inst: &ProblemInstance,
    r: &[f64],
    j: usize,
    a_j: f64,
) -> Result<CoordinatePath, SolverError> {
    let sign = inst.sense().sign();
    let builder = PathBuilder::new(inst, canonical_costs(inst, r))?;
    builder.coordinate_path(j, sign * a_j)
}
