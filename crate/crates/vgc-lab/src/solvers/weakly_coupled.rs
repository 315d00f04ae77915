//! Weakly-coupled-by-variables instances: enumerate the binding decisions,
//! solve each decoupled block by picking its best candidate extreme point,
//! keep the best overall. Ties break to the lowest candidate / binding index.

use crate::model::WeaklyCoupledVars;

use super::path::{CoordinatePath, Line, PathPiece, upper_envelope};
use super::{Solution, SolverError};

/// Per-binding tableau reused by `solve` and the coordinate paths.
pub(crate) struct WcvTable {
    /// block_values[b][k] = best candidate objective of subproblem k under
    /// binding b.
    block_values: Vec<Vec<f64>>,
    /// block_choice[b][k] = index of the winning candidate.
    block_choice: Vec<Vec<usize>>,
    /// totals[b] = binding objective + sum of block values.
    totals: Vec<f64>,
    best_binding: usize,
}

pub(crate) fn build_table(w: &WeaklyCoupledVars, r: &[f64]) -> WcvTable {
    let nb = w.bindings.len();
    let mut block_values = vec![vec![0.0; w.subproblems.len()]; nb];
    let mut block_choice = vec![vec![0usize; w.subproblems.len()]; nb];
    let mut totals = vec![0.0; nb];
    for (b, binding) in w.bindings.iter().enumerate() {
        let mut total: f64 = w
            .binding_indices
            .iter()
            .zip(&binding.x0)
            .map(|(&jj, x)| r[jj] * x)
            .sum();
        for (k, sub) in w.subproblems.iter().enumerate() {
            let mut best = f64::NEG_INFINITY;
            let mut choice = 0usize;
            for (c, cand) in sub.candidates[b].iter().enumerate() {
                let v: f64 = sub.indices.iter().zip(cand).map(|(&jj, x)| r[jj] * x).sum();
                if v > best {
                    best = v;
                    choice = c;
                }
            }
            block_values[b][k] = best;
            block_choice[b][k] = choice;
            total += best;
        }
        totals[b] = total;
    }
    let mut best_binding = 0usize;
    for b in 1..nb {
        if totals[b] > totals[best_binding] {
            best_binding = b;
        }
    }
    WcvTable {
        block_values,
        block_choice,
        totals,
        best_binding,
    }
}

/// Best total only, no allocation beyond the scan.
pub(crate) fn solve_value(w: &WeaklyCoupledVars, r: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (b, binding) in w.bindings.iter().enumerate() {
        let mut total: f64 = w
            .binding_indices
            .iter()
            .zip(&binding.x0)
            .map(|(&jj, x)| r[jj] * x)
            .sum();
        for sub in &w.subproblems {
            let mut block = f64::NEG_INFINITY;
            for cand in &sub.candidates[b] {
                let v: f64 = sub.indices.iter().zip(cand).map(|(&jj, x)| r[jj] * x).sum();
                if v > block {
                    block = v;
                }
            }
            total += block;
        }
        if total > best {
            best = total;
        }
    }
    best
}

pub(crate) fn solve(w: &WeaklyCoupledVars, r: &[f64]) -> Solution {
    let table = build_table(w, r);
    let b = table.best_binding;
    let mut x = vec![0.0; w.n];
    for (&jj, v) in w.binding_indices.iter().zip(&w.bindings[b].x0) {
        x[jj] = *v;
    }
    for (k, sub) in w.subproblems.iter().enumerate() {
        let cand = &sub.candidates[b][table.block_choice[b][k]];
        for (&jj, v) in sub.indices.iter().zip(cand) {
            x[jj] = *v;
        }
    }
    let value = table.totals[b];
    let fractional = x
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 1e-12 && **v < 1.0 - 1e-12)
        .map(|(j, _)| j)
        .collect();
    Solution {
        x,
        value,
        dual: None,
        fractional,
    }
}

/// Path of coordinate j. Every (binding, candidate) pair of j's block gives
/// one affine function of t; V is their upper envelope.
pub(crate) fn coordinate_path(
    w: &WeaklyCoupledVars,
    r: &[f64],
    j: usize,
    a_j: f64,
    table: &WcvTable,
) -> Result<CoordinatePath, SolverError> {
    let mut lines: Vec<Line> = Vec::new();
    let mut payload: Vec<f64> = Vec::new(); // x_j per line

    if let Some(pos) = w.binding_indices.iter().position(|&jj| jj == j) {
        for (b, binding) in w.bindings.iter().enumerate() {
            let xj = binding.x0[pos];
            lines.push(Line {
                slope: a_j * xj,
                intercept: table.totals[b],
                tag: payload.len(),
            });
            payload.push(xj);
        }
    } else {
        let k = w
            .subproblems
            .iter()
            .position(|sub| sub.indices.contains(&j))
            .ok_or_else(|| SolverError::Internal(format!("coordinate {j} not in any block")))?;
        let sub = &w.subproblems[k];
        let pos = sub.indices.iter().position(|&jj| jj == j).unwrap();
        for b in 0..w.bindings.len() {
            let base = table.totals[b] - table.block_values[b][k];
            for cand in &sub.candidates[b] {
                let cand_value: f64 = sub.indices.iter().zip(cand).map(|(&jj, x)| r[jj] * x).sum();
                let xj = cand[pos];
                lines.push(Line {
                    slope: a_j * xj,
                    intercept: base + cand_value,
                    tag: payload.len(),
                });
                payload.push(xj);
            }
        }
    }

    let (cuts, kept) = upper_envelope(&lines);
    let pieces = kept
        .iter()
        .map(|line| PathPiece {
            x_j: payload[line.tag],
            slope: line.slope,
            intercept: line.intercept,
        })
        .collect();
    CoordinatePath::new(j, a_j, cuts, pieces)
}
