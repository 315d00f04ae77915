//! Selection instances: feasible set {0,1}^n, so each coordinate activates
//! exactly when its plug-in cost is positive (canonical maximize).

use super::path::{CoordinatePath, Line, PathPiece, upper_envelope};
use super::{Solution, SolverError};

pub(crate) fn solve(r: &[f64]) -> Solution {
    let x: Vec<f64> = r
        .iter()
        .map(|rj| if *rj > 0.0 { 1.0 } else { 0.0 })
        .collect();
    let value = r.iter().map(|rj| rj.max(0.0)).sum();
    Solution {
        x,
        value,
        dual: None,
        fractional: vec![],
    }
}

/// Path of coordinate j: V(t) = C + max(0, r_j + a_j t) with C the total of
/// the other coordinates.
pub(crate) fn coordinate_path(
    r: &[f64],
    j: usize,
    a_j: f64,
    total_positive: f64,
) -> Result<CoordinatePath, SolverError> {
    let c = total_positive - r[j].max(0.0);
    let lines = [
        Line {
            slope: 0.0,
            intercept: c,
            tag: 0,
        },
        Line {
            slope: a_j,
            intercept: c + r[j],
            tag: 1,
        },
    ];
    let (cuts, kept) = upper_envelope(&lines);
    let pieces = kept
        .iter()
        .map(|line| PathPiece {
            x_j: line.tag as f64,
            slope: line.slope,
            intercept: line.intercept,
        })
        .collect();
    CoordinatePath::new(j, a_j, cuts, pieces)
}
