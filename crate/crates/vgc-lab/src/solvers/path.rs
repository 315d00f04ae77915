//! Coordinate solution paths: the exact piecewise structure of the optimal
//! value t -> V(z + t e_j) when one plug-in cost is swept. The optimal value
//! is a maximum of finitely many affine functions of t, so V is convex
//! piecewise affine and the solution coordinate x_j is piecewise constant.

use serde::Serialize;

use super::SolverError;

/// Dedup tolerance for nearly coincident breakpoints (nearly parallel lines).
pub(crate) const BREAKPOINT_DEDUP: f64 = 1e-12;

/// One affine piece of a coordinate path: on its t-interval the solution
/// coordinate equals `x_j` and V(t) = intercept + slope * t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathPiece {
    pub x_j: f64,
    pub slope: f64,
    pub intercept: f64,
}

/// Exact description of t -> V(z + t e_j) in canonical (maximize)
/// orientation. `breakpoints` are the finite interior breakpoints; piece i
/// covers (breakpoints[i-1], breakpoints[i]) with the outer pieces unbounded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinatePath {
    pub coordinate: usize,
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<PathPiece>,
}

impl CoordinatePath {
    /// Build and validate: continuity at breakpoints, the Danskin identity
    /// slope = a_j * x_j, and convexity (slopes non-decreasing).
    pub(crate) fn new(
        coordinate: usize,
        a_j: f64,
        breakpoints: Vec<f64>,
        pieces: Vec<PathPiece>,
    ) -> Result<Self, SolverError> {
        if pieces.len() != breakpoints.len() + 1 || pieces.is_empty() {
            return Err(SolverError::Internal(format!(
                "path for coordinate {coordinate}: {} pieces vs {} breakpoints",
                pieces.len(),
                breakpoints.len()
            )));
        }
        let path = CoordinatePath {
            coordinate,
            breakpoints,
            pieces,
        };
        path.check(a_j)?;
        Ok(path)
    }

    fn check(&self, a_j: f64) -> Result<(), SolverError> {
        let scale = self
            .pieces
            .iter()
            .map(|p| p.intercept.abs().max(p.slope.abs()))
            .fold(1.0f64, f64::max);
        for (i, w) in self.breakpoints.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(SolverError::Internal(format!(
                    "path breakpoints not increasing at {i}"
                )));
            }
        }
        for (i, p) in self.pieces.iter().enumerate() {
            if !(-1e-9..=1.0 + 1e-9).contains(&p.x_j) {
                return Err(SolverError::Internal(format!(
                    "piece {i}: x_j = {} out of [0,1]",
                    p.x_j
                )));
            }
            if (p.slope - a_j * p.x_j).abs() > 1e-9 * scale {
                return Err(SolverError::Internal(format!(
                    "piece {i}: slope {} != a_j * x_j = {}",
                    p.slope,
                    a_j * p.x_j
                )));
            }
            if i + 1 < self.pieces.len() {
                let c = self.breakpoints[i];
                let q = &self.pieces[i + 1];
                if ((p.intercept + p.slope * c) - (q.intercept + q.slope * c)).abs()
                    > 1e-9 * scale.max(c.abs())
                {
                    return Err(SolverError::Internal(format!(
                        "path discontinuous at breakpoint {i} (t = {c})"
                    )));
                }
                if q.slope < p.slope - 1e-9 * scale {
                    return Err(SolverError::Internal(format!(
                        "path slopes decrease at breakpoint {i}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Index of the piece whose interval contains t (right-open convention).
    pub fn piece_index(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|c| *c <= t)
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let p = &self.pieces[self.piece_index(t)];
        p.intercept + p.slope * t
    }

    pub fn x_at(&self, t: f64) -> f64 {
        self.pieces[self.piece_index(t)].x_j
    }
}

/// Candidate line y = slope * t + intercept tagged with the payload index it
/// came from.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Line {
    pub slope: f64,
    pub intercept: f64,
    pub tag: usize,
}

/// Upper envelope of lines. Returns the interior breakpoints and the winning
/// line per piece, left to right. Ties prefer the lowest tag; pieces narrower
/// than the dedup tolerance are dropped.
pub(crate) fn upper_envelope(lines: &[Line]) -> (Vec<f64>, Vec<Line>) {
    assert!(!lines.is_empty());
    let mut sorted: Vec<Line> = lines.to_vec();
    sorted.sort_by(|a, b| {
        a.slope
            .total_cmp(&b.slope)
            .then(a.intercept.total_cmp(&b.intercept))
            // among identical lines the lowest tag must survive the dedup
            // below, so it goes last
            .then(b.tag.cmp(&a.tag))
    });
    // one line per slope: the highest intercept dominates
    let mut dedup: Vec<Line> = Vec::with_capacity(sorted.len());
    for line in sorted {
        match dedup.last() {
            Some(last) if (line.slope - last.slope).abs() == 0.0 => {
                *dedup.last_mut().unwrap() = line;
            }
            _ => dedup.push(line),
        }
    }

    let mut kept: Vec<Line> = Vec::with_capacity(dedup.len());
    let mut cuts: Vec<f64> = Vec::with_capacity(dedup.len());
    let cross = |a: &Line, b: &Line| (a.intercept - b.intercept) / (b.slope - a.slope);
    for line in dedup {
        loop {
            match kept.len() {
                0 => break,
                1 => {
                    let x = cross(&kept[0], &line);
                    if x.is_finite() {
                        cuts.push(x);
                        break;
                    }
                    // parallel after dedup cannot happen; defensive
                    kept.pop();
                }
                _ => {
                    let x = cross(kept.last().unwrap(), &line);
                    if x <= *cuts.last().unwrap() + BREAKPOINT_DEDUP {
                        kept.pop();
                        cuts.pop();
                    } else {
                        cuts.push(x);
                        break;
                    }
                }
            }
        }
        kept.push(line);
    }
    (cuts, kept)
}
