//! LPs over the box coupled by a few averaged rows, solved through the
//! Lagrangian dual
//!
//!   L(lambda) = b' lambda + (1/n) sum_j (r_j - A_j' lambda)^+ ,  lambda >= 0,
//!
//! with strong duality V = n L(lambda*). One row is minimized exactly by a
//! breakpoint scan; more rows use projected subgradient steps with an exact
//! cyclic coordinate polish, certified by the duality gap. Primal recovery
//! thresholds on reduced costs and repairs at most m fractional components.

use crate::model::CoupledLp;

use super::path::{BREAKPOINT_DEDUP, CoordinatePath, PathPiece};
use super::{Solution, SolverError};

const GAP_RTOL: f64 = 1e-6;
const RED_COST_EPS: f64 = 1e-9;

/// n * L(lambda).
pub(crate) fn n_lagrangian(lp: &CoupledLp, r: &[f64], lambda: &[f64]) -> f64 {
    let n = lp.n();
    let m = lp.m();
    let mut acc = 0.0;
    for i in 0..m {
        acc += n as f64 * lp.b[i] * lambda[i];
    }
    for j in 0..n {
        let mut rc = r[j];
        for i in 0..m {
            rc -= lp.a.get(i, j) * lambda[i];
        }
        if rc > 0.0 {
            acc += rc;
        }
    }
    acc
}

/// Smallest minimizer over lam >= 0 of  c*lam + sum_k (r_k - alpha_k*lam)^+.
/// The function is convex piecewise linear; walking its kinks in ascending
/// order, the slope gains |alpha_k| at each crossing.
fn min_pwl_1d(c: f64, terms: impl Iterator<Item = (f64, f64)>) -> Result<f64, SolverError> {
    let mut slope = c;
    let mut kinks: Vec<(f64, f64)> = Vec::new();
    for (r, alpha) in terms {
        if alpha > 0.0 {
            let u = r / alpha;
            if u > 0.0 {
                slope -= alpha;
                kinks.push((u, alpha));
            }
        } else if alpha < 0.0 {
            let u = r / alpha;
            if u <= 0.0 {
                slope -= alpha;
            } else {
                kinks.push((u, alpha));
            }
        }
    }
    if slope >= 0.0 {
        return Ok(0.0);
    }
    kinks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut i = 0;
    while i < kinks.len() {
        let u = kinks[i].0;
        while i < kinks.len() && kinks[i].0 == u {
            slope += kinks[i].1.abs();
            i += 1;
        }
        if slope >= 0.0 {
            return Ok(u);
        }
    }
    Err(SolverError::Infeasible(
        "dual unbounded below: primal infeasible".into(),
    ))
}

fn reduced_cost(lp: &CoupledLp, r: &[f64], lambda: &[f64], j: usize) -> f64 {
    let mut rc = r[j];
    for i in 0..lp.m() {
        rc -= lp.a.get(i, j) * lambda[i];
    }
    rc
}

/// Threshold on reduced costs and repair the zero-reduced-cost components so
/// binding rows hold with equality. Returns (x, strictly fractional indices).
fn recover_primal(
    lp: &CoupledLp,
    r: &[f64],
    lambda: &[f64],
) -> Result<(Vec<f64>, Vec<usize>), SolverError> {
    let n = lp.n();
    let m = lp.m();
    let mut x = vec![0.0; n];
    let mut free: Vec<usize> = Vec::new();
    for j in 0..n {
        let rc = reduced_cost(lp, r, lambda, j);
        if rc > RED_COST_EPS {
            x[j] = 1.0;
        } else if rc >= -RED_COST_EPS {
            free.push(j);
        }
    }
    let lam_scale = 1.0 + lambda.iter().map(|l| l.abs()).sum::<f64>();
    let binding: Vec<usize> = (0..m).filter(|&i| lambda[i] > 1e-9 * lam_scale).collect();
    if binding.is_empty() {
        return Ok((x, vec![]));
    }

    let residual = |i: usize, x: &[f64]| -> f64 {
        let act: f64 = (0..n).map(|j| lp.a.get(i, j) * x[j]).sum();
        n as f64 * lp.b[i] - act
    };
    let row_scale = |i: usize| 1.0 + (n as f64 * lp.b[i]).abs();

    match binding.len() {
        1 => {
            let i0 = binding[0];
            let mut t = residual(i0, &x);
            for &j in &free {
                let aij = lp.a.get(i0, j);
                if aij == 0.0 {
                    continue;
                }
                let v = (t / aij).clamp(0.0, 1.0);
                x[j] = v;
                t -= aij * v;
            }
            if t.abs() > 1e-7 * row_scale(i0) {
                return Err(SolverError::Internal(format!(
                    "primal repair left binding-row residual {t}"
                )));
            }
        }
        2 => {
            let (i0, i1) = (binding[0], binding[1]);
            if free.len() > 16 {
                return Err(SolverError::Internal(format!(
                    "primal repair: degenerate free set of {} coordinates",
                    free.len()
                )));
            }
            // complete search: a fractional support of size 2, 1, or 0 inside
            // the free set, with the remaining free coordinates at 0/1
            let t0 = [residual(i0, &x), residual(i1, &x)];
            let a_of = |i: usize, j: usize| lp.a.get(i, j);
            let within = |v: f64| (-1e-9..=1.0 + 1e-9).contains(&v);
            let tol = [1e-7 * row_scale(i0), 1e-7 * row_scale(i1)];
            let mut assignment: Option<Vec<f64>> = None;
            'sizes: for support_size in [2usize, 1, 0] {
                let mut supports: Vec<Vec<usize>> = Vec::new();
                match support_size {
                    2 => {
                        for p in 0..free.len() {
                            for q in p + 1..free.len() {
                                supports.push(vec![p, q]);
                            }
                        }
                    }
                    1 => supports.extend((0..free.len()).map(|p| vec![p])),
                    _ => supports.push(vec![]),
                }
                for support in supports {
                    let rest: Vec<usize> =
                        (0..free.len()).filter(|p| !support.contains(p)).collect();
                    for mask in 0u32..(1u32 << rest.len()) {
                        let mut t = t0;
                        for (bit, &p) in rest.iter().enumerate() {
                            if mask >> bit & 1 == 1 {
                                t[0] -= a_of(i0, free[p]);
                                t[1] -= a_of(i1, free[p]);
                            }
                        }
                        let vals: Option<Vec<f64>> = match support.len() {
                            2 => {
                                let (jp, jq) = (free[support[0]], free[support[1]]);
                                let (a00, a01) = (a_of(i0, jp), a_of(i0, jq));
                                let (a10, a11) = (a_of(i1, jp), a_of(i1, jq));
                                let det = a00 * a11 - a01 * a10;
                                if det.abs() < 1e-12 {
                                    None
                                } else {
                                    let vp = (t[0] * a11 - t[1] * a01) / det;
                                    let vq = (a00 * t[1] - a10 * t[0]) / det;
                                    (within(vp) && within(vq)).then(|| vec![vp, vq])
                                }
                            }
                            1 => {
                                let j = free[support[0]];
                                let (a0, a1) = (a_of(i0, j), a_of(i1, j));
                                if a0.abs() >= 1e-12 {
                                    let v = t[0] / a0;
                                    (within(v) && (t[1] - a1 * v).abs() <= tol[1]).then(|| vec![v])
                                } else if a1.abs() >= 1e-12 {
                                    let v = t[1] / a1;
                                    (within(v) && t[0].abs() <= tol[0]).then(|| vec![v])
                                } else {
                                    None
                                }
                            }
                            _ => (t[0].abs() <= tol[0] && t[1].abs() <= tol[1]).then(Vec::new),
                        };
                        if let Some(vals) = vals {
                            let mut xs = vec![0.0; free.len()];
                            for (bit, &p) in rest.iter().enumerate() {
                                xs[p] = (mask >> bit & 1) as f64;
                            }
                            for (&p, v) in support.iter().zip(&vals) {
                                xs[p] = v.clamp(0.0, 1.0);
                            }
                            assignment = Some(xs);
                            break 'sizes;
                        }
                    }
                }
            }
            match assignment {
                Some(xs) => {
                    for (&j, v) in free.iter().zip(xs) {
                        x[j] = v;
                    }
                }
                None => {
                    return Err(SolverError::Internal(format!(
                        "primal repair found no assignment of {} free coordinates for rows \
                         ({i0}, {i1}) at lambda = {lambda:?}",
                        free.len()
                    )));
                }
            }
        }
        _ => {
            return Err(SolverError::Internal(format!(
                "primal repair not implemented for {} binding rows",
                binding.len()
            )));
        }
    }

    let fractional: Vec<usize> = (0..n)
        .filter(|&j| x[j] > 1e-12 && x[j] < 1.0 - 1e-12)
        .collect();
    if fractional.len() > m {
        return Err(SolverError::Internal(format!(
            "{} fractional components exceed m = {m}",
            fractional.len()
        )));
    }
    Ok((x, fractional))
}

fn finish(lp: &CoupledLp, r: &[f64], lambda: Vec<f64>) -> Result<Solution, SolverError> {
    let (x, fractional) = recover_primal(lp, r, &lambda)?;
    let n = lp.n();
    let value: f64 = r.iter().zip(&x).map(|(rj, xj)| rj * xj).sum();
    let nl = n_lagrangian(lp, r, &lambda);
    if (value - nl).abs() > GAP_RTOL * (1.0 + value.abs()) {
        return Err(SolverError::DualityGap {
            gap: (value - nl).abs(),
            value,
        });
    }
    for i in 0..lp.m() {
        let act: f64 = (0..n).map(|j| lp.a.get(i, j) * x[j]).sum::<f64>() / n as f64;
        if act > lp.b[i] + 1e-9 {
            return Err(SolverError::Internal(format!(
                "recovered primal violates row {i}: {act} > {}",
                lp.b[i]
            )));
        }
    }
    Ok(Solution {
        x,
        value,
        dual: Some(lambda),
        fractional,
    })
}

pub(crate) fn solve(lp: &CoupledLp, r: &[f64]) -> Result<Solution, SolverError> {
    if lp.m() == 1 {
        let lambda = min_pwl_1d(
            lp.n() as f64 * lp.b[0],
            (0..lp.n()).map(|j| (r[j], lp.a.get(0, j))),
        )?;
        finish(lp, r, vec![lambda])
    } else {
        if lp.m() == 2
            && lp.n() <= 256
            && let Ok(sol) = solve_two_rows_exact(lp, r)
        {
            return Ok(sol);
        }
        solve_multi(lp, r)
    }
}

/// Exact two-row dual: the minimum of the piecewise-linear dual over the
/// nonnegative quadrant sits at a vertex of the arrangement formed by the
/// reduced-cost kink lines and the axes. Enumerate them all, keep the
/// lexicographically smallest minimizer.
fn solve_two_rows_exact(lp: &CoupledLp, r: &[f64]) -> Result<Solution, SolverError> {
    let n = lp.n();
    let mut cands: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    let col = |j: usize| [lp.a.get(0, j), lp.a.get(1, j)];
    for j in 0..n {
        let a = col(j);
        if a[0].abs() > 1e-12 {
            let l0 = r[j] / a[0];
            if l0 > 0.0 {
                cands.push([l0, 0.0]);
            }
        }
        if a[1].abs() > 1e-12 {
            let l1 = r[j] / a[1];
            if l1 > 0.0 {
                cands.push([0.0, l1]);
            }
        }
    }
    for j in 0..n {
        for k in j + 1..n {
            let aj = col(j);
            let ak = col(k);
            let det = aj[0] * ak[1] - aj[1] * ak[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let l0 = (r[j] * ak[1] - r[k] * aj[1]) / det;
            let l1 = (aj[0] * r[k] - ak[0] * r[j]) / det;
            if l0 >= 0.0 && l1 >= 0.0 {
                cands.push([l0, l1]);
            }
        }
    }
    let mut best_val = f64::INFINITY;
    for c in &cands {
        best_val = best_val.min(n_lagrangian(lp, r, c));
    }
    if !best_val.is_finite() {
        return Err(SolverError::Internal(
            "two-row dual enumeration found no value".into(),
        ));
    }
    // lexicographically smallest among the near-minimal candidates
    cands.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let tol = 1e-9 * (1.0 + best_val.abs());
    let lambda = cands
        .into_iter()
        .find(|c| n_lagrangian(lp, r, c) <= best_val + tol)
        .expect("a minimizing candidate exists");
    finish(lp, r, lambda.to_vec())
}

/// Value via strong duality at the exact single-row minimizer.
pub(crate) fn solve_value_m1(lp: &CoupledLp, r: &[f64]) -> Result<f64, SolverError> {
    let lambda = min_pwl_1d(
        lp.n() as f64 * lp.b[0],
        (0..lp.n()).map(|j| (r[j], lp.a.get(0, j))),
    )?;
    Ok(n_lagrangian(lp, r, &[lambda]))
}

/// Projected subgradient with Polyak-style steps, then an exact cyclic
/// coordinate polish carrying a 1e-12 l1 tiebreak so flat dual regions
/// resolve to the lexicographically smallest minimizer.
fn solve_multi(lp: &CoupledLp, r: &[f64]) -> Result<Solution, SolverError> {
    let n = lp.n();
    let m = lp.m();
    let nf = n as f64;
    let mut best_lambda = vec![0.0; m];
    let mut best_l = n_lagrangian(lp, r, &best_lambda);
    let lambda_cap = 1e9 * (1.0 + r.iter().fold(0.0f64, |a, v| a.max(v.abs())));

    let mut last_err: Option<SolverError> = None;
    for round in 0..8 {
        let mut lam = best_lambda.clone();
        let iters = 150 * (round + 1);
        for k in 0..iters {
            let mut g: Vec<f64> = (0..m).map(|i| nf * lp.b[i]).collect();
            for j in 0..n {
                if reduced_cost(lp, r, &lam, j) > 0.0 {
                    for (gi, i) in g.iter_mut().zip(0..m) {
                        *gi -= lp.a.get(i, j);
                    }
                }
            }
            let gn2: f64 = g.iter().map(|v| v * v).sum();
            if gn2 < 1e-18 {
                break;
            }
            let f = n_lagrangian(lp, r, &lam);
            if f < best_l {
                best_l = f;
                best_lambda = lam.clone();
            }
            let offset = (1.0 + best_l.abs()) * 0.2 / (1.0 + k as f64);
            let step = (f - (best_l - offset)) / gn2;
            for (li, gi) in lam.iter_mut().zip(&g) {
                *li = (*li - step * gi).max(0.0);
                if *li > lambda_cap {
                    return Err(SolverError::Infeasible(
                        "dual iterates diverge: primal infeasible".into(),
                    ));
                }
            }
        }

        let mut lam = best_lambda.clone();
        for _ in 0..6 {
            for i in 0..m {
                lam[i] = min_pwl_1d(
                    nf * (lp.b[i] + 1e-12),
                    (0..n).map(|j| {
                        let mut rr = r[j];
                        for i2 in 0..m {
                            if i2 != i {
                                rr -= lp.a.get(i2, j) * lam[i2];
                            }
                        }
                        (rr, lp.a.get(i, j))
                    }),
                )?;
            }
        }
        let f = n_lagrangian(lp, r, &lam);
        if f <= best_l {
            best_l = f;
            best_lambda = lam.clone();
        }

        // the polished iterate is the vertex-snapped candidate even when its
        // unpenalized value ties the running best
        match finish(lp, r, lam) {
            Ok(sol) => return Ok(sol),
            Err(e @ SolverError::Infeasible(_)) => return Err(e),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| SolverError::Internal("dual solve did not converge".into())))
}

/// Shared per-(instance, r) state for single-row coordinate paths when every
/// constraint coefficient is positive: kinks u_k = r_k / alpha_k sorted once,
/// with suffix sums answering "capacity still claimed above level u".
pub(crate) struct LpPathCtx {
    sorted_u: Vec<f64>,
    sorted_alpha: Vec<f64>,
    suffix_alpha: Vec<f64>,
    position_of: Vec<usize>,
    nb: f64,
    v_at_zero: f64,
}

impl LpPathCtx {
    pub(crate) fn new(lp: &CoupledLp, r: &[f64], v_at_zero: f64) -> Option<Self> {
        if lp.m() != 1 {
            return None;
        }
        let n = lp.n();
        let alphas: Vec<f64> = (0..n).map(|j| lp.a.get(0, j)).collect();
        if alphas.iter().any(|a| *a <= 0.0) {
            return None;
        }
        let mut order: Vec<usize> = (0..n).collect();
        let u: Vec<f64> = (0..n).map(|j| r[j] / alphas[j]).collect();
        order.sort_by(|&a, &b| u[a].total_cmp(&u[b]));
        let sorted_u: Vec<f64> = order.iter().map(|&j| u[j]).collect();
        let sorted_alpha: Vec<f64> = order.iter().map(|&j| alphas[j]).collect();
        let mut position_of = vec![0usize; n];
        for (p, &j) in order.iter().enumerate() {
            position_of[j] = p;
        }
        let mut suffix_alpha = vec![0.0; n + 1];
        for p in (0..n).rev() {
            suffix_alpha[p] = suffix_alpha[p + 1] + sorted_alpha[p];
        }
        Some(LpPathCtx {
            sorted_u,
            sorted_alpha,
            suffix_alpha,
            position_of,
            nb: n as f64 * lp.b[0],
            v_at_zero,
        })
    }

    /// Sum of alpha_k over k != j with kink strictly above `level`.
    fn claimed_above(&self, j: usize, level: f64) -> f64 {
        let p = self.sorted_u.partition_point(|u| *u <= level);
        let mut s = self.suffix_alpha[p];
        if self.position_of[j] >= p {
            s -= self.sorted_alpha[self.position_of[j]];
        }
        s
    }

    /// Smallest level >= 0 at which `nb - claimed_above(j, level) - extra`
    /// turns nonnegative; None when it never does.
    fn entry_level(&self, j: usize, extra: f64) -> Option<f64> {
        if self.nb - self.claimed_above(j, 0.0) - extra >= 0.0 {
            return Some(0.0);
        }
        // predicate is monotone along the sorted kinks
        let n = self.sorted_u.len();
        let ok = |p: usize| self.nb - self.claimed_above(j, self.sorted_u[p]) - extra >= 0.0;
        if !ok(n - 1) {
            return None;
        }
        let (mut lo, mut hi) = (0usize, n - 1);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let level = self.sorted_u[lo];
        if level <= 0.0 { Some(0.0) } else { Some(level) }
    }

    pub(crate) fn coordinate_path(
        &self,
        lp: &CoupledLp,
        r: &[f64],
        j: usize,
        a_j: f64,
    ) -> Result<CoordinatePath, SolverError> {
        let alpha_j = lp.a.get(0, j);
        let enter = self.entry_level(j, 0.0).ok_or_else(|| {
            SolverError::Internal("path entry level missing for feasible instance".into())
        })?;
        let saturate = self.entry_level(j, alpha_j);

        // piece x-values and the u-levels separating them, ascending in u
        let mut levels: Vec<f64> = Vec::new();
        let mut xs: Vec<f64> = vec![0.0];
        let pivot_x =
            |level: f64| ((self.nb - self.claimed_above(j, level)) / alpha_j).clamp(0.0, 1.0);
        match saturate {
            Some(sat) if sat <= enter + BREAKPOINT_DEDUP => {
                levels.push(enter);
                xs.push(1.0);
            }
            Some(sat) => {
                levels.push(enter);
                let lo = self
                    .sorted_u
                    .partition_point(|u| *u <= enter + BREAKPOINT_DEDUP);
                let hi = self
                    .sorted_u
                    .partition_point(|u| *u < sat - BREAKPOINT_DEDUP);
                let mut prev = enter;
                for p in lo..hi {
                    if self.position_of[j] == p {
                        continue;
                    }
                    let u = self.sorted_u[p];
                    if u <= prev + BREAKPOINT_DEDUP {
                        continue;
                    }
                    xs.push(pivot_x(0.5 * (prev + u)));
                    levels.push(u);
                    prev = u;
                }
                xs.push(pivot_x(0.5 * (prev + sat)));
                levels.push(sat);
                xs.push(1.0);
            }
            None => {
                // capacity alone caps x_j below one: the pivot regime never ends
                levels.push(enter);
                let lo = self
                    .sorted_u
                    .partition_point(|u| *u <= enter + BREAKPOINT_DEDUP);
                let mut prev = enter;
                for p in lo..self.sorted_u.len() {
                    if self.position_of[j] == p {
                        continue;
                    }
                    let u = self.sorted_u[p];
                    if u <= prev + BREAKPOINT_DEDUP {
                        continue;
                    }
                    xs.push(pivot_x(0.5 * (prev + u)));
                    levels.push(u);
                    prev = u;
                }
                xs.push(pivot_x(prev + 1.0));
            }
        }

        // merge consecutive pieces with equal x
        let mut m_levels: Vec<f64> = Vec::new();
        let mut m_xs: Vec<f64> = vec![xs[0]];
        for (i, &lv) in levels.iter().enumerate() {
            if (xs[i + 1] - m_xs.last().unwrap()).abs() > 1e-12 {
                m_levels.push(lv);
                m_xs.push(xs[i + 1]);
            }
        }

        // map levels to t: level = (r_j + a_j t) / alpha_j
        let to_t = |level: f64| (alpha_j * level - r[j]) / a_j;
        let mut cuts: Vec<f64> = m_levels.iter().map(|&lv| to_t(lv)).collect();
        let mut piece_x = m_xs;
        if a_j < 0.0 {
            cuts.reverse();
            piece_x.reverse();
        }

        // slopes from Danskin, intercepts anchored at t = 0 where V is known
        let slopes: Vec<f64> = piece_x.iter().map(|x| a_j * x).collect();
        let mut intercepts = vec![0.0; piece_x.len()];
        let at0 = cuts.partition_point(|c| *c <= 0.0);
        intercepts[at0] = self.v_at_zero;
        for i in (0..at0).rev() {
            let c = cuts[i];
            intercepts[i] = intercepts[i + 1] + (slopes[i + 1] - slopes[i]) * c;
        }
        for i in at0 + 1..piece_x.len() {
            let c = cuts[i - 1];
            intercepts[i] = intercepts[i - 1] + (slopes[i - 1] - slopes[i]) * c;
        }

        let pieces: Vec<PathPiece> = piece_x
            .iter()
            .zip(&slopes)
            .zip(&intercepts)
            .map(|((x, s), ic)| PathPiece {
                x_j: *x,
                slope: *s,
                intercept: *ic,
            })
            .collect();
        CoordinatePath::new(j, a_j, cuts, pieces)
    }
}

/// Exact path for one dualized row with arbitrary-sign coefficients: solve on
/// every interval between candidate breakpoints (kink collisions of the
/// moving reduced cost). Quadratic work; used when the fast context does not
/// apply.
pub(crate) fn coordinate_path_general(
    lp: &CoupledLp,
    r: &[f64],
    j: usize,
    a_j: f64,
) -> Result<CoordinatePath, SolverError> {
    let n = lp.n();
    let alpha_j = lp.a.get(0, j);
    let to_t = |target_rj: f64| (target_rj - r[j]) / a_j;
    let mut cands: Vec<f64> = vec![to_t(0.0)];
    if alpha_j != 0.0 {
        for k in 0..n {
            if k == j {
                continue;
            }
            let alpha_k = lp.a.get(0, k);
            if alpha_k != 0.0 {
                cands.push(to_t(alpha_j * r[k] / alpha_k));
            }
        }
    }
    cands.sort_by(f64::total_cmp);
    cands.dedup_by(|a, b| (*a - *b).abs() <= BREAKPOINT_DEDUP);

    let span = 1.0 + cands.last().unwrap() - cands.first().unwrap();
    let eval = |t: f64| -> Result<(f64, f64), SolverError> {
        let mut rt = r.to_vec();
        rt[j] += a_j * t;
        let sol = solve(lp, &rt)?;
        Ok((sol.value, sol.x[j]))
    };

    // midpoints of every interval, outer intervals probed beyond the ends
    let mut probes: Vec<f64> = Vec::with_capacity(cands.len() + 1);
    probes.push(cands[0] - span);
    for w in cands.windows(2) {
        probes.push(0.5 * (w[0] + w[1]));
    }
    probes.push(cands.last().unwrap() + span);

    let mut cuts: Vec<f64> = Vec::new();
    let mut pieces: Vec<PathPiece> = Vec::new();
    for (i, &t) in probes.iter().enumerate() {
        let (v, xj) = eval(t)?;
        let slope = a_j * xj;
        let intercept = v - slope * t;
        let same = pieces
            .last()
            .map(|p: &PathPiece| {
                (p.slope - slope).abs() <= 1e-9 * (1.0 + slope.abs())
                    && (p.intercept - intercept).abs() <= 1e-7 * (1.0 + intercept.abs())
            })
            .unwrap_or(false);
        if same {
            continue;
        }
        if !pieces.is_empty() {
            cuts.push(cands[i - 1]);
        }
        pieces.push(PathPiece {
            x_j: xj,
            slope,
            intercept,
        });
    }
    CoordinatePath::new(j, a_j, cuts, pieces)
}
