//! Brute-force localized solves of the perturbed problem over a ball.
//!
//! Candidates come from a uniform grid over the ball intersected with the
//! feasible region; each candidate is polished by projected coordinate
//! descent with an exact piecewise line search (the objective restricted
//! to an axis is piecewise polynomial with breakpoints where a constraint
//! value crosses a kink of its outer function).

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::GnlpProblem;
use crate::tol::{CLUSTER_TOL, POLISH_TOL, VALUE_TIE_TOL};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolveStatus {
    Unique,
    Multiple,
    BoundarySuspect,
    Empty,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Unique => "UNIQUE",
            SolveStatus::Multiple => "MULTIPLE",
            SolveStatus::BoundarySuspect => "BOUNDARY_SUSPECT",
            SolveStatus::Empty => "EMPTY",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug)]
pub struct LocalMinimizer {
    pub x: Vec<f64>,
    pub value: f64,
    pub multiplier: Option<Vec<f64>>,
    pub multiplier_singleton: bool,
}

#[derive(Clone, Debug)]
pub struct LocalizedSolveResult {
    /// Clusters attaining the ball minimum (within the tie tolerance).
    pub minimizers: Vec<LocalMinimizer>,
    /// Polished local minimizers at strictly higher values, kept apart.
    pub strict_local: Vec<LocalMinimizer>,
    /// The localized optimal value; infinite when the ball is infeasible.
    pub min_value: f64,
    pub status: SolveStatus,
}

/// Objective of the perturbed problem restricted to one axis, as cached
/// univariate polynomial coefficients.
struct LineSlice {
    smooth: [f64; 8],
    cons: Vec<[f64; 8]>,
}

fn horner(c: &[f64; 8], s: f64) -> f64 {
    let mut v = 0.0;
    for k in (0..8).rev() {
        v = v * s + c[k];
    }
    v
}

impl LineSlice {
    fn build(problem: &GnlpProblem, x: &[f64], dir: &[f64], v: &[f64], u: &[f64]) -> LineSlice {
        let mut smooth = problem.objective().line_restriction_dir(x, dir);
        // subtract the tilt v . (x + s dir)
        smooth[0] -= linalg::dot(v, x);
        smooth[1] -= linalg::dot(v, dir);
        let cons = problem
            .constraints()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut r = c.line_restriction_dir(x, dir);
                r[0] += u[i];
                r
            })
            .collect();
        LineSlice { smooth, cons }
    }

    fn value(&self, problem: &GnlpProblem, s: f64) -> f64 {
        let mut total = horner(&self.smooth, s);
        for (i, c) in self.cons.iter().enumerate() {
            total += problem.outer(i).value_snapped(horner(c, s), 1e-12);
            if !total.is_finite() {
                return f64::INFINITY;
            }
        }
        total
    }
}

/// Roots of `poly(s) = target` on `[lo, hi]` by scan and bisection.
fn crossing_points(poly: &[f64; 8], target: f64, lo: f64, hi: f64, out: &mut Vec<f64>) {
    const SCAN: usize = 48;
    let mut prev_s = lo;
    let mut prev_v = horner(poly, lo) - target;
    for k in 1..=SCAN {
        let s = lo + (hi - lo) * k as f64 / SCAN as f64;
        let v = horner(poly, s) - target;
        if prev_v == 0.0 {
            out.push(prev_s);
        } else if prev_v * v < 0.0 {
            let (mut a, mut b) = (prev_s, s);
            let mut fa = prev_v;
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                let fm = horner(poly, mid) - target;
                if fa * fm <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            out.push(0.5 * (a + b));
        }
        prev_s = s;
        prev_v = v;
    }
    if prev_v == 0.0 {
        out.push(prev_s);
    }
}

/// Minimizes a scalar function on `[lo, hi]` by scanning then
/// golden-section refinement around the best bracket.
pub(crate) fn minimize_scalar<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    const SCAN: usize = 24;
    if hi <= lo {
        return (lo, f(lo));
    }
    let mut best_k = 0usize;
    let mut best_v = f64::INFINITY;
    let at = |k: usize| lo + (hi - lo) * k as f64 / SCAN as f64;
    for k in 0..=SCAN {
        let v = f(at(k));
        if v < best_v {
            best_v = v;
            best_k = k;
        }
    }
    if !best_v.is_finite() {
        return (lo, f64::INFINITY);
    }
    let mut a = at(best_k.saturating_sub(1));
    let mut b = at((best_k + 1).min(SCAN));
    const PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - PHI * (b - a);
    let mut x2 = a + PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..80 {
        if b - a < 1e-13 * (1.0 + a.abs()) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + PHI * (b - a);
            f2 = f(x2);
        }
    }
    let s = 0.5 * (a + b);
    let v = f(s);
    if v <= best_v {
        (s, v)
    } else {
        (at(best_k), best_v)
    }
}

/// Exact line search along one axis: splits the slice at constraint
/// breakpoints and minimizes each smooth polynomial piece.
fn line_minimize(
    problem: &GnlpProblem,
    slice: &LineSlice,
    s_lo: f64,
    s_hi: f64,
) -> (f64, f64) {
    let mut cuts = vec![s_lo, s_hi];
    for (i, cpoly) in slice.cons.iter().enumerate() {
        for b in problem.outer(i).breakpoints() {
            crossing_points(cpoly, b, s_lo, s_hi, &mut cuts);
        }
    }
    cuts.retain(|s| *s >= s_lo - 1e-15 && *s <= s_hi + 1e-15);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let eval = |s: f64| slice.value(problem, s);
    let mut best = (s_lo, eval(s_lo));
    for w in cuts.windows(2) {
        let (s, v) = minimize_scalar(&eval, w[0], w[1]);
        if v < best.1 {
            best = (s, v);
        }
    }
    best
}

/// Search directions: the axes plus, in higher dimension, the pairwise
/// diagonals; axis-only descent stalls on coupled constraint boundaries.
fn polish_directions(n: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for j in 0..n {
        let mut d = vec![0.0; n];
        d[j] = 1.0;
        dirs.push(d);
    }
    let half = 0.5f64.sqrt();
    for i in 0..n {
        for j in i + 1..n {
            for sign in [1.0, -1.0] {
                let mut d = vec![0.0; n];
                d[i] = half;
                d[j] = sign * half;
                dirs.push(d);
            }
        }
    }
    dirs
}

fn polish(
    problem: &GnlpProblem,
    start: &[f64],
    v: &[f64],
    u: &[f64],
    x_bar: &[f64],
    delta: f64,
) -> (Vec<f64>, f64) {
    let n = problem.primal_dim();
    let dirs = polish_directions(n);
    let mut x = start.to_vec();
    let mut value = problem.perturbed_objective(&x, v, u).unwrap_or(f64::INFINITY);
    for _sweep in 0..100 {
        let mut moved = 0.0f64;
        let before = value;
        for dir in &dirs {
            // ball slice along this direction: |x + s dir - x_bar| <= delta
            let rel: Vec<f64> = x.iter().zip(x_bar).map(|(a, b)| a - b).collect();
            let b = linalg::dot(&rel, dir);
            let c = linalg::dot(&rel, &rel) - delta * delta;
            let disc = b * b - c;
            if disc <= 0.0 {
                continue;
            }
            let root = disc.sqrt();
            let (s_lo, s_hi) = (-b - root, -b + root);
            if s_hi <= s_lo {
                continue;
            }
            let slice = LineSlice::build(problem, &x, dir, v, u);
            let (s, val) = line_minimize(problem, &slice, s_lo, s_hi);
            if val < value {
                value = val;
                for (xk, dk) in x.iter_mut().zip(dir) {
                    *xk += s * dk;
                }
                moved = moved.max(s.abs());
            }
        }
        if moved < POLISH_TOL && (before - value).abs() <= 1e-14 * (1.0 + value.abs()) {
            break;
        }
    }
    (x, value)
}

/// Minimizes the perturbed objective over the closed ball of radius
/// `delta` around `x_bar` by grid seeding plus coordinate-descent polish.
pub fn solve_localized(
    problem: &GnlpProblem,
    v: &[f64],
    u: &[f64],
    delta: f64,
    x_bar: &[f64],
    resolution: usize,
) -> Result<LocalizedSolveResult> {
    let n = problem.primal_dim();
    if n > 3 {
        return Err(Error::NotApplicable(
            "localized solves support at most three primal dimensions".into(),
        ));
    }
    if !(delta > 0.0) {
        return Err(Error::Invalid("delta must be positive".into()));
    }
    if resolution < 64 {
        return Err(Error::Invalid(
            "per-axis grid resolution must be at least 64".into(),
        ));
    }

    // grid over the box, masked to the ball and the feasible region
    let total = resolution.pow(n as u32);
    let coord = |k: usize, axis: usize| -> f64 {
        let steps = (k / resolution.pow(axis as u32)) % resolution;
        x_bar[axis] - delta + 2.0 * delta * steps as f64 / (resolution - 1) as f64
    };
    let mut values = vec![f64::INFINITY; total];
    let mut any_feasible = false;
    let mut best_flat = usize::MAX;
    let mut best_value = f64::INFINITY;
    for flat in 0..total {
        let x: Vec<f64> = (0..n).map(|a| coord(flat, a)).collect();
        if oracle_dist(&x, x_bar) > delta {
            continue;
        }
        let val = problem.perturbed_objective(&x, v, u)?;
        values[flat] = val;
        if val.is_finite() {
            any_feasible = true;
            if val < best_value {
                best_value = val;
                best_flat = flat;
            }
        }
    }
    if !any_feasible {
        return Ok(LocalizedSolveResult {
            minimizers: Vec::new(),
            strict_local: Vec::new(),
            min_value: f64::INFINITY,
            status: SolveStatus::Empty,
        });
    }

    // grid-local minima as polish candidates (at most a handful)
    let mut candidates: Vec<(f64, usize)> = Vec::new();
    for flat in 0..total {
        let val = values[flat];
        if !val.is_finite() {
            continue;
        }
        let mut is_local = true;
        'axes: for axis in 0..n {
            let step = resolution.pow(axis as u32);
            let pos = (flat / step) % resolution;
            for neigh in [
                (pos > 0).then(|| flat - step),
                (pos + 1 < resolution).then(|| flat + step),
            ]
            .into_iter()
            .flatten()
            {
                if values[neigh] < val {
                    is_local = false;
                    break 'axes;
                }
            }
        }
        if is_local {
            candidates.push((val, flat));
        }
    }
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    candidates.truncate(8);
    if best_flat != usize::MAX && !candidates.iter().any(|(_, f)| *f == best_flat) {
        candidates.push((best_value, best_flat));
    }

    // polish and cluster
    let mut polished: Vec<(Vec<f64>, f64)> = Vec::new();
    for (_, flat) in &candidates {
        let start: Vec<f64> = (0..n).map(|a| coord(*flat, a)).collect();
        let (x, val) = polish(problem, &start, v, u, x_bar, delta);
        if val.is_finite() {
            polished.push((x, val));
        }
    }
    polished.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let mut clusters: Vec<(Vec<f64>, f64)> = Vec::new();
    for (x, val) in polished {
        if !clusters
            .iter()
            .any(|(cx, _)| oracle_dist(cx, &x) <= CLUSTER_TOL)
        {
            clusters.push((x, val));
        }
    }
    let min_value = clusters.first().map(|c| c.1).unwrap_or(f64::INFINITY);

    let attach = |x: &Vec<f64>, val: f64| -> LocalMinimizer {
        let ms = problem.multiplier_set(x, u, v, CLUSTER_TOL).ok();
        LocalMinimizer {
            x: x.clone(),
            value: val,
            multiplier: ms.as_ref().and_then(|m| m.representative.clone()),
            multiplier_singleton: ms.as_ref().is_some_and(|m| m.is_singleton),
        }
    };
    let mut minimizers = Vec::new();
    let mut strict_local = Vec::new();
    for (x, val) in &clusters {
        if *val <= min_value + VALUE_TIE_TOL {
            minimizers.push(attach(x, *val));
        } else {
            strict_local.push(attach(x, *val));
        }
    }
    let status = if minimizers
        .iter()
        .any(|m| oracle_dist(&m.x, x_bar) >= delta - 1e-6)
    {
        SolveStatus::BoundarySuspect
    } else if minimizers.len() == 1 {
        SolveStatus::Unique
    } else {
        SolveStatus::Multiple
    };
    Ok(LocalizedSolveResult {
        minimizers,
        strict_local,
        min_value,
        status,
    })
}

fn oracle_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn base_point_is_the_unique_minimizer() {
        let p = corpus::p1();
        let r = solve_localized(&p.problem, &[0.0], &[0.0], 0.5, &[0.0], 64).unwrap();
        assert_eq!(r.status, SolveStatus::Unique);
        assert!(r.minimizers[0].x[0].abs() < 1e-9);
        assert!(r.min_value.abs() < 1e-12);
    }

    #[test]
    fn positive_tilt_pins_the_constraint() {
        // unconstrained minimizer 0.05 is infeasible; boundary KKT gives
        // y = v
        let p = corpus::p1();
        let r = solve_localized(&p.problem, &[0.05], &[0.0], 0.5, &[0.0], 64).unwrap();
        assert_eq!(r.status, SolveStatus::Unique);
        let m = &r.minimizers[0];
        assert!(m.x[0].abs() < 1e-8);
        assert!(r.min_value.abs() < 1e-10);
        let y = m.multiplier.as_ref().unwrap();
        assert!((y[0] - 0.05).abs() < 1e-6);
    }

    #[test]
    fn negative_tilt_moves_inside() {
        let p = corpus::p1();
        let r = solve_localized(&p.problem, &[-0.05], &[0.0], 0.5, &[0.0], 64).unwrap();
        assert_eq!(r.status, SolveStatus::Unique);
        let m = &r.minimizers[0];
        assert!((m.x[0] + 0.05).abs() < 1e-8);
        assert!((r.min_value + 0.00125).abs() < 1e-10);
        let y = m.multiplier.as_ref().unwrap();
        assert!(y[0].abs() < 1e-6);
    }

    #[test]
    fn incompatible_equalities_are_empty() {
        let p = corpus::p2();
        let r = solve_localized(&p.problem, &[0.0], &[0.1, -0.1], 0.5, &[0.0], 64).unwrap();
        assert_eq!(r.status, SolveStatus::Empty);
        assert_eq!(r.min_value, f64::INFINITY);
    }

    #[test]
    fn kink_penalty_solves_exactly() {
        // min x^2/2 + |x + u| - v x with v = 0.4, u = 0: solution x = 0
        let p = corpus::abs_penalty();
        let r = solve_localized(&p.problem, &[0.4], &[0.0], 0.5, &[0.0], 64).unwrap();
        assert_eq!(r.status, SolveStatus::Unique);
        assert!(r.minimizers[0].x[0].abs() < 1e-9);
        // v = 1.5 pushes past the kink: x solves x + 1 = 1.5
        let r = solve_localized(&p.problem, &[1.5], &[0.0], 1.0, &[0.0], 64).unwrap();
        assert!((r.minimizers[0].x[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn two_dimensional_active_set() {
        let p = corpus::active_inequality_2d();
        // tilt toward the constraint: stays at the origin with y = 1 - v1
        let r = solve_localized(&p.problem, &[-0.1, 0.05], &[0.0], 0.5, &[0.0, 0.0], 64).unwrap();
        assert_eq!(r.status, SolveStatus::Unique);
        let m = &r.minimizers[0];
        assert!(m.x[0].abs() < 1e-7, "{:?}", m.x);
        assert!((m.x[1] - 0.05).abs() < 1e-7);
    }
}
