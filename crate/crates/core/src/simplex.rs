//! Dense two-phase tableau simplex for the tiny LPs behind the cone
//! feasibility decisions.
//!
//! Problems have at most a few dozen rows, so a plain dense tableau with
//! Dantzig pricing and a Bland's-rule fallback against cycling is both
//! simple and reliable.

use crate::tol::LP_FEASIBILITY_TOL;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rel {
    Eq,
    Ge,
    Le,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub rel: Rel,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, point: Vec<f64> },
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, thiserror::Error)]
#[error("simplex failed: {0}")]
pub struct LpError(pub String);

/// Maximizes `objective . x` subject to the constraints and the box
/// `lower <= x <= upper` (all bounds finite).
pub fn maximize(
    objective: &[f64],
    constraints: &[Constraint],
    lower: &[f64],
    upper: &[f64],
) -> Result<LpOutcome, LpError> {
    let n = objective.len();
    assert_eq!(lower.len(), n);
    assert_eq!(upper.len(), n);
    // shift to w = x - lower, 0 <= w <= span
    let mut rows: Vec<(Vec<f64>, Rel, f64)> = Vec::new();
    for c in constraints {
        assert_eq!(c.coeffs.len(), n);
        let shift: f64 = c.coeffs.iter().zip(lower).map(|(a, l)| a * l).sum();
        rows.push((c.coeffs.clone(), c.rel, c.rhs - shift));
    }
    for j in 0..n {
        let span = upper[j] - lower[j];
        debug_assert!(span.is_finite() && span >= 0.0);
        let mut coeffs = vec![0.0; n];
        coeffs[j] = 1.0;
        rows.push((coeffs, Rel::Le, span));
    }
    match solve_standard(objective, &rows)? {
        LpOutcome::Optimal { value, point } => {
            let x: Vec<f64> = point.iter().zip(lower).map(|(w, l)| w + l).collect();
            let shift: f64 = objective.iter().zip(lower).map(|(c, l)| c * l).sum();
            Ok(LpOutcome::Optimal {
                value: value + shift,
                point: x,
            })
        }
        other => Ok(other),
    }
}

/// Two-phase simplex for: maximize c.w subject to rows, w >= 0.
fn solve_standard(
    objective: &[f64],
    rows: &[(Vec<f64>, Rel, f64)],
) -> Result<LpOutcome, LpError> {
    let n = objective.len();
    let m = rows.len();
    // normalize rhs >= 0
    let mut body: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rel = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for (coeffs, r, b) in rows {
        if *b < 0.0 {
            body.push(coeffs.iter().map(|v| -v).collect());
            rel.push(match r {
                Rel::Ge => Rel::Le,
                Rel::Le => Rel::Ge,
                Rel::Eq => Rel::Eq,
            });
            rhs.push(-b);
        } else {
            body.push(coeffs.clone());
            rel.push(*r);
            rhs.push(*b);
        }
    }
    // columns: n structural + slacks/surplus + artificials
    let mut num_cols = n;
    let mut slack_col = vec![usize::MAX; m];
    for i in 0..m {
        if rel[i] != Rel::Eq {
            slack_col[i] = num_cols;
            num_cols += 1;
        }
    }
    let mut art_col = vec![usize::MAX; m];
    let mut artificial = Vec::new();
    for i in 0..m {
        // Le rows start basic on their slack; Ge and Eq need an artificial
        if rel[i] != Rel::Le {
            art_col[i] = num_cols;
            artificial.push(num_cols);
            num_cols += 1;
        }
    }
    let cols = num_cols + 1; // + rhs
    let mut t = vec![vec![0.0; cols]; m + 1];
    let mut basis = vec![0usize; m];
    for i in 0..m {
        t[i][..n].copy_from_slice(&body[i]);
        t[i][cols - 1] = rhs[i];
        match rel[i] {
            Rel::Le => {
                t[i][slack_col[i]] = 1.0;
                basis[i] = slack_col[i];
            }
            Rel::Ge => {
                t[i][slack_col[i]] = -1.0;
                t[i][art_col[i]] = 1.0;
                basis[i] = art_col[i];
            }
            Rel::Eq => {
                t[i][art_col[i]] = 1.0;
                basis[i] = art_col[i];
            }
        }
    }

    if !artificial.is_empty() {
        // phase 1: maximize -sum of artificials; the z-row convention
        // stores negated costs, so artificial columns start at +1
        for &c in &artificial {
            t[m][c] = 1.0;
        }
        // price out the basic artificials
        for i in 0..m {
            if art_col[i] != usize::MAX {
                let row = t[i].clone();
                for (v, r) in t[m].iter_mut().zip(&row) {
                    *v -= r;
                }
            }
        }
        run_simplex(&mut t, &mut basis, cols)?;
        let p1 = t[m][cols - 1];
        if p1 < -LP_FEASIBILITY_TOL * 10.0 {
            return Ok(LpOutcome::Infeasible);
        }
        // drive remaining artificials out of the basis where possible
        for i in 0..m {
            if artificial.contains(&basis[i]) {
                if let Some(j) = (0..num_cols)
                    .find(|&j| !artificial.contains(&j) && t[i][j].abs() > LP_FEASIBILITY_TOL)
                {
                    pivot(&mut t, i, j, cols);
                    basis[i] = j;
                }
            }
        }
        // wipe artificial columns
        for &c in &artificial {
            for row in t.iter_mut() {
                row[c] = 0.0;
            }
        }
    }

    // phase 2 objective
    for v in t[m].iter_mut() {
        *v = 0.0;
    }
    t[m][..n].copy_from_slice(&objective.iter().map(|v| -v).collect::<Vec<_>>());
    for i in 0..m {
        if basis[i] < n && objective[basis[i]] != 0.0 {
            let f = objective[basis[i]];
            let row = t[i].clone();
            for (v, r) in t[m].iter_mut().zip(&row) {
                *v += f * r;
            }
        }
    }
    run_simplex(&mut t, &mut basis, cols)?;

    let mut point = vec![0.0; n];
    for i in 0..m {
        if basis[i] < n {
            point[basis[i]] = t[i][cols - 1];
        }
    }
    Ok(LpOutcome::Optimal {
        value: t[m][cols - 1],
        point,
    })
}

fn pivot(t: &mut [Vec<f64>], row: usize, col: usize, cols: usize) {
    let p = t[row][col];
    for v in t[row].iter_mut() {
        *v /= p;
    }
    let prow = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i == row {
            continue;
        }
        let f = r[col];
        if f != 0.0 {
            for j in 0..cols {
                r[j] -= f * prow[j];
            }
        }
    }
}

fn run_simplex(t: &mut Vec<Vec<f64>>, basis: &mut [usize], cols: usize) -> Result<(), LpError> {
    let m = basis.len();
    let num_cols = cols - 1;
    let max_iters = 200 * (m + num_cols).max(16);
    let mut bland = false;
    let mut stalled = 0usize;
    let mut last_obj = t[m][cols - 1];
    for _ in 0..max_iters {
        // entering column: most negative reduced cost (Dantzig) or the
        // first negative one (Bland) when stalling
        let mut enter = None;
        if bland {
            for j in 0..num_cols {
                if t[m][j] < -LP_FEASIBILITY_TOL {
                    enter = Some(j);
                    break;
                }
            }
        } else {
            let mut best = -LP_FEASIBILITY_TOL;
            for j in 0..num_cols {
                if t[m][j] < best {
                    best = t[m][j];
                    enter = Some(j);
                }
            }
        }
        let Some(col) = enter else {
            return Ok(());
        };
        // ratio test
        let mut leave = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            if t[i][col] > LP_FEASIBILITY_TOL {
                let ratio = t[i][cols - 1] / t[i][col];
                if ratio < best_ratio - 1e-12
                    || (bland
                        && (ratio - best_ratio).abs() <= 1e-12
                        && leave.is_some_and(|l: usize| basis[i] < basis[l]))
                {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(row) = leave else {
            return Err(LpError("unbounded column in a box-bounded program".into()));
        };
        pivot(t, row, col, cols);
        basis[row] = col;
        let obj = t[m][cols - 1];
        if (obj - last_obj).abs() <= 1e-13 {
            stalled += 1;
            if stalled > 2 * (m + 1) {
                bland = true;
            }
        } else {
            stalled = 0;
            last_obj = obj;
        }
    }
    Err(LpError("iteration limit reached".into()))
}
