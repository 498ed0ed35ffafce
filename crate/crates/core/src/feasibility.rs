//! Nonzero-solution decision for cone-selection systems.
//!
//! A system couples linear equations `E z = 0` with per-index membership
//! of a pair of linear functionals of `z` in a planar cone union.  The
//! decision enumerates one convex cone per index (lexicographically),
//! expresses each selection as equalities and inequalities, and asks the
//! simplex solver whether the resulting polyhedral cone meets the unit box
//! anywhere besides the origin.

use crate::cone::{Cone2, PlanarConeUnion};
use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{self, Mat};
use crate::simplex::{self, Constraint, LpOutcome, Rel};
use crate::tol::{NONZERO_THRESHOLD, WITNESS_TOL};

/// One coupled pair: the linear functionals whose value pair must lie in
/// the cone union.
#[derive(Clone, Debug)]
pub struct ConeCoupling {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub graph: PlanarConeUnion,
}

/// The full selection system over unknowns `z` of dimension `dim`.
#[derive(Clone, Debug)]
pub struct ConeSelectionSystem {
    pub dim: usize,
    /// Rows of `E z = 0`.
    pub equalities: Vec<Vec<f64>>,
    pub couplings: Vec<ConeCoupling>,
    /// Coordinates pinned to zero by extra unit rows.
    pub fixed: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FeasibilityStatus {
    OnlyZero,
    Nonzero,
}

#[derive(Clone, Debug)]
pub struct FeasibilityVerdict {
    pub status: FeasibilityStatus,
    /// Max-norm-1 witness when nonzero.
    pub witness: Option<Vec<f64>>,
    /// The convex-cone choice per index that admitted the witness.
    pub selection: Option<Vec<usize>>,
}

impl FeasibilityVerdict {
    pub fn is_only_zero(&self) -> bool {
        self.status == FeasibilityStatus::OnlyZero
    }
}

fn normalized(row: &[f64]) -> Vec<f64> {
    let m = linalg::norm_inf(row);
    if m > 0.0 {
        linalg::scale(row, 1.0 / m)
    } else {
        row.to_vec()
    }
}

/// Equality and inequality rows for one convex cone applied to the pair
/// `(first . z, second . z)`.
fn cone_rows(
    cone: &Cone2,
    first: &[f64],
    second: &[f64],
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let combine = |a: f64, b: f64| -> Vec<f64> {
        first
            .iter()
            .zip(second)
            .map(|(f, s)| a * f + b * s)
            .collect()
    };
    match cone {
        // cross(d, p) = 0
        Cone2::Line(d) => (vec![combine(-d[1], d[0])], vec![]),
        // cross(d, p) = 0 and dot(d, p) >= 0
        Cone2::Ray(d) => (vec![combine(-d[1], d[0])], vec![combine(d[0], d[1])]),
        // cross(d0, p) >= 0 and cross(d1, p) <= 0
        Cone2::Wedge(d0, d1) => (
            vec![],
            vec![combine(-d0[1], d0[0]), combine(d1[1], -d1[0])],
        ),
    }
}

/// Decides whether the system admits a nonzero solution, returning the
/// lexicographically first witness found over cone selections.
pub fn cone_nonzero_feasibility(system: &ConeSelectionSystem) -> Result<FeasibilityVerdict> {
    let dim = system.dim;
    let counts: Vec<usize> = system
        .couplings
        .iter()
        .map(|c| c.graph.cones().len().max(1))
        .collect();
    let total: usize = counts.iter().product::<usize>().max(1);

    // base rows shared by every selection
    let mut base_eq: Vec<Vec<f64>> = system.equalities.iter().map(|r| normalized(r)).collect();
    for &j in &system.fixed {
        let mut row = vec![0.0; dim];
        row[j] = 1.0;
        base_eq.push(row);
    }

    let try_selection = |flat: usize| -> Option<Result<FeasibilityVerdict>> {
        // decode mixed-radix selection, most significant digit first
        let mut rem = flat;
        let mut selection = vec![0usize; counts.len()];
        for i in (0..counts.len()).rev() {
            selection[i] = rem % counts[i];
            rem /= counts[i];
        }
        let mut eqs = base_eq.clone();
        let mut ineqs: Vec<Vec<f64>> = Vec::new();
        for (coupling, &choice) in system.couplings.iter().zip(&selection) {
            if coupling.graph.is_empty() {
                // empty union forces the pair to the origin
                eqs.push(normalized(&coupling.first));
                eqs.push(normalized(&coupling.second));
                continue;
            }
            let cone = &coupling.graph.cones()[choice];
            let (e, i) = cone_rows(cone, &coupling.first, &coupling.second);
            eqs.extend(e.iter().map(|r| normalized(r)));
            ineqs.extend(i.iter().map(|r| normalized(r)));
        }
        match nonzero_in_cone(dim, &eqs, &ineqs, &selection) {
            Ok(Some(witness)) => Some(Ok(FeasibilityVerdict {
                status: FeasibilityStatus::Nonzero,
                witness: Some(witness),
                selection: Some(selection),
            })),
            Ok(None) => None,
            Err(e) => Some(Err(e)),
        }
    };

    match exec::find_first_map(total, try_selection) {
        Some(Ok(verdict)) => {
            if let (Some(w), Some(s)) = (&verdict.witness, &verdict.selection) {
                debug_assert!(verify_witness(system, w, s, WITNESS_TOL));
            }
            Ok(verdict)
        }
        Some(Err(e)) => Err(e),
        None => Ok(FeasibilityVerdict {
            status: FeasibilityStatus::OnlyZero,
            witness: None,
            selection: None,
        }),
    }
}

/// Searches the polyhedral cone `{Ez = 0, Gz >= 0}` intersected with the
/// unit box for a point with some coordinate above the nonzero threshold.
fn nonzero_in_cone(
    dim: usize,
    eqs: &[Vec<f64>],
    ineqs: &[Vec<f64>],
    selection: &[usize],
) -> Result<Option<Vec<f64>>> {
    let mut constraints: Vec<Constraint> = Vec::new();
    for r in eqs {
        constraints.push(Constraint {
            coeffs: r.clone(),
            rel: Rel::Eq,
            rhs: 0.0,
        });
    }
    for r in ineqs {
        constraints.push(Constraint {
            coeffs: r.clone(),
            rel: Rel::Ge,
            rhs: 0.0,
        });
    }
    let lower = vec![-1.0; dim];
    let upper = vec![1.0; dim];
    for j in 0..dim {
        for sign in [1.0, -1.0] {
            let mut objective = vec![0.0; dim];
            objective[j] = sign;
            let point = solve_with_retries(&objective, &constraints, &lower, &upper, selection)?;
            if let Some((value, point)) = point {
                if value > NONZERO_THRESHOLD {
                    let scale = linalg::norm_inf(&point);
                    return Ok(Some(linalg::scale(&point, 1.0 / scale)));
                }
            }
        }
    }
    Ok(None)
}

/// Runs the LP, retrying with a slightly perturbed objective before
/// surfacing a diagnostic error that names the failing selection.
fn solve_with_retries(
    objective: &[f64],
    constraints: &[Constraint],
    lower: &[f64],
    upper: &[f64],
    selection: &[usize],
) -> Result<Option<(f64, Vec<f64>)>> {
    let mut detail = String::new();
    for attempt in 0..3 {
        let obj: Vec<f64> = objective
            .iter()
            .enumerate()
            .map(|(k, v)| v + attempt as f64 * 1e-10 * ((k % 3) as f64 - 1.0))
            .collect();
        match simplex::maximize(&obj, constraints, lower, upper) {
            Ok(LpOutcome::Optimal { value, point }) => return Ok(Some((value, point))),
            Ok(LpOutcome::Infeasible) => return Ok(None),
            Ok(LpOutcome::Unbounded) => {
                detail = "unbounded in a box".into();
            }
            Err(e) => {
                detail = e.to_string();
            }
        }
    }
    Err(Error::LpFailure {
        selection: selection.to_vec(),
        detail,
    })
}

/// Checks a witness against the invariants of a nonzero verdict: unit
/// max-norm, equalities within tolerance, and cone membership of every
/// coupled pair under the recorded selection.
pub fn verify_witness(
    system: &ConeSelectionSystem,
    witness: &[f64],
    selection: &[usize],
    tol: f64,
) -> bool {
    if witness.len() != system.dim || (linalg::norm_inf(witness) - 1.0).abs() > tol {
        return false;
    }
    for row in &system.equalities {
        if linalg::dot(&normalized(row), witness).abs() > tol {
            return false;
        }
    }
    for &j in &system.fixed {
        if witness[j].abs() > tol {
            return false;
        }
    }
    for (coupling, &choice) in system.couplings.iter().zip(selection) {
        if coupling.graph.is_empty() {
            return false;
        }
        let p = [
            linalg::dot(&coupling.first, witness),
            linalg::dot(&coupling.second, witness),
        ];
        if coupling.graph.cones()[choice].distance(p) > tol * (1.0 + linalg::norm_inf(&p.to_vec()))
        {
            return false;
        }
    }
    true
}

/// Builds an `E` matrix from a [`Mat`].
pub fn rows_of(mat: &Mat) -> Vec<Vec<f64>> {
    (0..mat.rows()).map(|i| mat.row(i).to_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{strict_graph_from_slopes, Slope, SlopePair};

    fn quadrant_pair() -> PlanarConeUnion {
        strict_graph_from_slopes(SlopePair {
            sw: Slope::Finite(0.0),
            ne: Slope::Infinite,
        })
    }

    fn vertical_line() -> PlanarConeUnion {
        PlanarConeUnion::line([0.0, 1.0])
    }

    #[test]
    fn forced_to_zero_by_monotone_coupling() {
        // E = [1 1]; (x', y') in the quadrant pair forces x'y' >= 0 while
        // x' + y' = 0 forces x'y' = -x'^2: only zero
        let system = ConeSelectionSystem {
            dim: 2,
            equalities: vec![vec![1.0, 1.0]],
            couplings: vec![ConeCoupling {
                first: vec![1.0, 0.0],
                second: vec![0.0, 1.0],
                graph: quadrant_pair(),
            }],
            fixed: vec![],
        };
        let v = cone_nonzero_feasibility(&system).unwrap();
        assert_eq!(v.status, FeasibilityStatus::OnlyZero);
    }

    #[test]
    fn duplicate_equality_yields_witness() {
        // E = [1 1 1]; both couplings force x' = 0 through vertical lines
        let system = ConeSelectionSystem {
            dim: 3,
            equalities: vec![vec![1.0, 1.0, 1.0]],
            couplings: vec![
                ConeCoupling {
                    first: vec![1.0, 0.0, 0.0],
                    second: vec![0.0, 1.0, 0.0],
                    graph: vertical_line(),
                },
                ConeCoupling {
                    first: vec![1.0, 0.0, 0.0],
                    second: vec![0.0, 0.0, 1.0],
                    graph: vertical_line(),
                },
            ],
            fixed: vec![],
        };
        let v = cone_nonzero_feasibility(&system).unwrap();
        assert_eq!(v.status, FeasibilityStatus::Nonzero);
        let w = v.witness.unwrap();
        assert!(w[0].abs() < 1e-9);
        assert!((w[1] - 1.0).abs() < 1e-9);
        assert!((w[2] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn nonsingular_unconstrained_system_is_zero() {
        let system = ConeSelectionSystem {
            dim: 2,
            equalities: vec![vec![2.0, 1.0], vec![1.0, 1.0]],
            couplings: vec![],
            fixed: vec![],
        };
        let v = cone_nonzero_feasibility(&system).unwrap();
        assert_eq!(v.status, FeasibilityStatus::OnlyZero);
    }

    #[test]
    fn fixed_coordinates_cut_the_witness_space() {
        // zero matrix: everything feasible, but fixing both coords kills it
        let system = ConeSelectionSystem {
            dim: 2,
            equalities: vec![],
            couplings: vec![],
            fixed: vec![0, 1],
        };
        let v = cone_nonzero_feasibility(&system).unwrap();
        assert_eq!(v.status, FeasibilityStatus::OnlyZero);
    }
}
