//! Generalized nonlinear-programming problem data and KKT machinery.
//!
//! A problem is `minimize f0(x) + sum_i g_i(F_i(x))` with polynomial
//! smooth data and univariate convex PLQ outer functions; the canonical
//! perturbations are a tilt `v` on the objective and a shift `u` inside
//! the outer terms.

use crate::error::{Error, Result};
use crate::graph::SubgradientGraph1D;
use crate::linalg::{self, Mat};
use crate::plq::{Interval, UnivariatePlq};
use crate::poly::Polynomial;
use crate::simplex::{self, Constraint, LpOutcome, Rel};
use crate::tol::{KKT_TOLERANCE, NONZERO_THRESHOLD, PROJECTION_TOL, RANK_TOL, WITNESS_TOL};

/// Problem data: polynomial objective and constraint maps plus one
/// univariate convex PLQ outer function per constraint row.
#[derive(Clone, Debug)]
pub struct GnlpProblem {
    n: usize,
    m: usize,
    objective: Polynomial,
    constraints: Vec<Polynomial>,
    outer: Vec<UnivariatePlq>,
    graphs: Vec<SubgradientGraph1D>,
}

impl GnlpProblem {
    pub fn new(
        n: usize,
        objective: Polynomial,
        constraints: Vec<Polynomial>,
        outer: Vec<UnivariatePlq>,
    ) -> Result<Self> {
        if objective.dimension() != n {
            return Err(Error::DimensionMismatch {
                context: "objective",
                expected: n,
                actual: objective.dimension(),
            });
        }
        for c in &constraints {
            if c.dimension() != n {
                return Err(Error::DimensionMismatch {
                    context: "constraint",
                    expected: n,
                    actual: c.dimension(),
                });
            }
        }
        if outer.len() != constraints.len() {
            return Err(Error::DimensionMismatch {
                context: "outer function list",
                expected: constraints.len(),
                actual: outer.len(),
            });
        }
        let graphs = outer.iter().map(SubgradientGraph1D::of).collect();
        Ok(GnlpProblem {
            n,
            m: constraints.len(),
            objective,
            constraints,
            outer,
            graphs,
        })
    }

    pub fn primal_dim(&self) -> usize {
        self.n
    }

    pub fn constraint_dim(&self) -> usize {
        self.m
    }

    pub fn objective(&self) -> &Polynomial {
        &self.objective
    }

    pub fn constraint(&self, i: usize) -> &Polynomial {
        &self.constraints[i]
    }

    pub fn constraints(&self) -> &[Polynomial] {
        &self.constraints
    }

    pub fn outer(&self, i: usize) -> &UnivariatePlq {
        &self.outer[i]
    }

    pub fn outer_functions(&self) -> &[UnivariatePlq] {
        &self.outer
    }

    pub fn graph(&self, i: usize) -> &SubgradientGraph1D {
        &self.graphs[i]
    }

    /// True when every outer function is an indicator (classical NLP).
    pub fn is_classical_nlp(&self) -> bool {
        self.outer.iter().all(|g| g.indicator_kind().is_some())
    }

    pub fn constraint_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.constraints.iter().map(|c| c.value(x)).collect()
    }

    /// Rows are the constraint gradients at `x` (an `m x n` matrix).
    pub fn constraint_jacobian(&self, x: &[f64]) -> Result<Mat> {
        let mut j = Mat::zeros(self.m, self.n);
        for (i, c) in self.constraints.iter().enumerate() {
            for (k, v) in c.gradient(x)?.into_iter().enumerate() {
                j.set(i, k, v);
            }
        }
        Ok(j)
    }

    /// Hessian of the Lagrangian `f0 + sum_i y_i f_i` at `(x, y)`.
    pub fn lagrangian_hessian(&self, x: &[f64], y: &[f64]) -> Result<Mat> {
        if y.len() != self.m {
            return Err(Error::DimensionMismatch {
                context: "multiplier vector",
                expected: self.m,
                actual: y.len(),
            });
        }
        let (_, _, mut h) = self.objective.eval(x)?;
        for (yi, c) in y.iter().zip(&self.constraints) {
            if *yi == 0.0 {
                continue;
            }
            let (_, _, hc) = c.eval(x)?;
            for a in 0..self.n {
                for b in 0..self.n {
                    h.set(a, b, h.get(a, b) + yi * hc.get(a, b));
                }
            }
        }
        Ok(h.symmetrized())
    }

    /// Gradient of the Lagrangian in `x`.
    pub fn lagrangian_gradient(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.objective.gradient(x)?;
        for (yi, c) in y.iter().zip(&self.constraints) {
            if *yi == 0.0 {
                continue;
            }
            for (gk, ck) in g.iter_mut().zip(c.gradient(x)?) {
                *gk += yi * ck;
            }
        }
        Ok(g)
    }

    /// First-order residual: the Euclidean norm of the stationarity defect
    /// plus the exact distance of each `(F_i(x)+u_i, y_i)` to the
    /// subgradient graph of `g_i`.  Zero exactly at primal-dual pairs of
    /// the perturbed problem.
    pub fn kkt_residual(&self, x: &[f64], y: &[f64], v: &[f64], u: &[f64]) -> Result<f64> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "tilt parameter",
                expected: self.n,
                actual: v.len(),
            });
        }
        if u.len() != self.m {
            return Err(Error::DimensionMismatch {
                context: "shift parameter",
                expected: self.m,
                actual: u.len(),
            });
        }
        let grad = self.lagrangian_gradient(x, y)?;
        let mut total = linalg::norm2(&linalg::sub(&grad, v));
        let values = self.constraint_values(x)?;
        for i in 0..self.m {
            total += self.graphs[i].distance([values[i] + u[i], y[i]]);
        }
        Ok(total)
    }

    /// Full objective of the perturbed problem, infinite when infeasible.
    /// Outer arguments within machine rounding of a domain boundary are
    /// snapped onto it.
    pub fn perturbed_objective(&self, x: &[f64], v: &[f64], u: &[f64]) -> Result<f64> {
        let mut val = self.objective.value(x)? - linalg::dot(v, x);
        for i in 0..self.m {
            val += self.outer[i].value_snapped(self.constraints[i].value(x)? + u[i], 1e-12);
            if !val.is_finite() {
                return Ok(f64::INFINITY);
            }
        }
        Ok(val)
    }

    /// The multiplier set at `(x, u, v)`: the box of per-component
    /// subdifferentials intersected with the stationarity equations.
    pub fn multiplier_set(&self, x: &[f64], u: &[f64], v: &[f64], tol: f64) -> Result<MultiplierSet> {
        let values = self.constraint_values(x)?;
        let mut boxes = Vec::with_capacity(self.m);
        for i in 0..self.m {
            let arg = values[i] + u[i];
            match self.outer[i].subgradient_snapped(arg, tol) {
                Some(iv) => boxes.push(iv),
                None => {
                    return Err(Error::InfeasibleComponent {
                        index: i,
                        value: arg,
                        distance: self.outer[i].domain().distance(arg),
                    })
                }
            }
        }
        // affine rows: gradF(x)^T y = v - grad f0(x)
        let jac = self.constraint_jacobian(x)?;
        let jt = jac.transpose(); // n x m
        let rhs = linalg::sub(v, &self.objective.gradient(x)?);

        let representative = least_norm_in_intersection(&boxes, &jt, &rhs, tol);
        let is_singleton = match &representative {
            None => false,
            Some(rep) => intersection_is_singleton(&boxes, &jt, rep),
        };
        Ok(MultiplierSet {
            boxes,
            affine_matrix: jt,
            affine_rhs: rhs,
            representative,
            is_singleton,
        })
    }
}

/// The multiplier set: a box (per-component subdifferential intervals)
/// intersected with affine stationarity rows, together with its
/// least-norm representative when nonempty.
#[derive(Clone, Debug)]
pub struct MultiplierSet {
    pub boxes: Vec<Interval>,
    /// `n x m` matrix of the rows `gradF(x)^T y = rhs`.
    pub affine_matrix: Mat,
    pub affine_rhs: Vec<f64>,
    pub representative: Option<Vec<f64>>,
    pub is_singleton: bool,
}

impl MultiplierSet {
    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        if y.len() != self.boxes.len() {
            return false;
        }
        for (yi, b) in y.iter().zip(&self.boxes) {
            if !b.contains(*yi, tol) {
                return false;
            }
        }
        let r = linalg::sub(&self.affine_matrix.matvec(y), &self.affine_rhs);
        linalg::norm_inf(&r) <= tol
    }
}

/// Projects the origin onto `box intersect {Ay = b}` by alternating
/// projections with Dykstra's correction, which converges to the
/// least-norm point of the intersection.
fn least_norm_in_intersection(
    boxes: &[Interval],
    a: &Mat,
    b: &[f64],
    tol: f64,
) -> Option<Vec<f64>> {
    let feas_tol = WITNESS_TOL.max(tol);
    let m = boxes.len();
    if m == 0 {
        // no multipliers: the empty vector works iff the rows hold
        return if linalg::norm_inf(b) <= feas_tol * (1.0 + linalg::norm_inf(b)) {
            Some(Vec::new())
        } else {
            None
        };
    }
    let scale = a.max_abs().max(linalg::norm_inf(b)).max(1.0);
    let project_affine = |y: &[f64]| -> Vec<f64> {
        let r = linalg::sub(&a.matvec(y), b);
        let (d, _) = linalg::least_squares_min_norm(a, &r, RANK_TOL);
        linalg::sub(y, &d)
    };
    let project_box =
        |y: &[f64]| -> Vec<f64> { y.iter().zip(boxes).map(|(v, bx)| bx.clamp(*v)).collect() };

    let mut y = vec![0.0; m];
    let mut correction = vec![0.0; m];
    for _ in 0..20_000 {
        let w = project_affine(&y);
        let mut z: Vec<f64> = w.iter().zip(&correction).map(|(a, c)| a + c).collect();
        z = project_box(&z);
        let new_correction: Vec<f64> = w
            .iter()
            .zip(&correction)
            .zip(&z)
            .map(|((wi, ci), zi)| wi + ci - zi)
            .collect();
        let step = y
            .iter()
            .zip(&z)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        y = z;
        correction = new_correction;
        if step <= PROJECTION_TOL * scale {
            break;
        }
    }
    // feasibility check decides emptiness
    let affine_res = linalg::norm_inf(&linalg::sub(&a.matvec(&y), b));
    let box_res = y
        .iter()
        .zip(boxes)
        .map(|(v, bx)| bx.distance(*v))
        .fold(0.0f64, f64::max);
    if affine_res <= feas_tol * scale && box_res <= feas_tol {
        Some(y)
    } else {
        None
    }
}

/// Decides whether the intersection's affine hull is the single point
/// `rep`: restrict the affine nullspace to non-degenerate box coordinates
/// and probe each remaining direction with the LP.
fn intersection_is_singleton(boxes: &[Interval], a: &Mat, rep: &[f64]) -> bool {
    let m = boxes.len();
    if m == 0 {
        return true;
    }
    // pinned coordinates (degenerate boxes) become extra unit rows
    let mut rows: Vec<Vec<f64>> = (0..a.rows()).map(|i| a.row(i).to_vec()).collect();
    for (i, b) in boxes.iter().enumerate() {
        if b.is_point() {
            let mut r = vec![0.0; m];
            r[i] = 1.0;
            rows.push(r);
        }
    }
    let stacked = Mat::from_rows(&rows);
    let (_, nullspace) = linalg::rank_and_nullspace(&stacked, RANK_TOL);
    if nullspace.is_empty() {
        return true;
    }
    // polytope { c : rep + N c in box } around c = 0; nonzero extent in
    // any coordinate direction means a non-degenerate affine hull
    let k = nullspace.len();
    let mut constraints = Vec::new();
    for (i, b) in boxes.iter().enumerate() {
        let coeffs: Vec<f64> = nullspace.iter().map(|d| d[i]).collect();
        if coeffs.iter().all(|c| c.abs() <= 1e-14) {
            continue;
        }
        if b.hi.is_finite() {
            constraints.push(Constraint {
                coeffs: coeffs.clone(),
                rel: Rel::Le,
                rhs: b.hi - rep[i],
            });
        }
        if b.lo.is_finite() {
            constraints.push(Constraint {
                coeffs,
                rel: Rel::Ge,
                rhs: b.lo - rep[i],
            });
        }
    }
    let lower = vec![-1.0; k];
    let upper = vec![1.0; k];
    for j in 0..k {
        for sign in [1.0, -1.0] {
            let mut obj = vec![0.0; k];
            obj[j] = sign;
            match simplex::maximize(&obj, &constraints, &lower, &upper) {
                Ok(LpOutcome::Optimal { value, .. }) => {
                    if value > NONZERO_THRESHOLD {
                        return false;
                    }
                }
                _ => return false,
            }
        }
    }
    true
}

/// A candidate primal-dual pair with its parameters and residual.
#[derive(Clone, Debug)]
pub struct KktPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub residual: f64,
}

impl KktPoint {
    pub fn new(
        problem: &GnlpProblem,
        x: Vec<f64>,
        y: Vec<f64>,
        v: Vec<f64>,
        u: Vec<f64>,
    ) -> Result<Self> {
        let residual = problem.kkt_residual(&x, &y, &v, &u)?;
        Ok(KktPoint { x, y, v, u, residual })
    }

    /// Zero parameters shorthand.
    pub fn at_base(problem: &GnlpProblem, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let v = vec![0.0; problem.primal_dim()];
        let u = vec![0.0; problem.constraint_dim()];
        KktPoint::new(problem, x, y, v, u)
    }

    pub fn is_admissible(&self, tol: f64) -> bool {
        self.residual <= tol
    }

    pub fn require_admissible(&self, tol: f64) -> Result<()> {
        if self.is_admissible(tol) {
            Ok(())
        } else {
            Err(Error::InadmissibleKkt {
                residual: self.residual,
                tolerance: tol,
            })
        }
    }

    pub fn default_admissible(&self) -> Result<()> {
        self.require_admissible(KKT_TOLERANCE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn lagrangian_hessian_of_p1() {
        let p = corpus::p1();
        let h = p.problem.lagrangian_hessian(&[0.0], &[0.0]).unwrap();
        assert_eq!(h.get(0, 0), 1.0);
    }

    #[test]
    fn zero_multiplier_reduces_to_objective_hessian() {
        let p = corpus::p1();
        let h0 = p.problem.lagrangian_hessian(&[0.7], &[0.0]).unwrap();
        let (_, _, hf) = p.problem.objective().eval(&[0.7]).unwrap();
        assert_eq!(h0.get(0, 0), hf.get(0, 0));
    }

    #[test]
    fn affine_constraints_leave_hessian_constant() {
        let p = corpus::p2();
        for x in [-1.0, 0.0, 2.0] {
            let h = p.problem.lagrangian_hessian(&[x], &[3.0, -5.0]).unwrap();
            assert_eq!(h.get(0, 0), 1.0);
        }
    }

    #[test]
    fn p1_base_residual_is_zero() {
        let p = corpus::p1();
        assert_eq!(p.kkt.residual, 0.0);
    }

    #[test]
    fn p1_negative_multiplier_distance() {
        let p = corpus::p1();
        // graph distance of (0, -1) to the corner is 1; the stationarity
        // defect |x + y - v| contributes another 1
        let r = p
            .problem
            .kkt_residual(&[0.0], &[-1.0], &[0.0], &[0.0])
            .unwrap();
        assert!((r - 2.0).abs() < 1e-15);
        // with the tilt matching the stationarity defect, only the graph
        // distance remains
        let r = p
            .problem
            .kkt_residual(&[0.0], &[-1.0], &[-1.0], &[0.0])
            .unwrap();
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unconstrained_critical_point_has_zero_residual() {
        // f0 = x^2/2 - x tilted by v = -1 has critical point x = 0
        let f0 = Polynomial::new(1, vec![(0.5, vec![2]), (-1.0, vec![1])]).unwrap();
        let p = GnlpProblem::new(1, f0, vec![], vec![]).unwrap();
        let r = p.kkt_residual(&[0.0], &[], &[-1.0], &[]).unwrap();
        assert!(r.abs() < 1e-15);
    }

    #[test]
    fn p1_multiplier_set_is_singleton_zero() {
        let p = corpus::p1();
        let ms = p
            .problem
            .multiplier_set(&[0.0], &[0.0], &[0.0], KKT_TOLERANCE)
            .unwrap();
        assert_eq!(ms.boxes[0], Interval::new(0.0, f64::INFINITY));
        let rep = ms.representative.as_ref().unwrap();
        assert!(rep[0].abs() < 1e-10);
        assert!(ms.is_singleton);
    }

    #[test]
    fn duplicate_equality_multiplier_segment() {
        let p = corpus::p2();
        let ms = p
            .problem
            .multiplier_set(&[0.0], &[0.0, 0.0], &[0.0], KKT_TOLERANCE)
            .unwrap();
        // box is the whole plane, one affine row y1 + y2 = 0: a line
        let rep = ms.representative.as_ref().unwrap();
        assert!(linalg::norm_inf(rep) < 1e-9);
        assert!(!ms.is_singleton);
    }

    #[test]
    fn inactive_component_pins_multiplier() {
        let p = corpus::p1();
        // at x = -1 the constraint is inactive: box = {0}
        let ms = p
            .problem
            .multiplier_set(&[-1.0], &[0.0], &[-1.0], KKT_TOLERANCE)
            .unwrap();
        assert!(ms.boxes[0].is_point());
        assert_eq!(ms.boxes[0].lo, 0.0);
    }

    #[test]
    fn residual_zero_implies_multiplier_membership() {
        let p = corpus::p1();
        // (x, y) = (0, 0.3) is on the vertical branch: residual 0
        let r = p
            .problem
            .kkt_residual(&[0.0], &[0.3], &[0.3], &[0.0])
            .unwrap();
        assert!(r < 1e-12);
        let ms = p
            .problem
            .multiplier_set(&[0.0], &[0.0], &[0.3], KKT_TOLERANCE)
            .unwrap();
        assert!(ms.contains(&[0.3], 1e-9));
    }

    #[test]
    fn residual_invariant_under_index_permutation() {
        use crate::plq::UnivariatePlq;
        let f0 = Polynomial::new(2, vec![(0.5, vec![2, 0]), (0.5, vec![0, 2])]).unwrap();
        let c1 = Polynomial::new(2, vec![(1.0, vec![1, 0])]).unwrap();
        let c2 = Polynomial::new(2, vec![(1.0, vec![0, 1]), (2.0, vec![2, 0])]).unwrap();
        let p = GnlpProblem::new(
            2,
            f0.clone(),
            vec![c1.clone(), c2.clone()],
            vec![UnivariatePlq::indicator_le_zero(), UnivariatePlq::abs()],
        )
        .unwrap();
        let q = GnlpProblem::new(
            2,
            f0,
            vec![c2, c1],
            vec![UnivariatePlq::abs(), UnivariatePlq::indicator_le_zero()],
        )
        .unwrap();
        let x = [0.3, -0.4];
        let y = [0.1, 0.9];
        let yp = [0.9, 0.1];
        let v = [0.05, -0.02];
        let u = [0.0, 0.1];
        let up = [0.1, 0.0];
        let r1 = p.kkt_residual(&x, &y, &v, &u).unwrap();
        let r2 = q.kkt_residual(&x, &yp, &v, &up).unwrap();
        assert!((r1 - r2).abs() < 1e-12);
    }
}
