//! Certification logic: index classification, the gradient-independence
//! and second-order checks, the cone criteria over primal-dual
//! directions, and the aggregate stability verdict.

use std::fmt;

use crate::cone::{
    coderivative_graph_from_slopes, strict_graph_from_slopes, PlanarConeUnion, SlopePair,
};
use crate::error::{Error, Result};
use crate::feasibility::{
    cone_nonzero_feasibility, ConeCoupling, ConeSelectionSystem, FeasibilityVerdict,
};
use crate::linalg::{self, Mat};
use crate::plq::{IndicatorKind, Interval, UnivariatePlq};
use crate::poly::Polynomial;
use crate::problem::{GnlpProblem, KktPoint};
use crate::tol::{GRAPH_SNAP_TOL, KKT_TOLERANCE, RANK_TOL, SSOC_TOL};

/// Constraint-index classes at a KKT pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IndexClass {
    /// Indicator constraint strictly inside its domain, zero multiplier.
    Inactive,
    /// Equality-type index, or active inequality with positive multiplier.
    StronglyActive,
    /// Active inequality with zero multiplier.
    Degenerate,
    /// Non-indicator outer function at a point with equal finite slopes.
    Smooth,
    /// Any other kink of a general PLQ outer function.
    GeneralKink,
}

impl fmt::Display for IndexClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IndexClass::Inactive => "INACTIVE",
            IndexClass::StronglyActive => "STRONGLY_ACTIVE",
            IndexClass::Degenerate => "DEGENERATE",
            IndexClass::Smooth => "SMOOTH",
            IndexClass::GeneralKink => "GENERAL_KINK",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug)]
pub struct IndexInfo {
    pub class: IndexClass,
    pub slopes: SlopePair,
    /// The outer argument does not lie in the interior of the domain.
    pub boundary: bool,
    /// Outer argument `F_i(x) + u_i` after snapping to the graph.
    pub argument: f64,
}

#[derive(Clone, Debug)]
pub struct IndexClassification {
    pub entries: Vec<IndexInfo>,
}

impl IndexClassification {
    pub fn boundary_indices(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.boundary)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn strongly_active_indices(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.class == IndexClass::StronglyActive)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Classifies every constraint index at the KKT pair.
pub fn classify_indices(
    problem: &GnlpProblem,
    kkt: &KktPoint,
    snap_tol: f64,
) -> Result<IndexClassification> {
    let values = problem.constraint_values(&kkt.x)?;
    let mut entries = Vec::with_capacity(problem.constraint_dim());
    for i in 0..problem.constraint_dim() {
        let arg = values[i] + kkt.u[i];
        let (slopes, snapped) = problem
            .graph(i)
            .slopes_at([arg, kkt.y[i]], snap_tol)
            .map_err(|distance| Error::OffGraph {
                u: arg,
                y: kkt.y[i],
                distance,
                tolerance: snap_tol,
            })?;
        let dom = problem.outer(i).domain();
        let u_snapped = snapped[0];
        let boundary = !(u_snapped > dom.lo + snap_tol && u_snapped < dom.hi - snap_tol);
        let class = match problem.outer(i).indicator_kind() {
            Some(IndicatorKind::Point { .. }) => IndexClass::StronglyActive,
            Some(IndicatorKind::HalfLine { .. }) => {
                // the snapped graph position decides the sign case
                match (slopes.sw.is_finite(), slopes.ne.is_finite()) {
                    (true, true) => IndexClass::Inactive,
                    (true, false) => IndexClass::Degenerate,
                    (false, false) => IndexClass::StronglyActive,
                    (false, true) => unreachable!("monotone indicator graph"),
                }
            }
            None => {
                if slopes.sw == slopes.ne && slopes.sw.is_finite() {
                    IndexClass::Smooth
                } else {
                    IndexClass::GeneralKink
                }
            }
        };
        entries.push(IndexInfo {
            class,
            slopes,
            boundary,
            argument: u_snapped,
        });
    }
    Ok(IndexClassification { entries })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CheckVerdict {
    Holds,
    Fails,
    Inconclusive,
    NotApplicable,
}

impl CheckVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, CheckVerdict::Holds)
    }
}

impl fmt::Display for CheckVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CheckVerdict::Holds => "HOLDS",
            CheckVerdict::Fails => "FAILS",
            CheckVerdict::Inconclusive => "INCONCLUSIVE",
            CheckVerdict::NotApplicable => "NOT_APPLICABLE",
        };
        write!(f, "{s}")
    }
}

/// Linear independence of the boundary-constraint gradients.
#[derive(Clone, Debug)]
pub struct LigcReport {
    pub verdict: CheckVerdict,
    pub boundary_indices: Vec<usize>,
    /// On failure, a nonzero combination of the gradients summing to zero
    /// (full-length vector, zero off the boundary set).
    pub dependency: Option<Vec<f64>>,
}

pub fn check_ligc(problem: &GnlpProblem, kkt: &KktPoint) -> Result<LigcReport> {
    let classification = classify_indices(problem, kkt, GRAPH_SNAP_TOL)?;
    check_ligc_classified(problem, kkt, &classification)
}

pub fn check_ligc_classified(
    problem: &GnlpProblem,
    kkt: &KktPoint,
    classification: &IndexClassification,
) -> Result<LigcReport> {
    let indices = classification.boundary_indices();
    if indices.is_empty() {
        return Ok(LigcReport {
            verdict: CheckVerdict::Holds,
            boundary_indices: indices,
            dependency: None,
        });
    }
    let jac = problem.constraint_jacobian(&kkt.x)?;
    let rows: Vec<Vec<f64>> = indices.iter().map(|&i| jac.row(i).to_vec()).collect();
    let stacked = Mat::from_rows(&rows);
    let (rank, _) = linalg::rank_and_nullspace(&stacked, RANK_TOL);
    if rank == indices.len() {
        return Ok(LigcReport {
            verdict: CheckVerdict::Holds,
            boundary_indices: indices,
            dependency: None,
        });
    }
    // left nullspace: combinations of the gradient rows vanishing
    let (_, left) = linalg::rank_and_nullspace(&stacked.transpose(), RANK_TOL);
    let dependency = left.first().map(|lambda| {
        let mut full = vec![0.0; problem.constraint_dim()];
        for (k, &i) in indices.iter().enumerate() {
            full[i] = lambda[k];
        }
        // deterministic sign and scale
        let scale = linalg::norm_inf(&full);
        let lead = full.iter().find(|v| v.abs() > 1e-14).copied().unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        linalg::scale(&full, sign / scale)
    });
    Ok(LigcReport {
        verdict: CheckVerdict::Fails,
        boundary_indices: indices,
        dependency,
    })
}

/// Positive-definiteness of the Lagrangian Hessian on the subspace
/// orthogonal to the strongly active gradients.
#[derive(Clone, Debug)]
pub struct SsocReport {
    pub verdict: CheckVerdict,
    pub min_eigenvalue: Option<f64>,
    pub subspace_dim: usize,
}

pub fn check_ssoc(problem: &GnlpProblem, kkt: &KktPoint) -> Result<SsocReport> {
    let classification = classify_indices(problem, kkt, GRAPH_SNAP_TOL)?;
    check_ssoc_classified(problem, kkt, &classification)
}

pub fn check_ssoc_classified(
    problem: &GnlpProblem,
    kkt: &KktPoint,
    classification: &IndexClassification,
) -> Result<SsocReport> {
    if !problem.is_classical_nlp() {
        return Ok(SsocReport {
            verdict: CheckVerdict::NotApplicable,
            min_eigenvalue: None,
            subspace_dim: 0,
        });
    }
    let strong = classification.strongly_active_indices();
    let basis = if strong.is_empty() {
        // whole space
        (0..problem.primal_dim())
            .map(|j| {
                let mut e = vec![0.0; problem.primal_dim()];
                e[j] = 1.0;
                e
            })
            .collect()
    } else {
        let jac = problem.constraint_jacobian(&kkt.x)?;
        let rows: Vec<Vec<f64>> = strong.iter().map(|&i| jac.row(i).to_vec()).collect();
        let (_, nullspace) = linalg::rank_and_nullspace(&Mat::from_rows(&rows), RANK_TOL);
        nullspace
    };
    let h = problem.lagrangian_hessian(&kkt.x, &kkt.y)?;
    let min_eigenvalue = linalg::projected_min_eigenvalue(&h, &basis);
    let verdict = if min_eigenvalue > SSOC_TOL {
        CheckVerdict::Holds
    } else if min_eigenvalue < -SSOC_TOL {
        CheckVerdict::Fails
    } else {
        CheckVerdict::Inconclusive
    };
    Ok(SsocReport {
        verdict,
        min_eigenvalue: Some(min_eigenvalue),
        subspace_dim: basis.len(),
    })
}

/// Which derivative graph feeds the cone criterion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CriterionMode {
    Strict,
    Coderivative,
}

fn graph_for(mode: CriterionMode, slopes: SlopePair) -> PlanarConeUnion {
    match mode {
        CriterionMode::Strict => strict_graph_from_slopes(slopes),
        CriterionMode::Coderivative => coderivative_graph_from_slopes(slopes),
    }
}

/// Builds the selection system over `z = (x', y')`: the stationarity
/// equations plus one planar cone coupling per constraint index.  With
/// `fix_x_prime` the primal block is pinned to zero, reducing the
/// criterion to its multiplier form.
pub fn build_criterion_system(
    problem: &GnlpProblem,
    kkt: &KktPoint,
    mode: CriterionMode,
    fix_x_prime: bool,
) -> Result<ConeSelectionSystem> {
    let n = problem.primal_dim();
    let m = problem.constraint_dim();
    let classification = classify_indices(problem, kkt, GRAPH_SNAP_TOL)?;
    let h = problem.lagrangian_hessian(&kkt.x, &kkt.y)?;
    let jac = problem.constraint_jacobian(&kkt.x)?;
    let mut equalities = Vec::with_capacity(n);
    for a in 0..n {
        let mut row = vec![0.0; n + m];
        row[..n].copy_from_slice(h.row(a));
        for i in 0..m {
            row[n + i] = jac.get(i, a);
        }
        equalities.push(row);
    }
    let mut couplings = Vec::with_capacity(m);
    for i in 0..m {
        let mut first = vec![0.0; n + m];
        first[..n].copy_from_slice(jac.row(i));
        let mut second = vec![0.0; n + m];
        second[n + i] = 1.0;
        couplings.push(ConeCoupling {
            first,
            second,
            graph: graph_for(mode, classification.entries[i].slopes),
        });
    }
    Ok(ConeSelectionSystem {
        dim: n + m,
        equalities,
        couplings,
        fixed: if fix_x_prime { (0..n).collect() } else { Vec::new() },
    })
}

/// Decides the criterion: only the zero direction certifies a
/// single-valued Lipschitz localization of the primal-dual map.
pub fn check_criterion(
    problem: &GnlpProblem,
    kkt: &KktPoint,
    mode: CriterionMode,
    fix_x_prime: bool,
) -> Result<FeasibilityVerdict> {
    let system = build_criterion_system(problem, kkt, mode, fix_x_prime)?;
    cone_nonzero_feasibility(&system)
}

/// Directional fibers of the derivative formula: per index the set of
/// admissible multiplier rates, plus the affine map sending them to the
/// tilt rate.
#[derive(Clone, Debug)]
pub struct FiberReport {
    /// Slice coordinate per index: `gradF_i . x' + u'_i`.
    pub slices: Vec<f64>,
    /// Admissible `y'_i` intervals per index.
    pub fibers: Vec<Vec<Interval>>,
    /// Constant part of the tilt rate: `H x'`.
    pub tilt_base: Vec<f64>,
    /// Columns are the constraint gradients: `v' = tilt_base + map y'`.
    pub multiplier_map: Mat,
}

pub fn evaluate_derivative_fibers(
    problem: &GnlpProblem,
    kkt: &KktPoint,
    x_prime: &[f64],
    u_prime: &[f64],
    mode: CriterionMode,
) -> Result<FiberReport> {
    let n = problem.primal_dim();
    let m = problem.constraint_dim();
    if x_prime.len() != n {
        return Err(Error::DimensionMismatch {
            context: "primal direction",
            expected: n,
            actual: x_prime.len(),
        });
    }
    if u_prime.len() != m {
        return Err(Error::DimensionMismatch {
            context: "shift direction",
            expected: m,
            actual: u_prime.len(),
        });
    }
    let classification = classify_indices(problem, kkt, GRAPH_SNAP_TOL)?;
    let h = problem.lagrangian_hessian(&kkt.x, &kkt.y)?;
    let jac = problem.constraint_jacobian(&kkt.x)?;
    let mut slices = Vec::with_capacity(m);
    let mut fibers = Vec::with_capacity(m);
    for i in 0..m {
        let s = linalg::dot(jac.row(i), x_prime) + u_prime[i];
        let graph = graph_for(mode, classification.entries[i].slopes);
        fibers.push(graph.fiber_at(s));
        slices.push(s);
    }
    Ok(FiberReport {
        slices,
        fibers,
        tilt_base: h.matvec(x_prime),
        multiplier_map: jac.transpose(),
    })
}

/// Criterion for single-valued Lipschitz localization of the solution map
/// of the generalized equation `h(p, x) + H(x) ∋ v` with `H` the
/// separable PLQ subdifferential: a nonzero direction `x'` with
/// `(x'_i, -(grad_x h x')_i)` in every strict cone graph refutes it.
pub fn check_generalized_equation(
    h_components: &[Polynomial],
    outer: &[UnivariatePlq],
    p_bar: &[f64],
    x_bar: &[f64],
    v_bar: &[f64],
) -> Result<FeasibilityVerdict> {
    let n = x_bar.len();
    if h_components.len() != n || outer.len() != n || v_bar.len() != n {
        return Err(Error::DimensionMismatch {
            context: "generalized equation",
            expected: n,
            actual: h_components.len(),
        });
    }
    let d = p_bar.len();
    let mut args = Vec::with_capacity(d + n);
    args.extend_from_slice(p_bar);
    args.extend_from_slice(x_bar);

    let mut jac_x = Mat::zeros(n, n);
    let mut couplings = Vec::with_capacity(n);
    for i in 0..n {
        let (value, grad, _) = h_components[i].eval(&args)?;
        for k in 0..n {
            jac_x.set(i, k, grad[d + k]);
        }
        let w = v_bar[i] - value;
        let graph = crate::graph::SubgradientGraph1D::of(&outer[i]);
        let slopes = graph
            .slopes_at([x_bar[i], w], GRAPH_SNAP_TOL)
            .map_err(|distance| Error::OffGraph {
                u: x_bar[i],
                y: w,
                distance,
                tolerance: GRAPH_SNAP_TOL,
            })?
            .0;
        let mut first = vec![0.0; n];
        first[i] = 1.0;
        let second: Vec<f64> = (0..n).map(|k| -jac_x.get(i, k)).collect();
        couplings.push(ConeCoupling {
            first,
            second,
            graph: strict_graph_from_slopes(slopes),
        });
    }
    cone_nonzero_feasibility(&ConeSelectionSystem {
        dim: n,
        equalities: Vec::new(),
        couplings,
        fixed: Vec::new(),
    })
}

/// How variational sufficiency was resolved.
#[derive(Clone, Debug, PartialEq)]
pub enum VarSuffResolution {
    /// User asserted the strong form.
    AssertedStrong,
    /// User asserted the plain form.
    Asserted,
    /// Classical NLP: the strong form is equivalent to the second-order
    /// check, whose verdict is carried here.
    ClassicalSecondOrder(CheckVerdict),
    Unknown,
}

impl VarSuffResolution {
    pub fn affirmative(&self) -> bool {
        match self {
            VarSuffResolution::AssertedStrong | VarSuffResolution::Asserted => true,
            VarSuffResolution::ClassicalSecondOrder(v) => v.holds(),
            VarSuffResolution::Unknown => false,
        }
    }

    pub fn strong(&self) -> bool {
        match self {
            VarSuffResolution::AssertedStrong => true,
            VarSuffResolution::ClassicalSecondOrder(v) => v.holds(),
            _ => false,
        }
    }

    /// Definitely fails (classical case with a negative eigenvalue).
    pub fn denied(&self) -> bool {
        matches!(
            self,
            VarSuffResolution::ClassicalSecondOrder(CheckVerdict::Fails)
        )
    }
}

impl fmt::Display for VarSuffResolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarSuffResolution::AssertedStrong => write!(f, "ASSERTED_BY_USER (strong)"),
            VarSuffResolution::Asserted => write!(f, "ASSERTED_BY_USER"),
            VarSuffResolution::ClassicalSecondOrder(v) => write!(f, "EQUALS_SSOC ({v})"),
            VarSuffResolution::Unknown => write!(f, "UNKNOWN"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Overall {
    Stable,
    NotStable,
    Conditional(String),
}

impl fmt::Display for Overall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Overall::Stable => write!(f, "STABLE"),
            Overall::NotStable => write!(f, "NOT_STABLE"),
            Overall::Conditional(why) => write!(f, "CONDITIONAL ({why})"),
        }
    }
}

/// The aggregate verdict with every intermediate check attached.
#[derive(Clone, Debug)]
pub struct StabilityReport {
    pub classification: IndexClassification,
    pub ligc: LigcReport,
    pub ssoc: SsocReport,
    /// Strict-derivative criterion over `(x', y')`.
    pub full_criterion: FeasibilityVerdict,
    /// Reduced criterion with the primal direction fixed to zero.
    pub multiplier_criterion: FeasibilityVerdict,
    pub variational: VarSuffResolution,
    pub overall: Overall,
    pub notes: Vec<String>,
}

/// Runs every check and aggregates.
///
/// A nonzero direction in the full criterion refutes the localization
/// property outright, so it decides NOT_STABLE regardless of the
/// variational-sufficiency resolution; STABLE additionally needs that
/// resolution to be affirmative, and in the classical case a failed
/// second-order check is itself refuting.
pub fn stability_verdict(
    problem: &GnlpProblem,
    kkt: &KktPoint,
    assume_varsuff: bool,
    assume_strong_varsuff: bool,
    kkt_tol: f64,
) -> Result<StabilityReport> {
    kkt.require_admissible(kkt_tol)?;
    let snap = GRAPH_SNAP_TOL.max(kkt_tol);
    let classification = classify_indices(problem, kkt, snap)?;
    let ligc = check_ligc_classified(problem, kkt, &classification)?;
    let ssoc = check_ssoc_classified(problem, kkt, &classification)?;
    let full_criterion = check_criterion(problem, kkt, CriterionMode::Strict, false)?;
    let multiplier_criterion = check_criterion(problem, kkt, CriterionMode::Strict, true)?;

    let variational = if assume_strong_varsuff {
        VarSuffResolution::AssertedStrong
    } else if assume_varsuff {
        VarSuffResolution::Asserted
    } else if problem.is_classical_nlp() {
        VarSuffResolution::ClassicalSecondOrder(ssoc.verdict)
    } else {
        VarSuffResolution::Unknown
    };

    let mut notes = Vec::new();
    if let (Some(w), Some(sel)) = (&full_criterion.witness, &full_criterion.selection) {
        notes.push(format!(
            "full criterion witness {:?} via cone selection {:?}",
            w, sel
        ));
        notes.push(witness_energy_note(problem, kkt, w)?);
    }
    if let Some(w) = &multiplier_criterion.witness {
        notes.push(format!("multiplier criterion witness {w:?}"));
    }
    if let Some(dep) = &ligc.dependency {
        notes.push(format!("dependent boundary gradients, combination {dep:?}"));
    }
    if variational.strong() {
        notes.push(format!(
            "strong variational sufficiency: reduced criterion suffices and reports {:?}",
            multiplier_criterion.status
        ));
    }

    let overall = if !full_criterion.is_only_zero() {
        Overall::NotStable
    } else if variational.denied() {
        notes.push("second-order condition fails: local optimality not certified".into());
        Overall::NotStable
    } else if variational.affirmative() {
        Overall::Stable
    } else {
        Overall::Conditional("variational sufficiency not established".into())
    };

    Ok(StabilityReport {
        classification,
        ligc,
        ssoc,
        full_criterion,
        multiplier_criterion,
        variational,
        overall,
        notes,
    })
}

/// Energy identity of a full-criterion witness: the negative Hessian
/// quadratic form equals the sum of per-index products, each nonnegative.
fn witness_energy_note(problem: &GnlpProblem, kkt: &KktPoint, w: &[f64]) -> Result<String> {
    let n = problem.primal_dim();
    let (x_prime, y_prime) = w.split_at(n);
    let h = problem.lagrangian_hessian(&kkt.x, &kkt.y)?;
    let jac = problem.constraint_jacobian(&kkt.x)?;
    let lhs = -linalg::dot(x_prime, &h.matvec(x_prime));
    let terms: Vec<f64> = (0..problem.constraint_dim())
        .map(|i| y_prime[i] * linalg::dot(jac.row(i), x_prime))
        .collect();
    let rhs: f64 = terms.iter().sum();
    Ok(format!(
        "witness energy identity: -x'.H.x' = {lhs:.9e}, sum of products = {rhs:.9e}, min term = {:.9e}",
        terms.iter().copied().fold(f64::INFINITY, f64::min)
    ))
}

/// Energy identity terms for tests.
pub fn witness_energy_terms(
    problem: &GnlpProblem,
    kkt: &KktPoint,
    w: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let n = problem.primal_dim();
    let (x_prime, y_prime) = w.split_at(n);
    let h = problem.lagrangian_hessian(&kkt.x, &kkt.y)?;
    let jac = problem.constraint_jacobian(&kkt.x)?;
    let lhs = -linalg::dot(x_prime, &h.matvec(x_prime));
    let terms: Vec<f64> = (0..problem.constraint_dim())
        .map(|i| y_prime[i] * linalg::dot(jac.row(i), x_prime))
        .collect();
    Ok((lhs, terms))
}

/// Default-tolerance wrapper.
pub fn stability_verdict_default(
    problem: &GnlpProblem,
    kkt: &KktPoint,
    assume_varsuff: bool,
    assume_strong_varsuff: bool,
) -> Result<StabilityReport> {
    stability_verdict(
        problem,
        kkt,
        assume_varsuff,
        assume_strong_varsuff,
        KKT_TOLERANCE,
    )
}
