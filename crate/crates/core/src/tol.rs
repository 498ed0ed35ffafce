//! Central numeric tolerances.
//!
//! Every threshold used by the certification pipeline is defined here so
//! that test assertions and CLI defaults agree with the library.

/// Admissibility threshold on the KKT residual.  CLI `--tol` overrides it
/// per run.
pub const KKT_TOLERANCE: f64 = 1e-8;

/// Snap distance for placing a candidate point onto the subgradient graph.
/// Points further away than this are rejected as off-graph.
pub const GRAPH_SNAP_TOL: f64 = 1e-10;

/// Strict positivity margin for the projected minimum eigenvalue in the
/// second-order check.  Eigenvalues inside `[-SSOC_TOL, SSOC_TOL]` are
/// inconclusive, never a pass.
pub const SSOC_TOL: f64 = 1e-8;

/// Feasibility tolerance of the dense simplex solver.
pub const LP_FEASIBILITY_TOL: f64 = 1e-9;

/// An LP optimum above this value certifies a nonzero cone direction.
pub const NONZERO_THRESHOLD: f64 = 1e-7;

/// Witness vectors must satisfy their defining equations this tightly.
pub const WITNESS_TOL: f64 = 1e-9;

/// Piecewise function values at shared endpoints must agree this tightly.
pub const PLQ_CONTINUITY_TOL: f64 = 1e-12;

/// Stopping rule for the alternating-projection computation of the
/// least-norm multiplier.
pub const PROJECTION_TOL: f64 = 1e-12;

/// Rank decisions scale this by the largest matrix entry.
pub const RANK_TOL: f64 = 1e-10;

/// Angular merge tolerance for canonical planar cone unions.
pub const CONE_ANGLE_TOL: f64 = 1e-9;

/// Localized solves polish to this accuracy.
pub const POLISH_TOL: f64 = 1e-10;

/// Minimizers closer than this are one cluster.
pub const CLUSTER_TOL: f64 = 1e-6;

/// Clusters within this of the best value count as global in the ball.
pub const VALUE_TIE_TOL: f64 = 1e-9;

/// A modulus ladder whose estimate grows by at least this factor between
/// consecutive rungs is flagged as diverging.
pub const LADDER_FACTOR: f64 = 10.0;

/// Sample pairs closer than `radius / PAIR_FILTER_DIVISOR` in input space
/// are excluded from modulus estimation.
pub const PAIR_FILTER_DIVISOR: f64 = 100.0;

/// An experiment with more than this fraction of infeasible solves is
/// invalid.
pub const EMPTY_FRACTION_LIMIT: f64 = 0.01;
