//! Certification toolkit for primal-dual full stability of KKT pairs in
//! generalized nonlinear programs whose outer structure is separable
//! convex piecewise linear-quadratic.
//!
//! The pipeline has two independent halves.  The analytic half classifies
//! constraint indices, builds the derivative and coderivative cone graphs
//! of each univariate outer function, and decides the polyhedral cone
//! criteria by exact small-scale linear programming.  The numeric half
//! re-derives the same answers from first principles: difference-quotient
//! sampling of the cone graphs, brute-force localized solves of the
//! perturbed problems, and Lipschitz modulus estimation of the primal-dual
//! solution map.  Agreement between the two halves is the certificate.

pub mod cone;
pub mod corpus;
pub mod criteria;
pub mod derive;
pub mod error;
pub mod exec;
pub mod feasibility;
pub mod graph;
pub mod linalg;
pub mod oracle;
pub mod plq;
pub mod poly;
pub mod problem;
pub mod simplex;
pub mod tol;

pub use cone::{OriginFiber, PlanarConeUnion, Slope, SlopePair};
pub use error::{Error, Result};
pub use plq::{Interval, PlqPiece, UnivariatePlq};
pub use poly::Polynomial;
pub use problem::{GnlpProblem, KktPoint, MultiplierSet};
