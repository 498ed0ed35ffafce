//! Univariate convex piecewise linear-quadratic functions.
//!
//! A function is a list of pieces `(q/2) u^2 + l u + c` over consecutive
//! closed intervals.  Validation enforces convexity and continuity; the
//! subgradient, the Legendre-Fenchel conjugate, and the monotone
//! subgradient graph are all derived from the piece list.

use std::fmt;

use crate::error::{Error, Result};
use crate::tol::PLQ_CONTINUITY_TOL;

/// Closed interval, possibly unbounded.  `lo > hi` encodes the empty set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn all() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lo).min(self.hi)
    }

    /// Distance from `x` to the interval (0 inside).
    pub fn distance(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            0.0
        }
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            write!(f, "{{}}")
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

/// One quadratic piece: `(quad/2) u^2 + lin u + constant` on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlqPiece {
    pub lo: f64,
    pub hi: f64,
    pub quad: f64,
    pub lin: f64,
    pub constant: f64,
}

impl PlqPiece {
    pub fn new(lo: f64, hi: f64, quad: f64, lin: f64, constant: f64) -> Self {
        PlqPiece {
            lo,
            hi,
            quad,
            lin,
            constant,
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        (0.5 * self.quad * u + self.lin) * u + self.constant
    }

    pub fn derivative(&self, u: f64) -> f64 {
        self.quad * u + self.lin
    }
}

/// A named violation of the piecewise structure, pointing at a piece.
#[derive(Clone, Debug, PartialEq)]
pub enum PlqViolation {
    Empty,
    NonFiniteData { piece: usize },
    InvertedInterval { piece: usize },
    DomainNotAnInterval { piece: usize },
    NegativeCurvature { piece: usize },
    ValueMismatch { piece: usize, gap: f64 },
    DerivativeDecreasing { piece: usize },
}

impl fmt::Display for PlqViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlqViolation::Empty => write!(f, "function has no pieces (not proper)"),
            PlqViolation::NonFiniteData { piece } => {
                write!(f, "piece {piece}: non-finite coefficient")
            }
            PlqViolation::InvertedInterval { piece } => {
                write!(f, "piece {piece}: interval endpoints out of order")
            }
            PlqViolation::DomainNotAnInterval { piece } => {
                write!(f, "piece {piece}: domain not an interval (gap or overlap before it)")
            }
            PlqViolation::NegativeCurvature { piece } => {
                write!(f, "piece {piece}: negative quadratic coefficient breaks convexity")
            }
            PlqViolation::ValueMismatch { piece, gap } => {
                write!(f, "piece {piece}: value jumps by {gap:.3e} at the shared endpoint")
            }
            PlqViolation::DerivativeDecreasing { piece } => {
                write!(f, "piece {piece}: derivative not nondecreasing at the shared endpoint")
            }
        }
    }
}

/// Closed proper convex piecewise linear-quadratic function on the reals.
#[derive(Clone, Debug, PartialEq)]
pub struct UnivariatePlq {
    pieces: Vec<PlqPiece>,
}

/// Checks the structural invariants, returning every violation found.
pub fn plq_validate(pieces: &[PlqPiece]) -> Vec<PlqViolation> {
    let mut out = Vec::new();
    if pieces.is_empty() {
        out.push(PlqViolation::Empty);
        return out;
    }
    for (i, p) in pieces.iter().enumerate() {
        if !p.quad.is_finite() || !p.lin.is_finite() || !p.constant.is_finite() {
            out.push(PlqViolation::NonFiniteData { piece: i });
        }
        if p.lo > p.hi || p.lo == f64::INFINITY || p.hi == f64::NEG_INFINITY {
            out.push(PlqViolation::InvertedInterval { piece: i });
        }
        if p.quad < 0.0 {
            out.push(PlqViolation::NegativeCurvature { piece: i });
        }
    }
    if !out.is_empty() {
        return out;
    }
    for i in 1..pieces.len() {
        let (a, b) = (&pieces[i - 1], &pieces[i]);
        if a.hi != b.lo {
            out.push(PlqViolation::DomainNotAnInterval { piece: i });
            continue;
        }
        let t = a.hi;
        let scale = a.value(t).abs().max(b.value(t).abs()).max(1.0);
        let gap = (a.value(t) - b.value(t)).abs();
        if gap > PLQ_CONTINUITY_TOL * scale {
            out.push(PlqViolation::ValueMismatch { piece: i, gap });
        }
        let dscale = a.derivative(t).abs().max(b.derivative(t).abs()).max(1.0);
        if a.derivative(t) > b.derivative(t) + PLQ_CONTINUITY_TOL * dscale {
            out.push(PlqViolation::DerivativeDecreasing { piece: i });
        }
    }
    out
}

impl UnivariatePlq {
    /// Validating constructor.
    pub fn new(pieces: Vec<PlqPiece>) -> Result<Self> {
        let violations = plq_validate(&pieces);
        if violations.is_empty() {
            Ok(UnivariatePlq { pieces })
        } else {
            let msg = violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            Err(Error::InvalidPlq(msg))
        }
    }

    /// Indicator of `(-inf, 0]`, the inequality-constraint outer function.
    pub fn indicator_le_zero() -> Self {
        UnivariatePlq {
            pieces: vec![PlqPiece::new(f64::NEG_INFINITY, 0.0, 0.0, 0.0, 0.0)],
        }
    }

    /// Indicator of `{0}`, the equality-constraint outer function.
    pub fn indicator_zero() -> Self {
        UnivariatePlq {
            pieces: vec![PlqPiece::new(0.0, 0.0, 0.0, 0.0, 0.0)],
        }
    }

    /// Indicator of `(-inf, b]`.
    pub fn indicator_halfline(b: f64) -> Self {
        UnivariatePlq {
            pieces: vec![PlqPiece::new(f64::NEG_INFINITY, b, 0.0, 0.0, 0.0)],
        }
    }

    /// `|u|`.
    pub fn abs() -> Self {
        UnivariatePlq {
            pieces: vec![
                PlqPiece::new(f64::NEG_INFINITY, 0.0, 0.0, -1.0, 0.0),
                PlqPiece::new(0.0, f64::INFINITY, 0.0, 1.0, 0.0),
            ],
        }
    }

    /// `(q/2) u^2` on the whole line.
    pub fn quadratic(q: f64) -> Self {
        UnivariatePlq {
            pieces: vec![PlqPiece::new(f64::NEG_INFINITY, f64::INFINITY, q, 0.0, 0.0)],
        }
    }

    /// The zero function on the whole line.
    pub fn zero() -> Self {
        UnivariatePlq::quadratic(0.0)
    }

    pub fn pieces(&self) -> &[PlqPiece] {
        &self.pieces
    }

    pub fn domain(&self) -> Interval {
        Interval::new(
            self.pieces.first().unwrap().lo,
            self.pieces.last().unwrap().hi,
        )
    }

    /// Function value; infinite outside the domain.
    pub fn value(&self, u: f64) -> f64 {
        for p in &self.pieces {
            if u >= p.lo && u <= p.hi {
                return p.value(u);
            }
        }
        f64::INFINITY
    }

    /// Function value with the argument snapped onto the domain when it
    /// lies within `tol` of a boundary (rounding guard for solvers).
    pub fn value_snapped(&self, u: f64, tol: f64) -> f64 {
        let dom = self.domain();
        let scale = 1.0 + u.abs();
        if u < dom.lo && u >= dom.lo - tol * scale {
            return self.value(dom.lo);
        }
        if u > dom.hi && u <= dom.hi + tol * scale {
            return self.value(dom.hi);
        }
        self.value(u)
    }

    /// The subdifferential at `u`: a closed interval, `None` outside the
    /// domain.
    pub fn subgradient(&self, u: f64) -> Option<Interval> {
        let dom = self.domain();
        if u < dom.lo || u > dom.hi {
            return None;
        }
        if dom.is_point() {
            return Some(Interval::all());
        }
        // one-sided derivatives at u (zero-length pieces carry no slope)
        let mut left: Option<f64> = None;
        let mut right: Option<f64> = None;
        for p in &self.pieces {
            if p.lo == p.hi {
                continue;
            }
            if u > p.lo && u < p.hi {
                let d = p.derivative(u);
                left = Some(d);
                right = Some(d);
                break;
            }
            if u == p.hi {
                left = Some(p.derivative(u));
            }
            if u == p.lo {
                right = Some(p.derivative(u));
            }
        }
        let lo = if u == dom.lo {
            f64::NEG_INFINITY
        } else {
            left.expect("interior point must touch a piece")
        };
        let hi = if u == dom.hi {
            f64::INFINITY
        } else {
            right.expect("interior point must touch a piece")
        };
        Some(Interval::new(lo, hi))
    }

    /// Subdifferential with the argument snapped to the nearest breakpoint
    /// within `tol`; kink intervals survive small floating-point drift.
    pub fn subgradient_snapped(&self, u: f64, tol: f64) -> Option<Interval> {
        let mut snapped = u;
        let mut best = tol;
        for b in self.breakpoints() {
            let d = (u - b).abs();
            if d <= best {
                best = d;
                snapped = b;
            }
        }
        self.subgradient(snapped)
    }

    /// All finite piece endpoints, deduplicated, in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for p in &self.pieces {
            for b in [p.lo, p.hi] {
                if b.is_finite() && out.last() != Some(&b) {
                    out.push(b);
                }
            }
        }
        out.dedup();
        out
    }

    /// Merges adjacent pieces with identical coefficients and drops
    /// zero-length interior pieces.
    pub fn canonical(&self) -> UnivariatePlq {
        let mut pieces: Vec<PlqPiece> = Vec::new();
        for p in &self.pieces {
            if p.lo == p.hi && self.pieces.len() > 1 {
                continue;
            }
            if let Some(last) = pieces.last_mut() {
                // continuity at the junction is already validated, so the
                // constants agree up to rounding and the first one wins
                if last.quad == p.quad && last.lin == p.lin {
                    last.hi = p.hi;
                    continue;
                }
            }
            pieces.push(*p);
        }
        UnivariatePlq { pieces }
    }

    /// Drops pieces of negligible width (rounding slivers) by extending
    /// the preceding piece over them.  Comparison helper only.
    fn collapse_slivers(&self, tol: f64) -> UnivariatePlq {
        let mut pieces: Vec<PlqPiece> = Vec::new();
        for p in &self.pieces {
            let width = p.hi - p.lo;
            let scale = p.lo.abs().max(p.hi.abs()).max(1.0);
            if width <= tol * scale && self.pieces.len() > 1 {
                match pieces.last_mut() {
                    Some(prev) => {
                        prev.hi = p.hi;
                        continue;
                    }
                    None => {
                        // leading sliver: shift onto the next piece later
                        continue;
                    }
                }
            }
            if let Some(prev) = pieces.last() {
                let mut q = *p;
                q.lo = prev.hi;
                pieces.push(q);
            } else {
                pieces.push(*p);
            }
        }
        if pieces.is_empty() {
            return self.clone();
        }
        // restore the original domain ends
        pieces.first_mut().unwrap().lo = self.pieces.first().unwrap().lo;
        pieces.last_mut().unwrap().hi = self.pieces.last().unwrap().hi;
        UnivariatePlq { pieces }
    }

    /// Structural comparison of canonical forms with tolerance on
    /// endpoints and coefficients.
    pub fn approx_eq(&self, other: &UnivariatePlq, tol: f64) -> bool {
        let a = self.canonical().collapse_slivers(tol);
        let b = other.canonical().collapse_slivers(tol);
        if a.pieces.len() != b.pieces.len() {
            return false;
        }
        let close = |x: f64, y: f64| {
            (x == y) || (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0)
        };
        a.pieces.iter().zip(&b.pieces).all(|(p, q)| {
            close(p.lo, q.lo)
                && close(p.hi, q.hi)
                && close(p.quad, q.quad)
                && close(p.lin, q.lin)
                && close(p.constant, q.constant)
        })
    }

    /// Classifies indicator-type functions (classical NLP outer terms).
    pub fn indicator_kind(&self) -> Option<IndicatorKind> {
        let c = self.canonical();
        if c.pieces.len() != 1 {
            return None;
        }
        let p = c.pieces[0];
        if p.quad != 0.0 || p.lin != 0.0 || p.constant != 0.0 {
            return None;
        }
        if p.lo == f64::NEG_INFINITY && p.hi.is_finite() {
            Some(IndicatorKind::HalfLine { bound: p.hi })
        } else if p.lo == p.hi {
            Some(IndicatorKind::Point { at: p.lo })
        } else {
            None
        }
    }

    /// Legendre-Fenchel conjugate, again convex piecewise
    /// linear-quadratic.  Computed by swapping the axes of the monotone
    /// subgradient graph piece by piece.
    pub fn conjugate(&self) -> UnivariatePlq {
        let g = self.canonical();
        let dom = g.domain();

        // Point domain: the conjugate is the affine function a*y - g(a).
        if dom.is_point() {
            let a = dom.lo;
            let c = -g.value(a);
            return UnivariatePlq {
                pieces: vec![PlqPiece::new(f64::NEG_INFINITY, f64::INFINITY, 0.0, a, c)],
            };
        }

        // Derivative values at piece boundaries, shared exactly between
        // neighbors so conjugate pieces chain without gaps.
        let n = g.pieces.len();
        let mut d_left = vec![0.0; n]; // derivative at piece lo (finite lo only)
        let mut d_right = vec![0.0; n]; // derivative at piece hi (finite hi only)
        for (i, p) in g.pieces.iter().enumerate() {
            if p.lo.is_finite() {
                d_left[i] = p.derivative(p.lo);
            }
            if p.hi.is_finite() {
                d_right[i] = p.derivative(p.hi);
            }
        }
        // fuse junction derivatives that agree up to rounding, so the
        // conjugate pieces share their endpoints exactly; affine pieces
        // carry the fused value through to their other end
        for i in 0..n.saturating_sub(1) {
            let scale = d_right[i].abs().max(d_left[i + 1].abs()).max(1.0);
            if (d_left[i + 1] - d_right[i]).abs() <= 1e-9 * scale {
                d_left[i + 1] = d_right[i];
            }
            if g.pieces[i + 1].quad == 0.0 {
                d_right[i + 1] = d_left[i + 1];
            }
        }

        // Build conjugate pieces in increasing y together with an anchor
        // graph point (u, y) for each, fixing constants by Fenchel.
        struct ProtoPiece {
            lo: f64,
            hi: f64,
            quad: f64,
            lin: f64,
            anchor_u: f64,
            anchor_y: f64,
        }
        let mut protos: Vec<ProtoPiece> = Vec::new();

        if dom.lo.is_finite() {
            // bottom vertical ray {dom.lo} x (-inf, d] becomes an initial
            // affine piece with slope dom.lo
            protos.push(ProtoPiece {
                lo: f64::NEG_INFINITY,
                hi: d_left[0],
                quad: 0.0,
                lin: dom.lo,
                anchor_u: dom.lo,
                anchor_y: d_left[0],
            });
        }
        for (i, p) in g.pieces.iter().enumerate() {
            if p.quad > 0.0 {
                let ylo = if p.lo.is_finite() {
                    d_left[i]
                } else {
                    f64::NEG_INFINITY
                };
                let yhi = if p.hi.is_finite() {
                    d_right[i]
                } else {
                    f64::INFINITY
                };
                let (au, ay) = if p.lo.is_finite() {
                    (p.lo, d_left[i])
                } else if p.hi.is_finite() {
                    (p.hi, d_right[i])
                } else {
                    (0.0, p.derivative(0.0))
                };
                protos.push(ProtoPiece {
                    lo: ylo,
                    hi: yhi,
                    quad: 1.0 / p.quad,
                    lin: -p.lin / p.quad,
                    anchor_u: au,
                    anchor_y: ay,
                });
            }
            // q == 0 pieces map to kinks of the conjugate: no piece.
            // vertical jump after piece i
            if i + 1 < n && p.hi.is_finite() {
                let (ylo, yhi) = (d_right[i], d_left[i + 1]);
                if yhi > ylo {
                    protos.push(ProtoPiece {
                        lo: ylo,
                        hi: yhi,
                        quad: 0.0,
                        lin: p.hi,
                        anchor_u: p.hi,
                        anchor_y: ylo,
                    });
                }
            }
        }
        if dom.hi.is_finite() {
            protos.push(ProtoPiece {
                lo: d_right[n - 1],
                hi: f64::INFINITY,
                quad: 0.0,
                lin: dom.hi,
                anchor_u: dom.hi,
                anchor_y: d_right[n - 1],
            });
        }

        // A globally affine g leaves no protos: its conjugate is the point
        // indicator at the slope, shifted by the intercept.
        if protos.is_empty() {
            let p = g.pieces[0];
            return UnivariatePlq {
                pieces: vec![PlqPiece::new(p.lin, p.lin, 0.0, 0.0, -p.constant)],
            };
        }

        // Fix the first constant by Fenchel at its anchor, then chain by
        // continuity so shared endpoints agree exactly.
        let mut pieces: Vec<PlqPiece> = Vec::new();
        for proto in protos {
            let mut piece = PlqPiece::new(proto.lo, proto.hi, proto.quad, proto.lin, 0.0);
            match pieces.last() {
                None => {
                    let y = proto.anchor_y;
                    let target = proto.anchor_u * y - g.value(proto.anchor_u);
                    piece.constant = target - piece.value(y);
                }
                Some(prev) => {
                    let y = prev.hi;
                    piece.constant = prev.value(y) - piece.value(y);
                }
            }
            pieces.push(piece);
        }
        debug_assert!(
            plq_validate(&pieces).is_empty(),
            "conjugate must validate: {:?} from {:?}",
            plq_validate(&pieces),
            pieces
        );
        UnivariatePlq { pieces }.canonical()
    }
}

/// Outer-function shapes that make a problem a classical NLP.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IndicatorKind {
    /// Indicator of `(-inf, bound]` (inequality constraint).
    HalfLine { bound: f64 },
    /// Indicator of `{at}` (equality constraint).
    Point { at: f64 },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_validates() {
        assert!(plq_validate(UnivariatePlq::indicator_le_zero().pieces()).is_empty());
    }

    #[test]
    fn decreasing_derivative_is_a_violation() {
        // slope 2 then slope 1: convexity breach at the junction
        let pieces = vec![
            PlqPiece::new(f64::NEG_INFINITY, 0.0, 0.0, 2.0, 0.0),
            PlqPiece::new(0.0, f64::INFINITY, 0.0, 1.0, 0.0),
        ];
        let v = plq_validate(&pieces);
        assert!(v.contains(&PlqViolation::DerivativeDecreasing { piece: 1 }), "{v:?}");
    }

    #[test]
    fn domain_gap_is_a_violation() {
        let pieces = vec![
            PlqPiece::new(-1.0, 0.0, 0.0, 0.0, 0.0),
            PlqPiece::new(0.5, 1.0, 0.0, 0.0, 0.0),
        ];
        let v = plq_validate(&pieces);
        assert!(v.contains(&PlqViolation::DomainNotAnInterval { piece: 1 }), "{v:?}");
    }

    #[test]
    fn subgradient_of_indicator_corner() {
        let g = UnivariatePlq::indicator_le_zero();
        let s = g.subgradient(0.0).unwrap();
        assert_eq!(s.lo, 0.0);
        assert_eq!(s.hi, f64::INFINITY);
        assert_eq!(g.subgradient(-1.0), Some(Interval::point(0.0)));
        assert_eq!(g.subgradient(1.0), None);
    }

    #[test]
    fn subgradient_of_quadratic() {
        let g = UnivariatePlq::quadratic(1.0);
        assert_eq!(g.subgradient(3.0), Some(Interval::point(3.0)));
    }

    #[test]
    fn subgradient_of_abs_kink() {
        let g = UnivariatePlq::abs();
        assert_eq!(g.subgradient(0.0), Some(Interval::new(-1.0, 1.0)));
    }

    #[test]
    fn conjugate_of_halfline_indicator() {
        // support function of (-inf, 0] is the indicator of [0, inf)
        let g = UnivariatePlq::indicator_le_zero().conjugate();
        assert_eq!(g.domain(), Interval::new(0.0, f64::INFINITY));
        assert_eq!(g.value(1.0), 0.0);
        assert_eq!(g.value(-1.0), f64::INFINITY);
    }

    #[test]
    fn quadratic_is_self_conjugate() {
        let g = UnivariatePlq::quadratic(1.0);
        assert!(g.conjugate().approx_eq(&g, 1e-12));
    }

    #[test]
    fn conjugate_of_abs_is_box_indicator() {
        let g = UnivariatePlq::abs().conjugate();
        assert_eq!(g.domain(), Interval::new(-1.0, 1.0));
        assert_eq!(g.value(0.5), 0.0);
        assert_eq!(g.value(2.0), f64::INFINITY);
    }

    #[test]
    fn point_indicator_conjugate_is_linear() {
        let g = UnivariatePlq::indicator_zero().conjugate();
        assert_eq!(g.domain(), Interval::all());
        assert_eq!(g.value(5.0), 0.0);
    }
}
