//! Finite unions of polyhedral convex cones in the plane.
//!
//! A union is canonicalized through its trace on the unit circle: every
//! convex cone is a closed arc of width at most pi, the arcs are merged,
//! and the result is rebuilt as rays, lines, and wedges sorted by angle.
//! Set equality then reduces to structural comparison, with cones absorbed
//! whenever the surrounding union covers them (the axes disappear into the
//! two quadrant wedges, for example).

use std::f64::consts::PI;
use std::fmt;

use crate::plq::Interval;
use crate::tol::CONE_ANGLE_TOL;

/// Slope of a monotone graph direction, in `[0, inf]`.
///
/// Infinity is a tag, never a large float; comparisons on it are exact.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Slope {
    Finite(f64),
    Infinite,
}

impl Slope {
    pub fn is_finite(&self) -> bool {
        matches!(self, Slope::Finite(_))
    }

    fn rank(&self) -> f64 {
        match self {
            Slope::Finite(g) => *g,
            Slope::Infinite => f64::INFINITY,
        }
    }

    pub fn gt(&self, other: &Slope) -> bool {
        self.rank() > other.rank()
    }

    /// Unit direction of the northeast ray with this slope.
    pub fn ne_dir(&self) -> [f64; 2] {
        match self {
            Slope::Finite(g) => {
                let n = (1.0 + g * g).sqrt();
                [1.0 / n, g / n]
            }
            Slope::Infinite => [0.0, 1.0],
        }
    }

    /// Unit direction of the southwest ray with this slope.
    pub fn sw_dir(&self) -> [f64; 2] {
        let d = self.ne_dir();
        [-d[0], -d[1]]
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slope::Finite(g) => write!(f, "{g}"),
            Slope::Infinite => write!(f, "inf"),
        }
    }
}

/// Slopes of the graph leaving a base point southwest (`sw`) and
/// northeast (`ne`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopePair {
    pub sw: Slope,
    pub ne: Slope,
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn angle_of(d: [f64; 2]) -> f64 {
    let a = d[1].atan2(d[0]);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

fn neg(d: [f64; 2]) -> [f64; 2] {
    [-d[0], -d[1]]
}

/// One polyhedral convex cone in the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cone2 {
    /// Full line through the origin; direction has angle in `[0, pi)`.
    Line([f64; 2]),
    Ray([f64; 2]),
    /// Closed wedge swept counterclockwise from the first direction to the
    /// second; width at most pi.
    Wedge([f64; 2], [f64; 2]),
}

impl Cone2 {
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        self.distance(p) <= tol
    }

    /// Euclidean distance from a point to the cone.
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        match self {
            Cone2::Line(d) => cross(*d, p).abs(),
            Cone2::Ray(d) => {
                let t = dot(*d, p).max(0.0);
                let q = [p[0] - t * d[0], p[1] - t * d[1]];
                (q[0] * q[0] + q[1] * q[1]).sqrt()
            }
            Cone2::Wedge(d0, d1) => {
                if cross(*d0, p) >= 0.0 && cross(*d1, p) <= 0.0 {
                    0.0
                } else {
                    Cone2::Ray(*d0).distance(p).min(Cone2::Ray(*d1).distance(p))
                }
            }
        }
    }

    fn arcs(&self) -> Vec<Arc> {
        match self {
            Cone2::Line(d) => {
                let a = angle_of(*d);
                vec![Arc::point(a, *d), Arc::point(a + PI, neg(*d))]
            }
            Cone2::Ray(d) => vec![Arc::point(angle_of(*d), *d)],
            Cone2::Wedge(d0, d1) => {
                let a0 = angle_of(*d0);
                let mut a1 = angle_of(*d1);
                while a1 < a0 - CONE_ANGLE_TOL {
                    a1 += 2.0 * PI;
                }
                debug_assert!(a1 - a0 <= PI + 1e-9, "wedge wider than a halfplane");
                vec![Arc {
                    a0,
                    a1,
                    d0: *d0,
                    d1: *d1,
                }]
            }
        }
    }
}

impl fmt::Display for Cone2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fd = |d: [f64; 2]| format!("({:.6}, {:.6})", d[0], d[1]);
        match self {
            Cone2::Line(d) => write!(f, "LINE{}", fd(*d)),
            Cone2::Ray(d) => write!(f, "RAY{}", fd(*d)),
            Cone2::Wedge(d0, d1) => write!(f, "WEDGE[{} -> {}]", fd(*d0), fd(*d1)),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Arc {
    a0: f64,
    a1: f64,
    d0: [f64; 2],
    d1: [f64; 2],
}

impl Arc {
    fn point(angle: f64, dir: [f64; 2]) -> Arc {
        let a = angle.rem_euclid(2.0 * PI);
        Arc {
            a0: a,
            a1: a,
            d0: dir,
            d1: dir,
        }
    }

    fn width(&self) -> f64 {
        self.a1 - self.a0
    }
}

/// A finite union of polyhedral convex cones in canonical form.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanarConeUnion {
    cones: Vec<Cone2>,
}

impl PlanarConeUnion {
    pub fn empty() -> Self {
        PlanarConeUnion { cones: Vec::new() }
    }

    pub fn line(d: [f64; 2]) -> Self {
        PlanarConeUnion::from_cones(vec![Cone2::Line(d)])
    }

    /// Canonicalizes an arbitrary list of cones.
    pub fn from_cones(cones: Vec<Cone2>) -> Self {
        let mut arcs: Vec<Arc> = cones.iter().flat_map(|c| c.arcs()).collect();
        if arcs.is_empty() {
            return PlanarConeUnion::empty();
        }
        // normalize starts into [0, 2pi)
        for arc in &mut arcs {
            let shift = arc.a0.rem_euclid(2.0 * PI) - arc.a0;
            arc.a0 += shift;
            arc.a1 += shift;
        }
        arcs.sort_by(|x, y| x.a0.partial_cmp(&y.a0).unwrap());
        // merge overlapping or touching arcs
        let mut merged: Vec<Arc> = Vec::new();
        for arc in arcs {
            match merged.last_mut() {
                Some(last) if arc.a0 <= last.a1 + CONE_ANGLE_TOL => {
                    if arc.a1 > last.a1 {
                        last.a1 = arc.a1;
                        last.d1 = arc.d1;
                    }
                }
                _ => merged.push(arc),
            }
        }
        // wrap-around merge between the last and first arcs
        if merged.len() >= 2 {
            let first = merged[0];
            let last = *merged.last().unwrap();
            if last.a1 >= first.a0 + 2.0 * PI - CONE_ANGLE_TOL {
                let f = &mut merged[0];
                f.a0 = last.a0 - 2.0 * PI;
                f.d0 = last.d0;
                if last.a1 - 2.0 * PI > f.a1 {
                    f.a1 = last.a1 - 2.0 * PI;
                    f.d1 = last.d1;
                }
                merged.pop();
            }
        }
        // rebuild: points become rays (pairing antipodal rays into lines),
        // wider arcs become wedges
        let mut rays: Vec<[f64; 2]> = Vec::new();
        let mut out: Vec<Cone2> = Vec::new();
        for arc in &merged {
            if arc.width() <= CONE_ANGLE_TOL {
                rays.push(arc.d0);
            } else {
                debug_assert!(arc.width() <= PI + 1e-9);
                out.push(Cone2::Wedge(arc.d0, arc.d1));
            }
        }
        let mut used = vec![false; rays.len()];
        for i in 0..rays.len() {
            if used[i] {
                continue;
            }
            let ai = angle_of(rays[i]);
            let mut line = false;
            for j in i + 1..rays.len() {
                if used[j] {
                    continue;
                }
                let d = (angle_of(rays[j]) - ai - PI).abs();
                if d <= CONE_ANGLE_TOL || (d - 2.0 * PI).abs() <= CONE_ANGLE_TOL {
                    used[j] = true;
                    line = true;
                    break;
                }
            }
            used[i] = true;
            if line {
                let dir = if ai < PI - CONE_ANGLE_TOL {
                    rays[i]
                } else {
                    neg(rays[i])
                };
                out.push(Cone2::Line(dir));
            } else {
                out.push(Cone2::Ray(rays[i]));
            }
        }
        out.sort_by(|a, b| {
            let key = |c: &Cone2| match c {
                Cone2::Line(d) => angle_of(*d).rem_euclid(PI),
                Cone2::Ray(d) => angle_of(*d),
                Cone2::Wedge(d0, _) => angle_of(*d0),
            };
            key(a).partial_cmp(&key(b)).unwrap()
        });
        PlanarConeUnion { cones: out }
    }

    pub fn cones(&self) -> &[Cone2] {
        &self.cones
    }

    pub fn is_empty(&self) -> bool {
        self.cones.is_empty()
    }

    /// Distance from a point to the union (0 at the origin).
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        let base = (p[0] * p[0] + p[1] * p[1]).sqrt();
        self.cones
            .iter()
            .map(|c| c.distance(p))
            .fold(base, f64::min)
    }

    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        self.distance(p) <= tol
    }

    /// The union reflected through the origin.
    pub fn negated(&self) -> PlanarConeUnion {
        PlanarConeUnion::from_cones(
            self.cones
                .iter()
                .map(|c| match c {
                    Cone2::Line(d) => Cone2::Line(*d),
                    Cone2::Ray(d) => Cone2::Ray(neg(*d)),
                    Cone2::Wedge(d0, d1) => Cone2::Wedge(neg(*d0), neg(*d1)),
                })
                .collect(),
        )
    }

    /// Extreme directions: ray tips, both line ends, wedge boundaries.
    pub fn extreme_dirs(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::new();
        for c in &self.cones {
            match c {
                Cone2::Line(d) => {
                    out.push(*d);
                    out.push(neg(*d));
                }
                Cone2::Ray(d) => out.push(*d),
                Cone2::Wedge(d0, d1) => {
                    out.push(*d0);
                    out.push(*d1);
                }
            }
        }
        out
    }

    /// Structural comparison with angular tolerance.
    pub fn approx_eq(&self, other: &PlanarConeUnion, tol: f64) -> bool {
        if self.cones.len() != other.cones.len() {
            return false;
        }
        let close = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol;
        self.cones.iter().zip(&other.cones).all(|(x, y)| match (x, y) {
            (Cone2::Line(a), Cone2::Line(b)) => close(*a, *b),
            (Cone2::Ray(a), Cone2::Ray(b)) => close(*a, *b),
            (Cone2::Wedge(a0, a1), Cone2::Wedge(b0, b1)) => close(*a0, *b0) && close(*a1, *b1),
            _ => false,
        })
    }

    /// `{ t : (s, t) in union }` as a merged list of closed intervals.
    pub fn fiber_at(&self, s: f64) -> Vec<Interval> {
        let mut parts: Vec<Interval> = Vec::new();
        for c in &self.cones {
            match c {
                Cone2::Line(d) => {
                    if d[0].abs() <= CONE_ANGLE_TOL {
                        if s.abs() <= CONE_ANGLE_TOL {
                            parts.push(Interval::all());
                        }
                    } else {
                        let t = s * d[1] / d[0];
                        parts.push(Interval::point(t));
                    }
                }
                Cone2::Ray(d) => {
                    if d[0].abs() <= CONE_ANGLE_TOL {
                        if s.abs() <= CONE_ANGLE_TOL {
                            if d[1] > 0.0 {
                                parts.push(Interval::new(0.0, f64::INFINITY));
                            } else {
                                parts.push(Interval::new(f64::NEG_INFINITY, 0.0));
                            }
                        }
                    } else {
                        let alpha = s / d[0];
                        if alpha >= 0.0 {
                            parts.push(Interval::point(alpha * d[1]));
                        }
                    }
                }
                Cone2::Wedge(d0, d1) => {
                    // cross(d0, (s,t)) >= 0  and  cross(d1, (s,t)) <= 0
                    let mut lo = f64::NEG_INFINITY;
                    let mut hi = f64::INFINITY;
                    let mut feasible = true;
                    for (d, sign) in [(d0, 1.0), (d1, -1.0)] {
                        // sign * (d.x * t - d.y * s) >= 0
                        let a = sign * d[0];
                        let b = sign * d[1] * s;
                        if a.abs() <= CONE_ANGLE_TOL {
                            if -b < -1e-15 {
                                feasible = false;
                            }
                        } else if a > 0.0 {
                            lo = lo.max(b / a);
                        } else {
                            hi = hi.min(b / a);
                        }
                    }
                    if feasible && lo <= hi {
                        parts.push(Interval::new(lo, hi));
                    }
                }
            }
        }
        merge_intervals(parts)
    }

    /// The origin fiber `{ t : (0, t) in union }`.
    pub fn origin_fiber(&self) -> OriginFiber {
        let up = self.contains([0.0, 1.0], CONE_ANGLE_TOL);
        let down = self.contains([0.0, -1.0], CONE_ANGLE_TOL);
        debug_assert_eq!(up, down, "monotone PLQ fibers are subspaces");
        if up && down {
            OriginFiber::AllReals
        } else {
            OriginFiber::Zero
        }
    }
}

impl fmt::Display for PlanarConeUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cones.is_empty() {
            return write!(f, "{{0}}");
        }
        let parts: Vec<String> = self.cones.iter().map(|c| c.to_string()).collect();
        write!(f, "{}", parts.join(" u "))
    }
}

fn merge_intervals(mut parts: Vec<Interval>) -> Vec<Interval> {
    parts.retain(|iv| !iv.is_empty());
    parts.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
    let mut out: Vec<Interval> = Vec::new();
    for iv in parts {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi + 1e-12 => {
                if iv.hi > last.hi {
                    last.hi = iv.hi;
                }
            }
            _ => out.push(iv),
        }
    }
    out
}

/// The origin fiber of a monotone planar cone union is a subspace of the
/// vertical axis: the origin alone or the whole line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OriginFiber {
    Zero,
    AllReals,
}

impl fmt::Display for OriginFiber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OriginFiber::Zero => write!(f, "{{0}}"),
            OriginFiber::AllReals => write!(f, "R"),
        }
    }
}

/// The set difference closure `(R+ u R-) - (R+ u R-)` of the two
/// graphical-derivative rays, computed as the union of the four pairwise
/// Minkowski differences and canonicalized.
pub fn ray_minkowski_difference(pair: SlopePair) -> PlanarConeUnion {
    let dn = pair.ne.ne_dir();
    let ds = pair.sw.sw_dir();
    let mut cones = vec![
        Cone2::Line(dn),       // R+ - R+
        Cone2::Line(neg(ds)),  // R- - R-
    ];
    // R+ - R- spans the northeast ray and the negated southwest ray
    cones.push(ne_span(dn, neg(ds)));
    // and its reflection R- - R+
    cones.push(match ne_span(dn, neg(ds)) {
        Cone2::Ray(d) => Cone2::Ray(neg(d)),
        Cone2::Wedge(d0, d1) => Cone2::Wedge(neg(d0), neg(d1)),
        Cone2::Line(d) => Cone2::Line(d),
    });
    PlanarConeUnion::from_cones(cones)
}

/// Convex cone spanned by two northeast directions.
fn ne_span(a: [f64; 2], b: [f64; 2]) -> Cone2 {
    let c = cross(a, b);
    if c.abs() <= 1e-15 {
        Cone2::Ray(a)
    } else if c > 0.0 {
        Cone2::Wedge(a, b)
    } else {
        Cone2::Wedge(b, a)
    }
}

/// Graph of the strict derivative from the local slope pair: the line with
/// the common slope, or both lines plus the wedge between them and its
/// reflection.
pub fn strict_graph_from_slopes(pair: SlopePair) -> PlanarConeUnion {
    if pair.sw == pair.ne {
        return PlanarConeUnion::line(pair.ne.ne_dir());
    }
    let dn = pair.ne.ne_dir();
    let dsn = neg(pair.sw.sw_dir());
    let wedge = ne_span(dn, dsn);
    let mirror = match wedge {
        Cone2::Ray(d) => Cone2::Ray(neg(d)),
        Cone2::Wedge(d0, d1) => Cone2::Wedge(neg(d0), neg(d1)),
        Cone2::Line(d) => Cone2::Line(d),
    };
    PlanarConeUnion::from_cones(vec![
        Cone2::Line(dn),
        Cone2::Line(dsn),
        wedge,
        mirror,
    ])
}

/// Graph of the coderivative from the local slope pair: as the strict
/// graph but with only one wedge, oriented by which slope is bigger.
pub fn coderivative_graph_from_slopes(pair: SlopePair) -> PlanarConeUnion {
    if pair.sw == pair.ne {
        return PlanarConeUnion::line(pair.ne.ne_dir());
    }
    let dn = pair.ne.ne_dir();
    let dsn = neg(pair.sw.sw_dir());
    let wedge = ne_span(dn, dsn);
    let picked = if pair.ne.gt(&pair.sw) {
        wedge
    } else {
        match wedge {
            Cone2::Ray(d) => Cone2::Ray(neg(d)),
            Cone2::Wedge(d0, d1) => Cone2::Wedge(neg(d0), neg(d1)),
            Cone2::Line(d) => Cone2::Line(d),
        }
    };
    PlanarConeUnion::from_cones(vec![Cone2::Line(dn), Cone2::Line(dsn), picked])
}

/// Graph of the ordinary graphical derivative: the northeast and
/// southwest rays (a full line at interior points).
pub fn graphical_graph_from_slopes(pair: SlopePair) -> PlanarConeUnion {
    PlanarConeUnion::from_cones(vec![
        Cone2::Ray(pair.ne.ne_dir()),
        Cone2::Ray(pair.sw.sw_dir()),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corner() -> SlopePair {
        SlopePair {
            sw: Slope::Finite(0.0),
            ne: Slope::Infinite,
        }
    }

    fn quadrants() -> PlanarConeUnion {
        PlanarConeUnion::from_cones(vec![
            Cone2::Wedge([1.0, 0.0], [0.0, 1.0]),
            Cone2::Wedge([-1.0, 0.0], [0.0, -1.0]),
        ])
    }

    #[test]
    fn graphical_at_corner_is_two_rays() {
        let g = graphical_graph_from_slopes(corner());
        assert_eq!(
            g.cones(),
            &[Cone2::Ray([0.0, 1.0]), Cone2::Ray([-1.0, 0.0])]
        );
    }

    #[test]
    fn graphical_in_segment_interior_is_a_line() {
        let pair = SlopePair {
            sw: Slope::Infinite,
            ne: Slope::Infinite,
        };
        let g = graphical_graph_from_slopes(pair);
        assert_eq!(g.cones(), &[Cone2::Line([0.0, 1.0])]);
    }

    #[test]
    fn strict_at_corner_is_both_quadrants() {
        // the axes are absorbed into the two quadrant wedges
        let g = strict_graph_from_slopes(corner());
        assert_eq!(g, quadrants());
    }

    #[test]
    fn strict_equal_slopes_is_a_line() {
        let pair = SlopePair {
            sw: Slope::Finite(1.0),
            ne: Slope::Finite(1.0),
        };
        let g = strict_graph_from_slopes(pair);
        assert_eq!(g.cones().len(), 1);
        assert!(matches!(g.cones()[0], Cone2::Line(_)));
    }

    #[test]
    fn minkowski_difference_equal_slopes() {
        let pair = SlopePair {
            sw: Slope::Finite(1.0),
            ne: Slope::Finite(1.0),
        };
        let g = ray_minkowski_difference(pair);
        assert_eq!(g, strict_graph_from_slopes(pair));
    }

    #[test]
    fn minkowski_difference_corner() {
        assert_eq!(ray_minkowski_difference(corner()), quadrants());
    }

    #[test]
    fn minkowski_difference_kink() {
        // slopes (0, 1): two lines plus the two wedges between them
        let pair = SlopePair {
            sw: Slope::Finite(0.0),
            ne: Slope::Finite(1.0),
        };
        let g = ray_minkowski_difference(pair);
        assert_eq!(g, strict_graph_from_slopes(pair));
        // the point (2, 1) lies between the slopes, (2, -1) does not
        assert!(g.contains([2.0, 1.0], 1e-12));
        assert!(g.contains([-2.0, -1.0], 1e-12));
        assert!(!g.contains([2.0, -1.0], 1e-6));
    }

    #[test]
    fn coderivative_keeps_upper_wedge_at_corner() {
        let g = coderivative_graph_from_slopes(corner());
        // axes plus the nonnegative quadrant only
        assert!(g.contains([1.0, 1.0], 1e-12));
        assert!(!g.contains([-1.0, -1.0], 1e-6));
        assert!(g.contains([-1.0, 0.0], 1e-12));
        assert!(g.contains([0.0, -1.0], 1e-12));
    }

    #[test]
    fn symmetry_of_strict_graph() {
        for pair in [
            corner(),
            SlopePair {
                sw: Slope::Finite(0.5),
                ne: Slope::Finite(2.0),
            },
        ] {
            let g = strict_graph_from_slopes(pair);
            assert_eq!(g, g.negated());
        }
    }

    #[test]
    fn origin_fibers() {
        assert_eq!(quadrants().origin_fiber(), OriginFiber::AllReals);
        assert_eq!(
            PlanarConeUnion::line([0.0, 1.0]).origin_fiber(),
            OriginFiber::AllReals
        );
        assert_eq!(
            PlanarConeUnion::line([1.0, 0.0]).origin_fiber(),
            OriginFiber::Zero
        );
    }

    #[test]
    fn fiber_slicing() {
        // quadrant pair sliced at s = 1: t in [0, inf)
        let f = quadrants().fiber_at(1.0);
        assert_eq!(f, vec![Interval::new(0.0, f64::INFINITY)]);
        // vertical line sliced away from 0 is empty
        assert!(PlanarConeUnion::line([0.0, 1.0]).fiber_at(1.0).is_empty());
    }
}
