//! Derivative and coderivative cone graphs of a univariate convex PLQ
//! subgradient mapping at a point of its graph.
//!
//! All three graphs are determined by the pair of slopes with which the
//! monotone curve leaves the base point: the graphical derivative is the
//! two rays, the strict derivative fills in the wedges between the two
//! lines, and the coderivative keeps exactly one wedge.

use crate::cone::{
    coderivative_graph_from_slopes, graphical_graph_from_slopes, strict_graph_from_slopes,
    PlanarConeUnion, SlopePair,
};
use crate::error::{Error, Result};
use crate::graph::SubgradientGraph1D;
use crate::plq::UnivariatePlq;
use crate::tol::GRAPH_SNAP_TOL;

fn slopes(graph: &SubgradientGraph1D, u: f64, y: f64, tol: f64) -> Result<SlopePair> {
    graph
        .slopes_at([u, y], tol)
        .map(|(pair, _)| pair)
        .map_err(|distance| Error::OffGraph {
            u,
            y,
            distance,
            tolerance: tol,
        })
}

/// Slopes of the subgradient graph leaving `(u, y)` southwest and
/// northeast.  The point is snapped to the graph within the default
/// tolerance; farther points are rejected with their distance.
pub fn local_slopes(g: &UnivariatePlq, u: f64, y: f64) -> Result<SlopePair> {
    slopes(&SubgradientGraph1D::of(g), u, y, GRAPH_SNAP_TOL)
}

/// Graph of the graphical derivative of the subgradient mapping at
/// `(u, y)`: the northeast and southwest rays.
pub fn graphical_derivative_graph(g: &UnivariatePlq, u: f64, y: f64) -> Result<PlanarConeUnion> {
    Ok(graphical_graph_from_slopes(local_slopes(g, u, y)?))
}

/// Graph of the strict graphical derivative at `(u, y)`.
pub fn strict_derivative_graph(g: &UnivariatePlq, u: f64, y: f64) -> Result<PlanarConeUnion> {
    Ok(strict_graph_from_slopes(local_slopes(g, u, y)?))
}

/// Graph of the coderivative at `(u, y)`.
pub fn coderivative_graph(g: &UnivariatePlq, u: f64, y: f64) -> Result<PlanarConeUnion> {
    Ok(coderivative_graph_from_slopes(local_slopes(g, u, y)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{ray_minkowski_difference, Cone2, OriginFiber, Slope};
    use crate::plq::PlqPiece;

    fn kinked_derivative() -> UnivariatePlq {
        // g'(u) = max(u, 0)
        UnivariatePlq::new(vec![
            PlqPiece::new(f64::NEG_INFINITY, 0.0, 0.0, 0.0, 0.0),
            PlqPiece::new(0.0, f64::INFINITY, 1.0, 0.0, 0.0),
        ])
        .unwrap()
    }

    #[test]
    fn local_slopes_examples() {
        let g = UnivariatePlq::indicator_le_zero();
        let pair = local_slopes(&g, 0.0, 0.0).unwrap();
        assert_eq!((pair.sw, pair.ne), (Slope::Finite(0.0), Slope::Infinite));

        let q = UnivariatePlq::quadratic(1.0);
        let pair = local_slopes(&q, -1.5, -1.5).unwrap();
        assert_eq!((pair.sw, pair.ne), (Slope::Finite(1.0), Slope::Finite(1.0)));

        let k = kinked_derivative();
        let pair = local_slopes(&k, 0.0, 0.0).unwrap();
        assert_eq!((pair.sw, pair.ne), (Slope::Finite(0.0), Slope::Finite(1.0)));
    }

    #[test]
    fn off_graph_is_an_error() {
        let g = UnivariatePlq::indicator_le_zero();
        let err = local_slopes(&g, 0.0, -1.0).unwrap_err();
        match err {
            Error::OffGraph { distance, .. } => assert!((distance - 1.0).abs() < 1e-12),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn graphical_graph_examples() {
        let g = UnivariatePlq::indicator_le_zero();
        // corner: northeast vertical ray plus southwest horizontal ray
        let corner = graphical_derivative_graph(&g, 0.0, 0.0).unwrap();
        assert_eq!(
            corner.cones(),
            &[Cone2::Ray([0.0, 1.0]), Cone2::Ray([-1.0, 0.0])]
        );
        // strongly active: interior of the vertical segment is the full axis
        let active = graphical_derivative_graph(&g, 0.0, 1.0).unwrap();
        assert_eq!(active.cones(), &[Cone2::Line([0.0, 1.0])]);
        // inactive: interior of the horizontal segment
        let inactive = graphical_derivative_graph(&g, -1.0, 0.0).unwrap();
        assert_eq!(inactive.cones(), &[Cone2::Line([1.0, 0.0])]);
    }

    #[test]
    fn strict_graph_examples() {
        let g = UnivariatePlq::indicator_le_zero();
        let corner = strict_derivative_graph(&g, 0.0, 0.0).unwrap();
        let quadrants = PlanarConeUnion::from_cones(vec![
            Cone2::Wedge([1.0, 0.0], [0.0, 1.0]),
            Cone2::Wedge([-1.0, 0.0], [0.0, -1.0]),
        ]);
        assert_eq!(corner, quadrants);

        let q = UnivariatePlq::quadratic(1.0);
        let line = strict_derivative_graph(&q, 2.0, 2.0).unwrap();
        assert_eq!(line.cones().len(), 1);

        // derivative kink: lines of slope 0 and 1 plus both wedges between
        let k = strict_derivative_graph(&kinked_derivative(), 0.0, 0.0).unwrap();
        let expected = ray_minkowski_difference(SlopePair {
            sw: Slope::Finite(0.0),
            ne: Slope::Finite(1.0),
        });
        assert_eq!(k, expected);
        assert!(k.contains([2.0, 1.0], 1e-12));
        assert!(k.contains([-2.0, -1.0], 1e-12));
        assert!(!k.contains([1.0, 2.0], 1e-6));
    }

    // Independent oracle for the coderivative: limiting normals to the
    // graph.  Regular normals along each smooth branch sweep the
    // perpendicular line; at the corner the regular normal cone is the
    // polar of the tangent cone.  Graph points are recovered by mapping
    // each normal (a, b) to (-b, a).
    fn coderivative_via_limiting_normals(pair: SlopePair) -> PlanarConeUnion {
        fn rot90(v: [f64; 2]) -> [f64; 2] {
            [-v[1], v[0]]
        }
        fn neg(v: [f64; 2]) -> [f64; 2] {
            [-v[0], -v[1]]
        }
        fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
            a[0] * b[0] + a[1] * b[1]
        }
        fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
            a[0] * b[1] - a[1] * b[0]
        }
        let dn = pair.ne.ne_dir();
        let ds = pair.sw.sw_dir();
        // branch normals map back onto the branch lines
        let mut cones = vec![Cone2::Line(dn), Cone2::Line(neg(ds))];
        if pair.sw != pair.ne {
            // polar of the tangent cone R+ u R-
            let cands = [
                rot90(dn),
                neg(rot90(dn)),
                rot90(ds),
                neg(rot90(ds)),
            ];
            let feas: Vec<[f64; 2]> = cands
                .into_iter()
                .filter(|n| dot(*n, dn) <= 1e-12 && dot(*n, ds) <= 1e-12)
                .collect();
            assert_eq!(feas.len(), 2, "corner polar has two boundary rays");
            let (a, b) = (feas[0], feas[1]);
            let polar = if cross(a, b) > 0.0 {
                Cone2::Wedge(a, b)
            } else {
                Cone2::Wedge(b, a)
            };
            // map (v', -x') in N to (x', v')
            let mapped = match polar {
                Cone2::Wedge(d0, d1) => Cone2::Wedge(rot90(d0), rot90(d1)),
                other => other,
            };
            cones.push(mapped);
        }
        PlanarConeUnion::from_cones(cones)
    }

    #[test]
    fn coderivative_examples_match_limiting_normal_oracle() {
        let g = UnivariatePlq::indicator_le_zero();
        let corner = coderivative_graph(&g, 0.0, 0.0).unwrap();
        // axes plus the nonnegative quadrant
        let oracle = coderivative_via_limiting_normals(SlopePair {
            sw: Slope::Finite(0.0),
            ne: Slope::Infinite,
        });
        assert_eq!(corner, oracle);
        assert!(corner.contains([1.0, 1.0], 1e-12));
        assert!(!corner.contains([-1.0, -1.0], 1e-6));

        // segment interior: same line as the strict graph
        let interior = coderivative_graph(&g, -2.0, 0.0).unwrap();
        assert_eq!(interior, strict_derivative_graph(&g, -2.0, 0.0).unwrap());

        // derivative kink keeps only the wedge between the slopes northeast
        let k = coderivative_graph(&kinked_derivative(), 0.0, 0.0).unwrap();
        let oracle = coderivative_via_limiting_normals(SlopePair {
            sw: Slope::Finite(0.0),
            ne: Slope::Finite(1.0),
        });
        assert_eq!(k, oracle);
        assert!(k.contains([2.0, 1.0], 1e-12));
        assert!(!k.contains([-2.0, -1.0], 1e-6));
    }

    #[test]
    fn coderivative_orientation_flips_with_the_bigger_slope() {
        // sw slope bigger: the southwest wedge survives
        let pair = SlopePair {
            sw: Slope::Infinite,
            ne: Slope::Finite(0.0),
        };
        let ours = coderivative_graph_from_slopes(pair);
        let oracle = coderivative_via_limiting_normals(pair);
        assert_eq!(ours, oracle);
        assert!(ours.contains([-1.0, -1.0], 1e-12));
        assert!(!ours.contains([1.0, 1.0], 1e-6));
    }

    use crate::cone::coderivative_graph_from_slopes;

    #[test]
    fn origin_fiber_examples() {
        let g = UnivariatePlq::indicator_le_zero();
        let strict = strict_derivative_graph(&g, 0.0, 0.0).unwrap();
        assert_eq!(strict.origin_fiber(), OriginFiber::AllReals);
        assert_eq!(
            PlanarConeUnion::line([0.0, 1.0]).origin_fiber(),
            OriginFiber::AllReals
        );
        assert_eq!(
            PlanarConeUnion::line([1.0, 0.0]).origin_fiber(),
            OriginFiber::Zero
        );
    }
}
