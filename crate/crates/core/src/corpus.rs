//! Curated desk-scale problems and random instance generators shared by
//! the test suite, the acceptance gate, and the benchmarks.

use rand::Rng;

use crate::plq::{PlqPiece, UnivariatePlq};
use crate::poly::Polynomial;
use crate::problem::{GnlpProblem, KktPoint};

/// A curated problem with its reference KKT pair and the expected verdict.
#[derive(Clone, Debug)]
pub struct CorpusProblem {
    pub name: &'static str,
    pub problem: GnlpProblem,
    pub kkt: KktPoint,
    /// Expected outcome of the strict-derivative criterion and, on the
    /// curated suite, of the sampling experiment.
    pub expect_stable: bool,
    /// Variational sufficiency holds by construction (convex data or a
    /// certified second-order condition).
    pub varsuff_by_construction: bool,
}

fn poly(n: usize, terms: &[(f64, &[u32])]) -> Polynomial {
    Polynomial::new(n, terms.iter().map(|(c, e)| (*c, e.to_vec())).collect()).unwrap()
}

fn build(
    name: &'static str,
    n: usize,
    objective: Polynomial,
    constraints: Vec<Polynomial>,
    outer: Vec<UnivariatePlq>,
    x: Vec<f64>,
    y: Vec<f64>,
    expect_stable: bool,
) -> CorpusProblem {
    let problem = GnlpProblem::new(n, objective, constraints, outer).unwrap();
    let kkt = KktPoint::at_base(&problem, x, y).unwrap();
    assert!(
        kkt.is_admissible(1e-9),
        "{name}: reference pair has residual {}",
        kkt.residual
    );
    CorpusProblem {
        name,
        problem,
        kkt,
        expect_stable,
        varsuff_by_construction: true,
    }
}

/// Half-space toy problem: `min x^2/2` subject to `x <= 0`, degenerate
/// corner at the origin.  Stable.
pub fn p1() -> CorpusProblem {
    build(
        "p1-degenerate-corner",
        1,
        poly(1, &[(0.5, &[2])]),
        vec![poly(1, &[(1.0, &[1])])],
        vec![UnivariatePlq::indicator_le_zero()],
        vec![0.0],
        vec![0.0],
        true,
    )
}

/// Duplicate equality constraints: `min x^2/2` subject to `x = 0` twice.
/// The multiplier is a whole segment; not stable.
pub fn p2() -> CorpusProblem {
    build(
        "p2-duplicate-equality",
        1,
        poly(1, &[(0.5, &[2])]),
        vec![poly(1, &[(1.0, &[1])]), poly(1, &[(1.0, &[1])])],
        vec![UnivariatePlq::indicator_zero(), UnivariatePlq::indicator_zero()],
        vec![0.0],
        vec![0.0, 0.0],
        false,
    )
}

/// Unconstrained quartic `min x^4`: the solution map has unbounded
/// difference quotients at the origin.  Not stable.
pub fn quartic() -> CorpusProblem {
    build(
        "quartic-flat-minimum",
        1,
        poly(1, &[(1.0, &[4])]),
        vec![],
        vec![],
        vec![0.0],
        vec![],
        false,
    )
}

/// Strongly convex unconstrained quadratic.  Stable.
pub fn unconstrained_quadratic() -> CorpusProblem {
    build(
        "unconstrained-quadratic",
        1,
        poly(1, &[(0.5, &[2])]),
        vec![],
        vec![],
        vec![0.0],
        vec![],
        true,
    )
}

/// Two-dimensional problem with one strictly complementary active
/// inequality.  Stable.
pub fn active_inequality_2d() -> CorpusProblem {
    // f0 = |x|^2/2 - x1, constraint x1 <= 0 active with multiplier 1
    build(
        "active-inequality-2d",
        2,
        poly(2, &[(0.5, &[2, 0]), (0.5, &[0, 2]), (-1.0, &[1, 0])]),
        vec![poly(2, &[(1.0, &[1, 0])])],
        vec![UnivariatePlq::indicator_le_zero()],
        vec![0.0, 0.0],
        vec![1.0],
        true,
    )
}

/// Two-dimensional degenerate inequality (zero multiplier at contact).
/// Stable: the quadrant coupling still forces only the zero direction.
pub fn degenerate_inequality_2d() -> CorpusProblem {
    build(
        "degenerate-inequality-2d",
        2,
        poly(2, &[(0.5, &[2, 0]), (0.5, &[0, 2])]),
        vec![poly(2, &[(1.0, &[1, 0]), (1.0, &[0, 1])])],
        vec![UnivariatePlq::indicator_le_zero()],
        vec![0.0, 0.0],
        vec![0.0],
        true,
    )
}

/// Soft absolute-value penalty `min x^2/2 + |x|`: a kink with the base
/// multiplier interior to the vertical segment.  Stable.
pub fn abs_penalty() -> CorpusProblem {
    build(
        "abs-penalty-kink",
        1,
        poly(1, &[(0.5, &[2])]),
        vec![poly(1, &[(1.0, &[1])])],
        vec![UnivariatePlq::abs()],
        vec![0.0],
        vec![0.0],
        true,
    )
}

/// Quadratic outer penalty `min x^2/2 + (x-1)^2/2` written with the
/// penalty in the outer term; the reference point sits on a smooth piece.
/// Stable.
pub fn quadratic_penalty() -> CorpusProblem {
    build(
        "quadratic-penalty-smooth",
        1,
        poly(1, &[(0.5, &[2])]),
        vec![poly(1, &[(1.0, &[1]), (-1.0, &[0])])],
        vec![UnivariatePlq::quadratic(1.0)],
        vec![0.5],
        vec![-0.5],
        true,
    )
}

/// Stable quartic-plus-quadratic objective.  Stable.
pub fn convex_quartic() -> CorpusProblem {
    build(
        "convex-quartic",
        1,
        poly(1, &[(1.0, &[2]), (1.0, &[4])]),
        vec![],
        vec![],
        vec![0.0],
        vec![],
        true,
    )
}

/// Redundant copies of one active inequality: primal solutions stay
/// unique but the multiplier splits along a segment.  Not stable.
pub fn redundant_inequalities() -> CorpusProblem {
    // f0 = |x|^2/2 - x1 with x1 <= 0 twice; multipliers sum to 1
    build(
        "redundant-inequalities",
        2,
        poly(2, &[(0.5, &[2, 0]), (0.5, &[0, 2]), (-1.0, &[1, 0])]),
        vec![poly(2, &[(1.0, &[1, 0])]), poly(2, &[(1.0, &[1, 0])])],
        vec![
            UnivariatePlq::indicator_le_zero(),
            UnivariatePlq::indicator_le_zero(),
        ],
        vec![0.0, 0.0],
        vec![0.5, 0.5],
        false,
    )
}

/// The curated stability suite: variational sufficiency holds by
/// construction in every entry (convex data throughout).
pub fn curated() -> Vec<CorpusProblem> {
    vec![
        p1(),
        p2(),
        quartic(),
        unconstrained_quadratic(),
        active_inequality_2d(),
        degenerate_inequality_2d(),
        abs_penalty(),
        quadratic_penalty(),
        convex_quartic(),
        redundant_inequalities(),
    ]
}

/// Random valid convex PLQ function: monotone derivative data generated
/// left to right, constants chained for continuity.
pub fn random_plq<R: Rng>(rng: &mut R) -> UnivariatePlq {
    let n_pieces = rng.gen_range(1..=4);
    // breakpoints
    let mut breaks: Vec<f64> = (0..n_pieces - 1)
        .map(|_| rng.gen_range(-2.5..2.5))
        .collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 0.25);
    let left_infinite = rng.gen_bool(0.4);
    let right_infinite = rng.gen_bool(0.4);
    let lo = if left_infinite {
        f64::NEG_INFINITY
    } else {
        breaks.first().copied().unwrap_or(0.0) - rng.gen_range(0.5..2.0)
    };
    let hi = if right_infinite {
        f64::INFINITY
    } else {
        breaks.last().copied().unwrap_or(0.0) + rng.gen_range(0.5..2.0)
    };
    let mut edges = vec![lo];
    edges.extend(breaks.iter().copied());
    edges.push(hi);

    // a point domain occasionally
    if n_pieces == 1 && rng.gen_bool(0.15) {
        let a = rng.gen_range(-2.0..2.0);
        return UnivariatePlq::new(vec![PlqPiece::new(a, a, 0.0, 0.0, rng.gen_range(-1.0..1.0))])
            .unwrap();
    }

    let mut pieces = Vec::new();
    let mut deriv_in = rng.gen_range(-2.0..0.5);
    let mut value_in = rng.gen_range(-1.0..1.0);
    for k in 0..edges.len() - 1 {
        let (a, b) = (edges[k], edges[k + 1]);
        let quad = if rng.gen_bool(0.45) {
            0.0
        } else {
            rng.gen_range(0.2..2.0)
        };
        let jump = if k == 0 || rng.gen_bool(0.5) {
            0.0
        } else {
            rng.gen_range(0.1..1.5)
        };
        let d_start = deriv_in + jump;
        // anchor the linear coefficient at a finite point of the piece
        let anchor = if a.is_finite() {
            a
        } else if b.is_finite() {
            b
        } else {
            0.0
        };
        let lin = d_start - quad * anchor;
        let mut piece = PlqPiece::new(a, b, quad, lin, 0.0);
        piece.constant = value_in - piece.value(anchor) + piece.constant;
        // recompute chained values at the right edge
        if b.is_finite() {
            deriv_in = piece.derivative(b);
            value_in = piece.value(b);
        }
        pieces.push(piece);
    }
    UnivariatePlq::new(pieces).expect("generator output must validate")
}

/// Samples points of the subgradient graph of `g`, mixing curve interior
/// points with exact vertices.
pub fn graph_points<R: Rng>(
    g: &UnivariatePlq,
    rng: &mut R,
    count: usize,
) -> Vec<[f64; 2]> {
    let graph = crate::graph::SubgradientGraph1D::of(g);
    let mut out = Vec::with_capacity(count);
    let verts = graph.vertices().to_vec();
    for _ in 0..count {
        if rng.gen_bool(0.35) {
            out.push(verts[rng.gen_range(0..verts.len())]);
        } else {
            let tau = rng.gen_range(-4.0..4.0);
            out.push(graph.point_at(tau));
        }
    }
    out
}


/// Test oracle for the cone feasibility decision: planted dyadic systems
/// and an exhaustive grid enumeration, independent of the simplex path.
pub mod cone_systems {
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    use crate::cone::{
        coderivative_graph_from_slopes, strict_graph_from_slopes, PlanarConeUnion, Slope,
        SlopePair,
    };
    use crate::feasibility::{ConeCoupling, ConeSelectionSystem};

    pub fn quadrant_pair() -> PlanarConeUnion {
        strict_graph_from_slopes(SlopePair {
            sw: Slope::Finite(0.0),
            ne: Slope::Infinite,
        })
    }

    fn random_union(rng: &mut ChaCha8Rng) -> PlanarConeUnion {
        let slopes = [Slope::Finite(0.0), Slope::Finite(1.0), Slope::Infinite];
        let sw = slopes[rng.gen_range(0..3)];
        let ne = slopes[rng.gen_range(0..3)];
        let pair = SlopePair { sw, ne };
        if rng.gen_bool(0.5) {
            strict_graph_from_slopes(pair)
        } else {
            coderivative_graph_from_slopes(pair)
        }
    }

    /// System with a planted dyadic witness: equality rows exactly
    /// orthogonal to it, coupling pairs inside the quadrant union.
    pub fn planted_nonzero(rng: &mut ChaCha8Rng) -> ConeSelectionSystem {
        let nx = rng.gen_range(1..=2usize);
        let nc = rng.gen_range(1..=2usize);
        let n = nx + nc;
        let mut w: Vec<f64> = Vec::new();
        loop {
            w.clear();
            for _ in 0..nx {
                w.push(rng.gen_range(-8i64..=8) as f64 / 8.0);
            }
            if w.iter().any(|v| v.abs() == 1.0) {
                break;
            }
        }
        let mut couplings = Vec::new();
        for i in 0..nc {
            let mut first = vec![0.0; n];
            for f in first.iter_mut().take(nx) {
                *f = rng.gen_range(-2i64..=2) as f64;
            }
            let a: f64 = first[..nx].iter().zip(&w).map(|(f, x)| f * x).sum();
            let y = if a == 0.0 {
                rng.gen_range(-4i64..=4) as f64 / 8.0
            } else {
                a.signum() * rng.gen_range(0i64..=4) as f64 / 8.0
            };
            w.push(y);
            let mut second = vec![0.0; n];
            second[nx + i] = 1.0;
            couplings.push(ConeCoupling {
                first,
                second,
                graph: quadrant_pair(),
            });
        }
        let scaled: Vec<f64> = w.iter().map(|v| v * 8.0).collect();
        let n_rows = rng.gen_range(0..=2usize);
        let mut equalities = Vec::new();
        for _ in 0..n_rows {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i == j {
                continue;
            }
            let mut row = vec![0.0; n];
            row[i] = scaled[j];
            row[j] = -scaled[i];
            if row.iter().any(|v| *v != 0.0) {
                equalities.push(row);
            }
        }
        ConeSelectionSystem {
            dim: n,
            equalities,
            couplings,
            fixed: Vec::new(),
        }
    }

    /// System whose equality matrix has full column rank: only the zero
    /// solution, whatever the cones say.
    pub fn planted_only_zero(rng: &mut ChaCha8Rng) -> ConeSelectionSystem {
        let n = rng.gen_range(2..=4usize);
        let equalities: Vec<Vec<f64>> = loop {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(-2i64..=2) as f64).collect())
                .collect();
            let mat = crate::linalg::Mat::from_rows(&rows);
            let (rank, _) = crate::linalg::rank_and_nullspace(&mat, 1e-10);
            if rank == n {
                break rows;
            }
        };
        let couplings = (0..n.min(2))
            .map(|i| {
                let mut first = vec![0.0; n];
                first[0] = rng.gen_range(-2i64..=2) as f64;
                let mut second = vec![0.0; n];
                second[n - 1 - i] = 1.0;
                ConeCoupling {
                    first,
                    second,
                    graph: random_union(rng),
                }
            })
            .collect();
        ConeSelectionSystem {
            dim: n,
            equalities,
            couplings,
            fixed: Vec::new(),
        }
    }

    /// Exhaustive enumeration of the max-norm unit sphere, step 1/32.
    /// Exact on dyadic data; independent of the simplex decision.
    pub fn grid_oracle(system: &ConeSelectionSystem) -> Option<Vec<f64>> {
        let n = system.dim;
        let steps = 65i64;
        let mut index = vec![0i64; n];
        loop {
            let z: Vec<f64> = index.iter().map(|k| (k - 32) as f64 / 32.0).collect();
            if z.iter().map(|v| v.abs()).fold(0.0f64, f64::max) == 1.0 {
                let feasible = system.equalities.iter().all(|row| {
                    row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>().abs() <= 1e-9
                }) && system.fixed.iter().all(|&j| z[j] == 0.0)
                    && system.couplings.iter().all(|c| {
                        let p = [
                            c.first.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>(),
                            c.second.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>(),
                        ];
                        c.graph.contains(p, 1e-9)
                    });
                if feasible {
                    return Some(z);
                }
            }
            let mut axis = 0;
            loop {
                if axis == n {
                    return None;
                }
                index[axis] += 1;
                if index[axis] < steps {
                    break;
                }
                index[axis] = 0;
                axis += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn curated_pairs_are_admissible() {
        for c in curated() {
            assert!(c.kkt.is_admissible(1e-9), "{}", c.name);
        }
    }

    #[test]
    fn random_plqs_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let g = random_plq(&mut rng);
            assert!(crate::plq::plq_validate(g.pieces()).is_empty());
        }
    }

    #[test]
    fn graph_points_live_on_the_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..30 {
            let g = random_plq(&mut rng);
            let graph = crate::graph::SubgradientGraph1D::of(&g);
            for p in graph_points(&g, &mut rng, 50) {
                assert!(graph.distance(p) < 1e-12);
            }
        }
    }
}
