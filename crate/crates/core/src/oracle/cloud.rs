//! Difference-quotient sampling of strict derivative cones.
//!
//! Each sample picks a graph point near the base, a step size from the
//! descending grid, and a direction; when the stepped argument still meets
//! the graph, the normalized secant is recorded.  Sampling radii are tied
//! to the step and capped by the distance to the nearest other graph
//! vertex, inside which the graph coincides with its tangent cone and
//! secants are exact cone directions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cone::PlanarConeUnion;
use crate::error::{Error, Result};
use crate::exec::{self, Mode};
use crate::graph::SubgradientGraph1D;
use crate::plq::UnivariatePlq;

/// Per-sample provenance.
#[derive(Clone, Copy, Debug)]
pub struct SampleMeta {
    /// Difference-quotient step.
    pub t: f64,
    /// Distance of the sampled base point from the spec base point.
    pub perturbation: f64,
}

/// Unit directions in the product space, with provenance.
#[derive(Clone, Debug)]
pub struct DirectionCloud {
    pub points: Vec<Vec<f64>>,
    pub meta: Vec<SampleMeta>,
}

impl DirectionCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct CloudSpec<'a> {
    pub plq: &'a UnivariatePlq,
    pub base: [f64; 2],
    pub t_grid: Vec<f64>,
    pub perturbation_radius: f64,
    pub count: usize,
    pub seed: u64,
}

/// Samples the strict-derivative cone cloud, in parallel when available.
pub fn sample_strict_derivative_cloud(spec: &CloudSpec) -> Result<DirectionCloud> {
    sample_cloud_mode(spec, Mode::Auto)
}

/// Sequential twin kept for the fallback build and benchmarks.
pub fn sample_strict_derivative_cloud_sequential(spec: &CloudSpec) -> Result<DirectionCloud> {
    sample_cloud_mode(spec, Mode::Sequential)
}

fn sample_cloud_mode(spec: &CloudSpec, mode: Mode) -> Result<DirectionCloud> {
    if spec.t_grid.is_empty() || spec.t_grid.iter().any(|t| *t <= 0.0) {
        return Err(Error::Invalid("step grid must be positive".into()));
    }
    let graph = SubgradientGraph1D::of(spec.plq);
    let (base_tau, base_pt, base_dist) = graph.nearest(spec.base);
    if base_dist > 1e-9 {
        return Err(Error::OffGraph {
            u: spec.base[0],
            y: spec.base[1],
            distance: base_dist,
            tolerance: 1e-9,
        });
    }
    let locality = graph.locality_radius(base_pt);
    let samples = exec::indexed_map_mode(mode, spec.count, |index| {
        sample_one(spec, &graph, base_tau, base_pt, locality, index)
    });
    let mut points = Vec::new();
    let mut meta = Vec::new();
    for s in samples.into_iter().flatten() {
        points.push(vec![s.0[0], s.0[1]]);
        meta.push(s.1);
    }
    Ok(DirectionCloud { points, meta })
}

fn within_locality(base: [f64; 2], point: [f64; 2], cap: f64) -> bool {
    if !cap.is_finite() {
        return true;
    }
    let d = ((point[0] - base[0]).powi(2) + (point[1] - base[1]).powi(2)).sqrt();
    d <= 2.0 * cap
}

fn sample_one(
    spec: &CloudSpec,
    graph: &SubgradientGraph1D,
    base_tau: f64,
    base_pt: [f64; 2],
    locality: f64,
    index: usize,
) -> Option<([f64; 2], SampleMeta)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64 + 1);
    let cap = if locality.is_finite() {
        locality / 4.0
    } else {
        f64::INFINITY
    };
    for _attempt in 0..6 {
        let t = spec.t_grid[rng.gen_range(0..spec.t_grid.len())];
        let radius = spec.perturbation_radius.min(10.0 * t).min(cap);
        // base point: snapped vertex sometimes, otherwise arc-uniform
        let p = if rng.gen_bool(0.3) {
            let verts = graph.vertices_near(base_pt, radius + 1e-15);
            if verts.is_empty() {
                graph.sample_arc(&mut rng, base_tau, radius)
            } else {
                verts[rng.gen_range(0..verts.len())]
            }
        } else {
            graph.sample_arc(&mut rng, base_tau, radius)
        };
        // direction: pure outer moves, vertex-aimed steps, or continuous
        let x_cap = if cap.is_finite() { (2.0 * cap / t).min(20.0) } else { 20.0 };
        if rng.gen_bool(0.25) {
            // zero primal step: the secant runs along the outer fiber
            let u_new = p[0];
            if let Some(iv) = spec.plq.subgradient(u_new) {
                let window = (20.0 * t).min(2.0 * cap);
                let (wlo, whi) = ((p[1] - window).max(iv.lo), (p[1] + window).min(iv.hi));
                if wlo <= whi && whi > wlo {
                    let v_new = rng.gen_range(wlo..=whi);
                    let dy = (v_new - p[1]) / t;
                    if dy.abs() > 1e-12
                        && within_locality(spec.base, [u_new, v_new], cap)
                        && within_locality(spec.base, p, cap)
                    {
                        let perturbation =
                            ((p[0] - base_pt[0]).powi(2) + (p[1] - base_pt[1]).powi(2)).sqrt();
                        return Some(([0.0, dy.signum()], SampleMeta { t, perturbation }));
                    }
                }
            }
            continue;
        }
        let aimed: Option<(f64, f64)> = if rng.gen_bool(0.5) {
            let targets: Vec<f64> = graph
                .vertices_near(base_pt, 4.0 * radius + 2.0 * t * x_cap)
                .iter()
                .map(|v| v[0])
                .filter(|vu| {
                    let xp = (vu - p[0]) / t;
                    xp.abs() >= 1e-9 && xp.abs() <= x_cap
                })
                .collect();
            if targets.is_empty() {
                None
            } else {
                let vu = targets[rng.gen_range(0..targets.len())];
                Some(((vu - p[0]) / t, vu))
            }
        } else {
            None
        };
        let (x_prime, u_new) = match aimed {
            Some(pair) => pair,
            None => {
                let mag = 10f64.powf(rng.gen_range(-2.0..1.0)).min(x_cap);
                let xp = if rng.gen_bool(0.5) { mag } else { -mag };
                (xp, p[0] + t * xp)
            }
        };
        let Some(iv) = spec.plq.subgradient(u_new) else {
            continue;
        };
        // pick the partner value: endpoints or uniform in a window
        let window = (20.0 * t).min(2.0 * cap);
        let (wlo, whi) = ((p[1] - window).max(iv.lo), (p[1] + window).min(iv.hi));
        let v_new = if wlo > whi {
            if iv.lo > p[1] + window {
                iv.lo
            } else {
                iv.hi
            }
        } else {
            let r: f64 = rng.gen();
            if r < 0.3 && iv.lo.is_finite() {
                iv.lo
            } else if r < 0.6 && iv.hi.is_finite() {
                iv.hi
            } else if whi > wlo {
                rng.gen_range(wlo..=whi)
            } else {
                wlo
            }
        };
        if !v_new.is_finite() {
            continue;
        }
        // both secant endpoints must stay where the graph equals its cone
        if !within_locality(spec.base, p, cap)
            || !within_locality(spec.base, [u_new, v_new], cap)
        {
            continue;
        }
        let dy = (v_new - p[1]) / t;
        let norm = (x_prime * x_prime + dy * dy).sqrt();
        if norm < 1e-12 {
            continue;
        }
        let perturbation = ((p[0] - base_pt[0]).powi(2) + (p[1] - base_pt[1]).powi(2)).sqrt();
        return Some(([x_prime / norm, dy / norm], SampleMeta { t, perturbation }));
    }
    None
}

/// Samples through a caller-provided graph sampler, verifying its
/// on-graph contract before taking differences.
pub fn sample_cloud_with_sampler<S>(
    plq: &UnivariatePlq,
    sampler: S,
    base: [f64; 2],
    t_grid: &[f64],
    perturbation_radius: f64,
    count: usize,
    seed: u64,
) -> Result<DirectionCloud>
where
    S: Fn(&mut ChaCha8Rng, f64) -> [f64; 2] + Sync,
{
    let graph = SubgradientGraph1D::of(plq);
    let results = exec::indexed_map(count, |index| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64 + 1);
        let t = t_grid[rng.gen_range(0..t_grid.len())];
        let radius = perturbation_radius.min(10.0 * t);
        let p = sampler(&mut rng, radius);
        if graph.distance(p) > 1e-9 {
            return Some(Err(Error::SamplerContract {
                u: p[0],
                y: p[1],
                distance: graph.distance(p),
            }));
        }
        let xp: f64 = rng.gen_range(-2.0..2.0);
        let u_new = p[0] + t * xp;
        let iv = plq.subgradient(u_new)?;
        let v_new = iv.clamp(p[1]);
        let dy = (v_new - p[1]) / t;
        let norm = (xp * xp + dy * dy).sqrt();
        if norm < 1e-12 {
            return None;
        }
        let perturbation =
            ((p[0] - base[0]).powi(2) + (p[1] - base[1]).powi(2)).sqrt();
        Some(Ok((
            vec![xp / norm, dy / norm],
            SampleMeta { t, perturbation },
        )))
    });
    let mut points = Vec::new();
    let mut meta = Vec::new();
    for r in results.into_iter().flatten() {
        let (p, m) = r?;
        points.push(p);
        meta.push(m);
    }
    Ok(DirectionCloud { points, meta })
}

/// Containment report of a sampled cloud against an analytic cone union.
#[derive(Clone, Debug)]
pub struct ContainmentReport {
    pub pass: bool,
    pub outer_pass: bool,
    pub coverage_pass: bool,
    /// Worst angular distance of a cloud direction from the analytic set.
    pub max_outer_angle: f64,
    /// Worst angular gap from an analytic extreme ray to the cloud.
    pub max_coverage_gap: f64,
    pub samples: usize,
}

/// Checks that every cloud direction lies near the analytic set and that
/// every extreme ray of the analytic set is witnessed by the cloud.
pub fn containment_check(
    cloud: &DirectionCloud,
    analytic: &PlanarConeUnion,
    outer_tol: f64,
    coverage_tol: f64,
) -> ContainmentReport {
    let mut max_outer: f64 = 0.0;
    for p in &cloud.points {
        debug_assert_eq!(p.len(), 2);
        let d = analytic.distance([p[0], p[1]]).min(1.0);
        max_outer = max_outer.max(d.asin());
    }
    let mut max_gap: f64 = 0.0;
    for e in analytic.extreme_dirs() {
        let mut best = f64::INFINITY;
        for p in &cloud.points {
            let dot = (p[0] * e[0] + p[1] * e[1]).clamp(-1.0, 1.0);
            best = best.min(dot.acos());
        }
        max_gap = max_gap.max(best);
    }
    let outer_pass = max_outer <= outer_tol;
    let coverage_pass = max_gap <= coverage_tol;
    ContainmentReport {
        pass: outer_pass && coverage_pass,
        outer_pass,
        coverage_pass,
        max_outer_angle: max_outer,
        max_coverage_gap: max_gap,
        samples: cloud.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{Cone2, Slope, SlopePair};
    use crate::derive::strict_derivative_graph;
    use crate::plq::PlqPiece;

    fn grid() -> Vec<f64> {
        vec![1e-1, 1e-2, 1e-3, 1e-4]
    }

    #[test]
    fn quadratic_cloud_hugs_the_line() {
        let g = UnivariatePlq::quadratic(1.0);
        let cloud = sample_strict_derivative_cloud(&CloudSpec {
            plq: &g,
            base: [0.0, 0.0],
            t_grid: grid(),
            perturbation_radius: 1.0,
            count: 2000,
            seed: 7,
        })
        .unwrap();
        assert!(cloud.len() > 1500);
        let line = strict_derivative_graph(&g, 0.0, 0.0).unwrap();
        let report = containment_check(&cloud, &line, 1e-9, 1e-2);
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn corner_cloud_covers_both_quadrants() {
        let g = UnivariatePlq::indicator_le_zero();
        let cloud = sample_strict_derivative_cloud(&CloudSpec {
            plq: &g,
            base: [0.0, 0.0],
            t_grid: grid(),
            perturbation_radius: 1.0,
            count: 10_000,
            seed: 11,
        })
        .unwrap();
        let quadrants = strict_derivative_graph(&g, 0.0, 0.0).unwrap();
        let report = containment_check(&cloud, &quadrants, 1e-6, 1e-2);
        assert!(report.pass, "{report:?}");

        // containment against a single wedge must fail: southwest samples
        let one_wedge =
            PlanarConeUnion::from_cones(vec![Cone2::Wedge([1.0, 0.0], [0.0, 1.0])]);
        let bad = containment_check(&cloud, &one_wedge, 1e-6, 1e-2);
        assert!(!bad.outer_pass);
    }

    #[test]
    fn derivative_kink_cloud_stays_between_slopes() {
        let g = UnivariatePlq::new(vec![
            PlqPiece::new(f64::NEG_INFINITY, 0.0, 0.0, 0.0, 0.0),
            PlqPiece::new(0.0, f64::INFINITY, 1.0, 0.0, 0.0),
        ])
        .unwrap();
        let cloud = sample_strict_derivative_cloud(&CloudSpec {
            plq: &g,
            base: [0.0, 0.0],
            t_grid: grid(),
            perturbation_radius: 1.0,
            count: 10_000,
            seed: 13,
        })
        .unwrap();
        let analytic = strict_derivative_graph(&g, 0.0, 0.0).unwrap();
        let report = containment_check(&cloud, &analytic, 1e-6, 1e-2);
        assert!(report.pass, "{report:?}");
        // nothing above the slope-1 line or below its reflection
        for p in &cloud.points {
            assert!(p[1] <= p[0].abs().max(p[0]) + 1e-9 || p[0] <= 0.0);
        }
    }

    #[test]
    fn monotonicity_of_sampled_directions() {
        let mut checked = 0;
        for (seed, g) in [
            (21u64, UnivariatePlq::indicator_le_zero()),
            (22, UnivariatePlq::abs()),
            (23, UnivariatePlq::quadratic(0.5)),
        ] {
            let graph = SubgradientGraph1D::of(&g);
            let base = graph.point_at(0.0);
            let cloud = sample_strict_derivative_cloud(&CloudSpec {
                plq: &g,
                base,
                t_grid: grid(),
                perturbation_radius: 0.5,
                count: 3000,
                seed,
            })
            .unwrap();
            for p in &cloud.points {
                assert!(p[0] * p[1] >= -1e-9, "direction {p:?}");
                checked += 1;
            }
        }
        assert!(checked > 5000);
    }

    #[test]
    fn cloud_symmetry() {
        let g = UnivariatePlq::indicator_le_zero();
        let cloud = sample_strict_derivative_cloud(&CloudSpec {
            plq: &g,
            base: [0.0, 0.0],
            t_grid: grid(),
            perturbation_radius: 1.0,
            count: 10_000,
            seed: 17,
        })
        .unwrap();
        for p in cloud.points.iter().step_by(97) {
            let negated = [-p[0], -p[1]];
            let best = cloud
                .points
                .iter()
                .map(|q| {
                    let dot = (q[0] * negated[0] + q[1] * negated[1]).clamp(-1.0, 1.0);
                    dot.acos()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 1e-2, "no antipode near {p:?}: gap {best}");
        }
    }

    #[test]
    fn determinism_across_strategies() {
        let g = UnivariatePlq::abs();
        let spec = CloudSpec {
            plq: &g,
            base: [0.0, 0.0],
            t_grid: grid(),
            perturbation_radius: 0.5,
            count: 500,
            seed: 3,
        };
        let a = sample_strict_derivative_cloud(&spec).unwrap();
        let b = sample_strict_derivative_cloud_sequential(&spec).unwrap();
        assert_eq!(a.points, b.points);
    }

    #[test]
    fn off_graph_sampler_is_a_contract_violation() {
        let g = UnivariatePlq::indicator_le_zero();
        let bad = |_rng: &mut ChaCha8Rng, _r: f64| [0.5, 0.5];
        let err = sample_cloud_with_sampler(&g, bad, [0.0, 0.0], &grid(), 0.5, 10, 1)
            .unwrap_err();
        assert!(matches!(err, Error::SamplerContract { .. }));
    }
}
