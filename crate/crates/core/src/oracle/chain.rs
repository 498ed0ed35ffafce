//! Sampled verification of the derivative chain rule for compositions
//! `S(x) = F(x) + S0(G(x))` with `S0` a separable PLQ subdifferential.
//!
//! The forward direction samples secants of the graph of `S` and checks
//! membership in the analytic right-hand side, with an allowance computed
//! from explicit curvature bounds of `F` and `G`.  The reverse direction
//! constructs, for analytic right-hand-side probes, graph-legal point
//! pairs realizing them; exactness of the reconstruction is reported and
//! only asserted when the inner Jacobian has full rank.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cone::{strict_graph_from_slopes, PlanarConeUnion};
use crate::error::{Error, Result};
use crate::exec;
use crate::graph::SubgradientGraph1D;
use crate::linalg::{self, Mat};
use crate::plq::UnivariatePlq;
use crate::poly::Polynomial;
use crate::tol::RANK_TOL;

#[derive(Clone, Debug)]
pub struct ChainSpec<'a> {
    /// Components of the smooth outer map `F` (one polynomial per output).
    pub outer_map: &'a [Polynomial],
    /// Components of the smooth inner map `G` (same output count).
    pub inner_map: &'a [Polynomial],
    /// One univariate PLQ per output of `G`.
    pub plqs: &'a [UnivariatePlq],
    pub base_x: Vec<f64>,
    pub base_v: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub count: usize,
    pub probes: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct ChainReport {
    pub samples: usize,
    /// Worst membership defect beyond the curvature allowance.
    pub forward_excess: f64,
    pub forward_pass: bool,
    pub inner_rank: usize,
    pub full_rank: bool,
    pub reverse_probes: usize,
    /// Worst distance between a right-hand-side probe and its sampled
    /// realization.
    pub reverse_gap: f64,
    /// Meaningful only when the inner Jacobian has full rank.
    pub reverse_pass: bool,
}

struct ChainContext {
    n: usize,
    m: usize,
    jac_f: Mat,
    jac_g: Mat,
    base_args: Vec<f64>,
    base_w: Vec<f64>,
    graphs: Vec<SubgradientGraph1D>,
    cones: Vec<PlanarConeUnion>,
    /// Per-component curvature bounds over the sampling ball.
    curv_f: Vec<f64>,
    curv_g: Vec<f64>,
    /// Locality cap on argument moves of each PLQ.
    arg_cap: f64,
    grad_g_bound: f64,
}

fn build_context(spec: &ChainSpec) -> Result<ChainContext> {
    let n = spec.base_x.len();
    let m = spec.plqs.len();
    if spec.outer_map.len() != m || spec.inner_map.len() != m || spec.base_v.len() != m {
        return Err(Error::DimensionMismatch {
            context: "chain-rule composition",
            expected: m,
            actual: spec.outer_map.len(),
        });
    }
    let mut jac_f = Mat::zeros(m, n);
    let mut jac_g = Mat::zeros(m, n);
    let mut base_args = Vec::with_capacity(m);
    let mut base_w = Vec::with_capacity(m);
    let mut graphs = Vec::with_capacity(m);
    let mut cones = Vec::with_capacity(m);
    let mut arg_cap = f64::INFINITY;
    for i in 0..m {
        let (f_val, f_grad, _) = spec.outer_map[i].eval(&spec.base_x)?;
        let (g_val, g_grad, _) = spec.inner_map[i].eval(&spec.base_x)?;
        for k in 0..n {
            jac_f.set(i, k, f_grad[k]);
            jac_g.set(i, k, g_grad[k]);
        }
        let w = spec.base_v[i] - f_val;
        let graph = SubgradientGraph1D::of(&spec.plqs[i]);
        let (slopes, snapped) =
            graph
                .slopes_at([g_val, w], 1e-9)
                .map_err(|distance| Error::OffGraph {
                    u: g_val,
                    y: w,
                    distance,
                    tolerance: 1e-9,
                })?;
        let loc = graph.locality_radius(snapped);
        if loc.is_finite() {
            arg_cap = arg_cap.min(loc / 4.0);
        }
        base_args.push(g_val);
        base_w.push(w);
        graphs.push(graph);
        cones.push(strict_graph_from_slopes(slopes));
    }
    let ball = 2.0;
    let curv_f: Vec<f64> = spec
        .outer_map
        .iter()
        .map(|p| p.hessian_abs_bound(&spec.base_x, ball))
        .collect();
    let curv_g: Vec<f64> = spec
        .inner_map
        .iter()
        .map(|p| p.hessian_abs_bound(&spec.base_x, ball))
        .collect();
    let grad_g_bound = (0..m)
        .map(|i| linalg::norm2(jac_g.row(i)))
        .fold(0.0f64, f64::max);
    Ok(ChainContext {
        n,
        m,
        jac_f,
        jac_g,
        base_args,
        base_w,
        graphs,
        cones,
        curv_f,
        curv_g,
        arg_cap,
        grad_g_bound,
    })
}

fn unit_ball_point<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..dim)
        .map(|_| {
            // Box-Muller from two uniforms
            let u1: f64 = rng.gen_range(1e-12..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        })
        .collect();
    let norm = linalg::norm2(&raw).max(1e-12);
    let r = radius * rng.gen_range(0.0f64..1.0).powf(1.0 / dim as f64);
    linalg::scale(&raw, r / norm)
}

fn eval_map(components: &[Polynomial], x: &[f64]) -> Result<Vec<f64>> {
    components.iter().map(|p| p.value(x)).collect()
}

/// Membership defect of one sampled secant against the analytic set,
/// minus its curvature allowance (positive values are violations).
fn forward_excess(
    ctx: &ChainContext,
    x_prime: &[f64],
    dv: &[f64],
    t: f64,
    base_offset: f64,
) -> f64 {
    let gx = ctx.jac_g.matvec(x_prime);
    let fx = ctx.jac_f.matvec(x_prime);
    let xn = linalg::norm2(x_prime);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..ctx.m {
        let w_rate = dv[i] - fx[i];
        let pair = [gx[i], w_rate];
        let defect = ctx.cones[i].distance(pair);
        let drift = 0.5 * t * xn * xn + base_offset * xn;
        let allowance = (ctx.curv_f[i] + ctx.curv_g[i]) * drift + 1e-9;
        worst = worst.max(defect - allowance);
    }
    worst
}

/// Splits a strict-cone member into a difference of graphical-ray points.
fn decompose_in_rays(
    slopes_ne: [f64; 2],
    slopes_sw: [f64; 2],
    target: [f64; 2],
) -> Option<([f64; 2], [f64; 2])> {
    let dirs = [slopes_ne, slopes_sw];
    for d1 in dirs {
        for d2 in dirs {
            let det = -d1[0] * d2[1] + d1[1] * d2[0];
            if det.abs() < 1e-12 {
                // parallel rays: target must be parallel too
                let cross = d1[0] * target[1] - d1[1] * target[0];
                if cross.abs() > 1e-10 * (1.0 + linalg::norm2(&target.to_vec())) {
                    continue;
                }
                let c = d1[0] * target[0] + d1[1] * target[1];
                let (alpha, beta) = (c.max(0.0), (-c).max(0.0));
                return Some((
                    [alpha * d1[0], alpha * d1[1]],
                    [beta * d1[0], beta * d1[1]],
                ));
            }
            // target = alpha d1 - beta d2
            let alpha = (target[1] * (-d2[0]) - target[0] * (-d2[1])) / det;
            let beta = (d1[0] * target[1] - d1[1] * target[0]) / det;
            if alpha >= -1e-12 && beta >= -1e-12 {
                return Some((
                    [alpha.max(0.0) * d1[0], alpha.max(0.0) * d1[1]],
                    [beta.max(0.0) * d2[0], beta.max(0.0) * d2[1]],
                ));
            }
        }
    }
    None
}

/// Samples secants of the composition graph and checks the chain-rule
/// inclusion; reverse coverage is reconstructed probe by probe.
pub fn sample_chain_rule(spec: &ChainSpec) -> Result<ChainReport> {
    let ctx = build_context(spec)?;
    let (rank, _) = linalg::rank_and_nullspace(&ctx.jac_g, RANK_TOL);
    let full_rank = rank == ctx.m;

    // components whose cone admits no nonzero slice force the inner rate
    // to zero; directions must respect them to produce legal secants
    let pinned: Vec<usize> = (0..ctx.m)
        .filter(|&i| {
            ctx.cones[i].fiber_at(1.0).is_empty() && ctx.cones[i].fiber_at(-1.0).is_empty()
        })
        .collect();
    let pinned_rows: Option<Mat> = if pinned.is_empty() {
        None
    } else {
        Some(Mat::from_rows(
            &pinned
                .iter()
                .map(|&i| ctx.jac_g.row(i).to_vec())
                .collect::<Vec<_>>(),
        ))
    };
    let project_pinned = |x: &[f64]| -> Vec<f64> {
        match &pinned_rows {
            None => x.to_vec(),
            Some(rows) => {
                let rx = rows.matvec(x);
                let (d, _) = linalg::least_squares_min_norm(rows, &rx, RANK_TOL);
                linalg::sub(x, &d)
            }
        }
    };

    // forward: secants of the composition graph, rejected unless both
    // endpoints stay inside the locality ball of the base graph point
    let outcomes = exec::indexed_map(spec.count, |index| -> Option<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(index as u64 + 1);
        for _attempt in 0..8 {
            let t = spec.t_grid[rng.gen_range(0..spec.t_grid.len())];
            let gb = ctx.grad_g_bound.max(1e-9);
            let leg_radius = (10.0 * t * (1.0 + gb)).min(ctx.arg_cap);
            let dir = {
                let raw = unit_ball_point(&mut rng, ctx.n, 1.0);
                let raw = if rng.gen_bool(0.5) {
                    project_pinned(&raw)
                } else {
                    raw
                };
                let nrm = linalg::norm2(&raw);
                if nrm < 1e-9 {
                    // fully pinned: legal secants move only along the
                    // outer-value fibers
                    vec![0.0; ctx.n]
                } else {
                    linalg::scale(&raw, 1.0 / nrm)
                }
            };
            let x_a: Vec<f64> = if rng.gen_bool(0.5) {
                spec.base_x.clone()
            } else {
                let radius = (10.0 * t).min(ctx.arg_cap / gb / 4.0).min(1.0);
                let offset = unit_ball_point(&mut rng, ctx.n, radius);
                let offset = project_pinned(&offset);
                spec.base_x.iter().zip(&offset).map(|(b, o)| b + o).collect()
            };
            let x_b: Vec<f64> = x_a.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let (Ok(g_a), Ok(g_b)) = (eval_map(spec.inner_map, &x_a), eval_map(spec.inner_map, &x_b))
            else {
                continue;
            };
            let mut w_a = Vec::with_capacity(ctx.m);
            let mut w_b = Vec::with_capacity(ctx.m);
            let mut snap_total = 0.0f64;
            let mut ok = true;
            for i in 0..ctx.m {
                let snap = 1e-10 + 10.0 * ctx.curv_g[i] * t * t;
                snap_total = snap_total.max(snap);
                let (Some(iv_a), Some(iv_b)) = (
                    spec.plqs[i].subgradient_snapped(g_a[i], snap),
                    spec.plqs[i].subgradient_snapped(g_b[i], snap),
                ) else {
                    ok = false;
                    break;
                };
                let jitter: f64 = rng.gen_range(-5.0 * t..5.0 * t);
                let wa = iv_a.clamp(ctx.base_w[i] + jitter);
                let rate: f64 = rng.gen_range(-5.0..5.0);
                let wb = iv_b.clamp(wa + t * rate);
                // legality: both graph points near the base graph point
                let da = ((g_a[i] - ctx.base_args[i]).powi(2)
                    + (wa - ctx.base_w[i]).powi(2))
                .sqrt();
                let db = ((g_b[i] - ctx.base_args[i]).powi(2)
                    + (wb - ctx.base_w[i]).powi(2))
                .sqrt();
                if da > leg_radius || db > leg_radius + t * (1.0 + gb) * 6.0 {
                    ok = false;
                    break;
                }
                w_a.push(wa);
                w_b.push(wb);
            }
            if !ok {
                continue;
            }
            let (Ok(f_a), Ok(f_b)) = (eval_map(spec.outer_map, &x_a), eval_map(spec.outer_map, &x_b))
            else {
                continue;
            };
            let dv: Vec<f64> = (0..ctx.m)
                .map(|i| (f_b[i] + w_b[i] - f_a[i] - w_a[i]) / t)
                .collect();
            if linalg::norm2(&dir) < 1e-9 && linalg::norm2(&dv) < 1e-12 {
                continue;
            }
            let base_offset = linalg::norm2(&linalg::sub(&x_a, &spec.base_x));
            let excess = forward_excess(&ctx, &dir, &dv, t, base_offset) - 2.0 * snap_total / t;
            return Some(excess);
        }
        None
    });
    let mut samples = 0usize;
    let mut forward_excess_max = f64::NEG_INFINITY;
    for o in outcomes.into_iter().flatten() {
        samples += 1;
        forward_excess_max = forward_excess_max.max(o);
    }
    let forward_pass = samples > 0 && forward_excess_max <= 1e-6;

    // reverse: realize analytic probes by graph-legal secants
    let t_min = spec
        .t_grid
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .min(1e-4);
    let gaps = exec::indexed_map(spec.probes, |index| -> Option<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9e37_79b9_7f4a_7c15);
        rng.set_stream(index as u64 + 1);
        for _attempt in 0..8 {
            let raw = unit_ball_point(&mut rng, ctx.n, 1.0);
            let raw = project_pinned(&raw);
            let nrm = linalg::norm2(&raw);
            let x_prime = if nrm < 1e-9 {
                vec![0.0; ctx.n]
            } else {
                linalg::scale(&raw, 1.0 / nrm)
            };
            let slices = ctx.jac_g.matvec(&x_prime);
            // pick a rate from each fiber, then decompose
            let mut w_rates = Vec::with_capacity(ctx.m);
            let mut p_minus = Vec::with_capacity(ctx.m);
            let mut p_plus = Vec::with_capacity(ctx.m);
            let mut ok = true;
            for i in 0..ctx.m {
                let slice = if pinned.contains(&i) { 0.0 } else { slices[i] };
                let fib = ctx.cones[i].fiber_at(slice);
                if fib.is_empty() {
                    ok = false;
                    break;
                }
                let iv = fib[rng.gen_range(0..fib.len())];
                let (lo, hi) = (iv.lo.max(-3.0), iv.hi.min(3.0));
                let w = if lo > hi {
                    iv.clamp(0.0)
                } else if hi > lo {
                    rng.gen_range(lo..=hi)
                } else {
                    lo
                };
                // decompose in the graphical rays of this component
                let (pair, _) = ctx.graphs[i]
                    .slopes_at([ctx.base_args[i], ctx.base_w[i]], 1e-9)
                    .expect("base point is on the graph");
                match decompose_in_rays(pair.ne.ne_dir(), pair.sw.sw_dir(), [slice, w]) {
                    Some((pp, pm)) => {
                        p_plus.push(pp);
                        p_minus.push(pm);
                        w_rates.push(w);
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let probe: Vec<f64> = {
                let fx = ctx.jac_f.matvec(&x_prime);
                let mut p: Vec<f64> = x_prime.clone();
                p.extend((0..ctx.m).map(|i| fx[i] + w_rates[i]));
                let pn = linalg::norm2(&p);
                if pn < 1e-9 {
                    continue;
                }
                linalg::scale(&p, 1.0 / pn)
            };

            // base shift a with (jac_g a)_i = (p_minus_i)_u
            let targets: Vec<f64> = p_minus.iter().map(|pm| pm[0]).collect();
            let (a, consistent) = linalg::least_squares_min_norm(&ctx.jac_g, &targets, RANK_TOL);
            if !consistent {
                // unreachable without full rank; report the probe as a gap
                return Some(1.0);
            }
            let t = t_min;
            let x_a: Vec<f64> = spec
                .base_x
                .iter()
                .zip(&a)
                .map(|(b, ai)| b + t * ai)
                .collect();
            let x_b: Vec<f64> = x_a
                .iter()
                .zip(&x_prime)
                .map(|(xa, d)| xa + t * d)
                .collect();
            let (Ok(g_a), Ok(g_b)) = (eval_map(spec.inner_map, &x_a), eval_map(spec.inner_map, &x_b))
            else {
                continue;
            };
            let (Ok(f_a), Ok(f_b)) = (eval_map(spec.outer_map, &x_a), eval_map(spec.outer_map, &x_b))
            else {
                continue;
            };
            let mut dv = Vec::with_capacity(ctx.m);
            let mut ok2 = true;
            for i in 0..ctx.m {
                let snap =
                    1e-10 + 10.0 * ctx.curv_g[i] * t * t * (1.0 + linalg::norm2(&a)).powi(2);
                let (Some(iv_a), Some(iv_b)) = (
                    spec.plqs[i].subgradient_snapped(g_a[i], snap),
                    spec.plqs[i].subgradient_snapped(g_b[i], snap),
                ) else {
                    ok2 = false;
                    break;
                };
                let wa = iv_a.clamp(ctx.base_w[i] + t * p_minus[i][1]);
                let wb = iv_b.clamp(ctx.base_w[i] + t * p_plus[i][1]);
                dv.push((f_b[i] + wb - f_a[i] - wa) / t);
            }
            if !ok2 {
                continue;
            }
            let mut achieved: Vec<f64> = x_prime.clone();
            achieved.extend_from_slice(&dv);
            let an = linalg::norm2(&achieved).max(1e-12);
            let achieved = linalg::scale(&achieved, 1.0 / an);
            let gap = linalg::norm2(&linalg::sub(&achieved, &probe));
            return Some(gap);
        }
        None
    });
    let mut reverse_probes = 0usize;
    let mut reverse_gap: f64 = 0.0;
    for g in gaps.into_iter().flatten() {
        reverse_probes += 1;
        reverse_gap = reverse_gap.max(g);
    }
    let reverse_pass = reverse_probes > 0 && reverse_gap <= 1e-2;
    Ok(ChainReport {
        samples,
        forward_excess: forward_excess_max,
        forward_pass,
        inner_rank: rank,
        full_rank,
        reverse_probes,
        reverse_gap,
        reverse_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn default_spec<'a>(
        outer: &'a [Polynomial],
        inner: &'a [Polynomial],
        plqs: &'a [UnivariatePlq],
        base_x: Vec<f64>,
        base_v: Vec<f64>,
        seed: u64,
    ) -> ChainSpec<'a> {
        ChainSpec {
            outer_map: outer,
            inner_map: inner,
            plqs,
            base_x,
            base_v,
            t_grid: vec![1e-2, 1e-3, 1e-4],
            count: 800,
            probes: 120,
            seed,
        }
    }

    #[test]
    fn identity_inner_map_agrees_two_sided() {
        // S(x) = F(x) + subdiff g(x) with G the identity on R^2
        let outer = vec![
            Polynomial::new(2, vec![(1.0, vec![2, 0]), (0.5, vec![0, 1])]).unwrap(),
            Polynomial::new(2, vec![(1.0, vec![1, 1])]).unwrap(),
        ];
        let inner = vec![
            Polynomial::new(2, vec![(1.0, vec![1, 0])]).unwrap(),
            Polynomial::new(2, vec![(1.0, vec![0, 1])]).unwrap(),
        ];
        let plqs = vec![UnivariatePlq::abs(), UnivariatePlq::quadratic(1.0)];
        // base x = (0, 0.5): g1 kink at 0 needs w1 in [-1,1]; g2 smooth
        let f0 = outer[0].value(&[0.0, 0.5]).unwrap();
        let f1 = outer[1].value(&[0.0, 0.5]).unwrap();
        let base_v = vec![f0 + 0.2, f1 + 0.5];
        let spec = default_spec(&outer, &inner, &plqs, vec![0.0, 0.5], base_v, 41);
        let report = sample_chain_rule(&spec).unwrap();
        assert!(report.full_rank);
        assert!(report.forward_pass, "{report:?}");
        assert!(report.reverse_pass, "{report:?}");
    }

    #[test]
    fn random_full_rank_linear_inner_maps() {
        use rand::Rng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for trial in 0..5 {
            // G full-rank 2x2 linear, F random quadratic
            let (a, b, c, d) = loop {
                let vals: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
                if (vals[0] * vals[3] - vals[1] * vals[2]).abs() > 0.3 {
                    break (vals[0], vals[1], vals[2], vals[3]);
                }
            };
            let inner = vec![
                Polynomial::new(2, vec![(a, vec![1, 0]), (b, vec![0, 1])]).unwrap(),
                Polynomial::new(2, vec![(c, vec![1, 0]), (d, vec![0, 1])]).unwrap(),
            ];
            let outer = vec![
                Polynomial::new(
                    2,
                    vec![
                        (rng.gen_range(-1.0..1.0), vec![2, 0]),
                        (rng.gen_range(-1.0..1.0), vec![0, 1]),
                    ],
                )
                .unwrap(),
                Polynomial::new(2, vec![(rng.gen_range(-1.0..1.0), vec![1, 1])]).unwrap(),
            ];
            let plqs = vec![UnivariatePlq::quadratic(1.0), UnivariatePlq::abs()];
            // choose base x where G2(x) = 0 to sit on the kink
            let base_x = vec![0.0, 0.0];
            let g_vals: Vec<f64> = inner.iter().map(|p| p.value(&base_x).unwrap()).collect();
            let f_vals: Vec<f64> = outer.iter().map(|p| p.value(&base_x).unwrap()).collect();
            let base_v = vec![f_vals[0] + g_vals[0], f_vals[1] + 0.3];
            let spec = default_spec(&outer, &inner, &plqs, base_x, base_v, 100 + trial);
            let report = sample_chain_rule(&spec).unwrap();
            assert!(report.full_rank, "trial {trial}");
            assert!(report.forward_pass, "trial {trial}: {report:?}");
            assert!(report.reverse_pass, "trial {trial}: {report:?}");
        }
    }

    #[test]
    fn rank_deficient_inner_map_reports_without_asserting() {
        // G(x) = (x1, 0): second component constant
        let inner = vec![
            Polynomial::new(2, vec![(1.0, vec![1, 0])]).unwrap(),
            Polynomial::zero(2),
        ];
        let outer = vec![
            Polynomial::new(2, vec![(0.5, vec![2, 0])]).unwrap(),
            Polynomial::new(2, vec![(1.0, vec![0, 1])]).unwrap(),
        ];
        let plqs = vec![UnivariatePlq::abs(), UnivariatePlq::abs()];
        let base_x = vec![0.0, 0.0];
        let base_v = vec![0.2, 0.4];
        let spec = default_spec(&outer, &inner, &plqs, base_x, base_v, 7);
        let report = sample_chain_rule(&spec).unwrap();
        assert!(!report.full_rank);
        assert_eq!(report.inner_rank, 1);
        // forward containment still holds
        assert!(report.forward_pass, "{report:?}");
    }
}
