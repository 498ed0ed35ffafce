//! Acceptance gate: one test per criterion, each printing a PASS/FAIL
//! line (visible with `-- --nocapture`).  Tolerances and thresholds are
//! pinned here, not configurable.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fullstab::cone::{ray_minkowski_difference, Cone2, PlanarConeUnion};
use fullstab::corpus::{self, cone_systems, graph_points, random_plq};
use fullstab::criteria::{
    check_criterion, check_generalized_equation, check_ligc, check_ssoc, stability_verdict_default,
    CriterionMode, Overall,
};
use fullstab::derive::{coderivative_graph, local_slopes, strict_derivative_graph};
use fullstab::feasibility::{cone_nonzero_feasibility, verify_witness, FeasibilityStatus};
use fullstab::oracle::{
    containment_check, estimate_lipschitz, sample_chain_rule, sample_strict_derivative_cloud,
    solve_localized, stability_experiment, ChainSpec, CloudSpec, ExperimentParams,
    LipschitzEstimate,
};
use fullstab::plq::{PlqPiece, UnivariatePlq};
use fullstab::poly::Polynomial;

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

// indicator case table: the strict cone graph is the horizontal axis for
// inactive indices, the vertical axis for strongly active ones, and the
// union of both closed quadrants at a degenerate contact
#[test]
fn criterion_01_indicator_case_table() {
    let g = UnivariatePlq::indicator_le_zero();
    let horizontal = PlanarConeUnion::line([1.0, 0.0]);
    let vertical = PlanarConeUnion::line([0.0, 1.0]);
    let quadrants = PlanarConeUnion::from_cones(vec![
        Cone2::Wedge([1.0, 0.0], [0.0, 1.0]),
        Cone2::Wedge([-1.0, 0.0], [0.0, -1.0]),
    ]);
    let inactive = strict_derivative_graph(&g, -1.0, 0.0).unwrap();
    let active = strict_derivative_graph(&g, 0.0, 2.0).unwrap();
    let degenerate = strict_derivative_graph(&g, 0.0, 0.0).unwrap();
    let equality = strict_derivative_graph(&UnivariatePlq::indicator_zero(), 0.0, -1.3).unwrap();
    let pass = inactive == horizontal
        && active == vertical
        && degenerate == quadrants
        && equality == vertical;
    verdict(
        "01 indicator case table",
        pass,
        &format!("inactive={inactive} active={active} degenerate={degenerate}"),
    );
}

// strict and coderivative origin fibers coincide on a random corpus
#[test]
fn criterion_02_origin_fiber_equality() {
    let mut rng = ChaCha8Rng::seed_from_u64(271_828);
    let mut checked = 0;
    for _ in 0..25 {
        let g = random_plq(&mut rng);
        for p in graph_points(&g, &mut rng, 6) {
            let strict = strict_derivative_graph(&g, p[0], p[1]).unwrap();
            let coder = coderivative_graph(&g, p[0], p[1]).unwrap();
            if strict.origin_fiber() != coder.origin_fiber() {
                verdict("02 origin-fiber equality", false, &format!("at {p:?} of {g:?}"));
            }
            checked += 1;
        }
    }
    verdict(
        "02 origin-fiber equality",
        checked >= 125,
        &format!("{checked} graph points agree"),
    );
}

// the strict graph equals the Minkowski difference of the graphical rays
#[test]
fn criterion_03_minkowski_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(314_159);
    let mut checked = 0;
    for _ in 0..25 {
        let g = random_plq(&mut rng);
        for p in graph_points(&g, &mut rng, 6) {
            let pair = local_slopes(&g, p[0], p[1]).unwrap();
            let direct = strict_derivative_graph(&g, p[0], p[1]).unwrap();
            let difference = ray_minkowski_difference(pair);
            if direct != difference {
                verdict(
                    "03 minkowski identity",
                    false,
                    &format!("at {p:?}: {direct} vs {difference}"),
                );
            }
            checked += 1;
        }
    }
    verdict(
        "03 minkowski identity",
        checked >= 125,
        &format!("{checked} graph points agree canonically"),
    );
}

// sampled difference-quotient clouds validate the analytic cones
#[test]
fn criterion_04_sampled_cone_validation() {
    let kink = UnivariatePlq::new(vec![
        PlqPiece::new(f64::NEG_INFINITY, 0.0, 0.0, 0.0, 0.0),
        PlqPiece::new(0.0, f64::INFINITY, 1.0, 0.0, 0.0),
    ])
    .unwrap();
    let cases: [(&str, UnivariatePlq, [f64; 2]); 3] = [
        ("half-line corner", UnivariatePlq::indicator_le_zero(), [0.0, 0.0]),
        ("smooth quadratic", UnivariatePlq::quadratic(1.0), [0.0, 0.0]),
        ("derivative kink", kink, [0.0, 0.0]),
    ];
    let mut details = Vec::new();
    let mut all = true;
    for (name, g, base) in &cases {
        let cloud = sample_strict_derivative_cloud(&CloudSpec {
            plq: g,
            base: *base,
            t_grid: vec![1e-1, 1e-2, 1e-3, 1e-4],
            perturbation_radius: 1.0,
            count: 10_000,
            seed: 4,
        })
        .unwrap();
        let analytic = strict_derivative_graph(g, base[0], base[1]).unwrap();
        let report = containment_check(&cloud, &analytic, 1e-6, 1e-2);
        all &= report.pass;
        details.push(format!(
            "{name}: outer={:.2e} coverage={:.2e} n={}",
            report.max_outer_angle, report.max_coverage_gap, report.samples
        ));
    }
    verdict("04 sampled-cone validation", all, &details.join("; "));
}

// chain-rule inclusion on random composites, two-sided under full rank
#[test]
fn criterion_05_chain_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(161_803);
    let mut all_forward = true;
    let mut two_sided_ok = true;
    let mut full_rank_seen = 0;
    let mut details = Vec::new();
    for trial in 0..10u64 {
        use rand::Rng;
        // two outputs over two inputs; half the trials rank-deficient
        let deficient = trial % 3 == 2;
        let inner = if deficient {
            vec![
                Polynomial::new(2, vec![(1.0, vec![1, 0])]).unwrap(),
                Polynomial::zero(2),
            ]
        } else {
            loop {
                let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
                if (v[0] * v[3] - v[1] * v[2]).abs() > 0.3 {
                    break vec![
                        Polynomial::new(2, vec![(v[0], vec![1, 0]), (v[1], vec![0, 1])]).unwrap(),
                        Polynomial::new(
                            2,
                            vec![
                                (v[2], vec![1, 0]),
                                (v[3], vec![0, 1]),
                                (rng.gen_range(-0.3..0.3), vec![2, 0]),
                            ],
                        )
                        .unwrap(),
                    ];
                }
            }
        };
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
        let plqs = vec![
            if trial % 2 == 0 {
                UnivariatePlq::abs()
            } else {
                UnivariatePlq::quadratic(1.0)
            },
            UnivariatePlq::abs(),
        ];
        let base_x = vec![0.0, 0.0];
        let g_vals: Vec<f64> = inner.iter().map(|p| p.value(&base_x).unwrap()).collect();
        let f_vals: Vec<f64> = outer.iter().map(|p| p.value(&base_x).unwrap()).collect();
        // put each base pair on its graph (kink position for abs)
        let w0 = if trial % 2 == 0 { 0.4 } else { g_vals[0] };
        let base_v = vec![f_vals[0] + w0, f_vals[1] - 0.2];
        let report = sample_chain_rule(&ChainSpec {
            outer_map: &outer,
            inner_map: &inner,
            plqs: &plqs,
            base_x,
            base_v,
            t_grid: vec![1e-2, 1e-3, 1e-4],
            count: 600,
            probes: 80,
            seed: 1000 + trial,
        })
        .unwrap();
        all_forward &= report.forward_pass;
        if report.full_rank {
            full_rank_seen += 1;
            two_sided_ok &= report.reverse_pass;
        }
        details.push(format!(
            "trial {trial}: rank={} fwd_excess={:.1e} rev_gap={:.1e}",
            report.inner_rank, report.forward_excess, report.reverse_gap
        ));
    }
    verdict(
        "05 chain rule",
        all_forward && two_sided_ok && full_rank_seen >= 6,
        &details.join("; "),
    );
}

// the curated suite: analytic criterion vs sampling experiment, with the
// three hand-analyzed cases checked in detail
#[test]
fn criterion_06_curated_stability_suite() {
    let mut details = Vec::new();
    let mut all = true;
    for c in corpus::curated() {
        let criterion = check_criterion(&c.problem, &c.kkt, CriterionMode::Strict, false).unwrap();
        let mut params = ExperimentParams::new(0.1, 0.5, 1000, 90_210);
        params.identification_samples = 0;
        let est = stability_experiment(&c.problem, &c.kkt, &params).unwrap();
        let experiment_stable = est.indicates_stable();
        let agreed = experiment_stable == criterion.is_only_zero();
        all &= agreed;
        all &= c.expect_stable == criterion.is_only_zero();
        details.push(format!(
            "{}: criterion={:?} experiment_stable={experiment_stable}",
            c.name, criterion.status
        ));

        match c.name {
            "p1-degenerate-corner" => {
                let l = match est.lipschitz {
                    LipschitzEstimate::Finite(l) => l,
                    LipschitzEstimate::Diverging => f64::INFINITY,
                };
                all &= criterion.is_only_zero() && est.single_valued && l <= 3.0;
                details.push(format!("p1 lipschitz={l:.3}"));
            }
            "p2-duplicate-equality" => {
                let ms = c
                    .problem
                    .multiplier_set(&c.kkt.x, &c.kkt.u, &c.kkt.v, 1e-8)
                    .unwrap();
                all &= !criterion.is_only_zero() && !ms.is_singleton;
                details.push("p2 multiplier segment detected".into());
            }
            "quartic-flat-minimum" => {
                all &= est.lipschitz == LipschitzEstimate::Diverging;
                let rungs = &est.radius_ladder;
                let first = rungs.first().and_then(|r| r.estimate).unwrap_or(0.0);
                let last = rungs.last().and_then(|r| r.estimate).unwrap_or(0.0);
                all &= last >= 10.0 * first;
                details.push(format!("quartic ladder {first:.1} -> {last:.1}"));
            }
            _ => {}
        }
    }
    verdict("06 curated stability suite", all, &details.join("; "));
}

// classical problems: stable exactly when the second-order check and the
// gradient-independence check both hold
#[test]
fn criterion_07_second_order_plus_independence_recapture() {
    let mut details = Vec::new();
    let mut all = true;
    let mut classical = 0;
    for c in corpus::curated() {
        if !c.problem.is_classical_nlp() {
            continue;
        }
        classical += 1;
        let report = stability_verdict_default(&c.problem, &c.kkt, false, false).unwrap();
        let ssoc = check_ssoc(&c.problem, &c.kkt).unwrap();
        let ligc = check_ligc(&c.problem, &c.kkt).unwrap();
        let expected = ssoc.verdict.holds() && ligc.verdict.holds();
        let got = report.overall == Overall::Stable;
        all &= expected == got;
        details.push(format!(
            "{}: ssoc={} ligc={} overall={:?}",
            c.name, ssoc.verdict, ligc.verdict, report.overall
        ));
    }
    verdict(
        "07 SSOC+LIGC recapture",
        all && classical >= 6,
        &details.join("; "),
    );
}

// with the primal direction pinned to zero, the strict and coderivative
// criteria return identical statuses
#[test]
fn criterion_08_simplified_criteria_equivalence() {
    let mut all = true;
    let mut count = 0;
    for c in corpus::curated() {
        let s = check_criterion(&c.problem, &c.kkt, CriterionMode::Strict, true).unwrap();
        let d = check_criterion(&c.problem, &c.kkt, CriterionMode::Coderivative, true).unwrap();
        all &= s.status == d.status;
        count += 1;
    }
    verdict(
        "08 simplified criteria equivalence",
        all && count >= 8,
        &format!("{count} corpus problems, statuses identical"),
    );
}

// generalized-equation desk checks plus the sampled solution map modulus
#[test]
fn criterion_09_generalized_equation_checks() {
    let half = UnivariatePlq::indicator_le_zero();
    // h(p, x) = x - p: localization certified
    let h1 = Polynomial::new(2, vec![(1.0, vec![0, 1]), (-1.0, vec![1, 0])]).unwrap();
    let stable = check_generalized_equation(&[h1], &[half.clone()], &[0.0], &[0.0], &[0.0])
        .unwrap();
    // h(p, x) = -x - p: refuted
    let h2 = Polynomial::new(2, vec![(-1.0, vec![0, 1]), (-1.0, vec![1, 0])]).unwrap();
    let unstable = check_generalized_equation(&[h2], &[half], &[0.0], &[0.0], &[0.0]).unwrap();
    // outer term identically zero: criterion = Jacobian nonsingularity
    let h3 = Polynomial::new(2, vec![(2.0, vec![0, 1]), (-1.0, vec![1, 0])]).unwrap();
    let nonsingular =
        check_generalized_equation(&[h3], &[UnivariatePlq::zero()], &[0.0], &[0.0], &[0.0])
            .unwrap();
    let h4 = Polynomial::new(2, vec![(-1.0, vec![1, 0])]).unwrap();
    let singular =
        check_generalized_equation(&[h4], &[UnivariatePlq::zero()], &[0.0], &[0.0], &[0.0])
            .unwrap();
    let verdicts_ok = stable.status == FeasibilityStatus::OnlyZero
        && unstable.status == FeasibilityStatus::Nonzero
        && nonsingular.status == FeasibilityStatus::OnlyZero
        && singular.status == FeasibilityStatus::Nonzero;

    // sampled solution map of the stable case: x(p) solves the same KKT
    // system as the half-space toy problem tilted by p
    let p1 = corpus::p1();
    let mut pairs = Vec::new();
    for k in 0..21 {
        let p = -0.1 + 0.01 * k as f64;
        let solve = solve_localized(&p1.problem, &[p], &[0.0], 0.5, &[0.0], 64).unwrap();
        pairs.push((vec![p], solve.minimizers[0].x.clone()));
    }
    let modulus = estimate_lipschitz(&pairs).unwrap();
    verdict(
        "09 generalized-equation checks",
        verdicts_ok && modulus <= 1.0 + 1e-6,
        &format!("verdicts 3/3, sampled modulus {modulus:.9}"),
    );
}

// LP decision vs exhaustive dyadic grid enumeration
#[test]
fn criterion_10_cone_feasibility_oracle_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(577_215);
    let mut agreements = 0;
    let mut witnesses = 0;
    for case in 0..32 {
        let system = if case % 3 == 2 {
            cone_systems::planted_only_zero(&mut rng)
        } else {
            cone_systems::planted_nonzero(&mut rng)
        };
        let lp = cone_nonzero_feasibility(&system).unwrap();
        let grid = cone_systems::grid_oracle(&system);
        let agree = matches!(
            (&lp.status, &grid),
            (FeasibilityStatus::Nonzero, Some(_)) | (FeasibilityStatus::OnlyZero, None)
        );
        if !agree {
            verdict(
                "10 cone-feasibility oracle agreement",
                false,
                &format!("case {case}: {lp:?} vs grid {grid:?}"),
            );
        }
        agreements += 1;
        if let (Some(w), Some(sel)) = (&lp.witness, &lp.selection) {
            assert!(verify_witness(&system, w, sel, 1e-9), "case {case}");
            witnesses += 1;
        }
    }
    verdict(
        "10 cone-feasibility oracle agreement",
        agreements >= 30 && witnesses >= 10,
        &format!("{agreements} systems agree, {witnesses} witnesses verified"),
    );
}

// repeated verify runs with one seed produce byte-identical TSV
#[test]
fn criterion_11_verify_determinism() {
    let bin = env!("CARGO_BIN_EXE_fullstab");
    let problem = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../problems/p1.prob");
    let run = || {
        let out = std::process::Command::new(bin)
            .args([
                "verify",
                "--problem",
                problem.to_str().unwrap(),
                "--samples",
                "200",
                "--seed",
                "99",
                "--format",
                "tsv",
            ])
            .output()
            .unwrap();
        (out.status.code(), out.stdout)
    };
    let first = run();
    let second = run();
    let pass = first == second && first.0 == Some(0);
    verdict(
        "11 verify determinism",
        pass,
        &format!(
            "two runs, {} bytes of TSV, bitwise identical = {}",
            first.1.len(),
            first == second
        ),
    );
}
