//! Command implementations: each consumes a parsed problem file and
//! produces a report with the documented exit code.

use fullstab::criteria::{
    check_generalized_equation, classify_indices, evaluate_derivative_fibers, stability_verdict,
    CriterionMode, Overall,
};
use fullstab::derive::strict_derivative_graph;
use fullstab::feasibility::FeasibilityStatus;
use fullstab::oracle::{
    containment_check, sample_strict_derivative_cloud, stability_experiment, CloudSpec,
    ExperimentParams, IdentStatus, LipschitzEstimate,
};
use fullstab::tol::{GRAPH_SNAP_TOL, KKT_TOLERANCE};

use crate::parse::ProblemFile;
use crate::report::{fmt9, fmt_exact, fmt_vec, Format, Report};

#[derive(Clone, Debug)]
pub struct CommonFlags {
    pub format: Format,
    pub tol: f64,
}

impl Default for CommonFlags {
    fn default() -> Self {
        CommonFlags {
            format: Format::Text,
            tol: KKT_TOLERANCE,
        }
    }
}

fn fmt_for(format: Format, x: f64) -> String {
    match format {
        Format::Text => fmt9(x),
        Format::Tsv => fmt_exact(x),
    }
}

fn error_report(e: impl std::fmt::Display) -> Report {
    let mut r = Report::new(3);
    r.section("error").row("error", e.to_string());
    r
}

pub fn analyze(
    file: &ProblemFile,
    flags: &CommonFlags,
    assume_varsuff: bool,
    assume_strong_varsuff: bool,
) -> Report {
    let (problem, kkt) = match file.to_problem() {
        Ok(p) => p,
        Err(e) => return error_report(e),
    };
    let fmt = flags.format;
    let verdict = match stability_verdict(
        &problem,
        &kkt,
        assume_varsuff,
        assume_strong_varsuff,
        flags.tol,
    ) {
        Ok(v) => v,
        Err(e) => return error_report(e),
    };
    let exit = match verdict.overall {
        Overall::Stable => 0,
        Overall::NotStable => 1,
        Overall::Conditional(_) => 2,
    };
    let mut report = Report::new(exit);
    {
        let s = report.section("problem");
        s.row("residual", fmt_for(fmt, kkt.residual));
        s.row(
            "classical_nlp",
            if problem.is_classical_nlp() { "yes" } else { "no" },
        );
    }
    {
        let s = report.section("indices");
        for (i, e) in verdict.classification.entries.iter().enumerate() {
            s.row_vals(
                &format!("class_{}", i + 1),
                vec![
                    e.class.to_string(),
                    format!("slopes=({},{})", e.slopes.sw, e.slopes.ne),
                    format!("boundary={}", e.boundary),
                ],
            );
        }
    }
    {
        let s = report.section("checks");
        s.row("ligc", verdict.ligc.verdict.to_string());
        if let Some(dep) = &verdict.ligc.dependency {
            s.row_vals("ligc_dependency", fmt_vec(dep, fmt));
        }
        s.row("ssoc", verdict.ssoc.verdict.to_string());
        if let Some(ev) = verdict.ssoc.min_eigenvalue {
            s.row("ssoc_eigenvalue", fmt_for(fmt, ev));
        }
        s.row(
            "criterion_full",
            match verdict.full_criterion.status {
                FeasibilityStatus::OnlyZero => "ONLY_ZERO",
                FeasibilityStatus::Nonzero => "NONZERO",
            },
        );
        if let Some(w) = &verdict.full_criterion.witness {
            s.row_vals("witness", fmt_vec(w, fmt));
        }
        s.row(
            "criterion_reduced",
            match verdict.multiplier_criterion.status {
                FeasibilityStatus::OnlyZero => "ONLY_ZERO",
                FeasibilityStatus::Nonzero => "NONZERO",
            },
        );
        if let Some(w) = &verdict.multiplier_criterion.witness {
            s.row_vals("witness_reduced", fmt_vec(w, fmt));
        }
        s.row("varsuff", verdict.variational.to_string());
    }
    {
        let s = report.section("verdict");
        s.row("overall", match &verdict.overall {
            Overall::Stable => "STABLE".to_string(),
            Overall::NotStable => "NOT_STABLE".to_string(),
            Overall::Conditional(w) => format!("CONDITIONAL: {w}"),
        });
        for (k, note) in verdict.notes.iter().enumerate() {
            s.row(&format!("note_{}", k + 1), note.clone());
        }
    }
    report
}

#[derive(Clone, Debug)]
pub struct VerifyFlags {
    pub delta: f64,
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    pub resolution: usize,
    pub ladder_factor: f64,
    pub pair_filter: f64,
}

impl Default for VerifyFlags {
    fn default() -> Self {
        VerifyFlags {
            delta: 0.5,
            radius: 0.1,
            samples: 1000,
            seed: 0,
            resolution: 64,
            ladder_factor: fullstab::tol::LADDER_FACTOR,
            pair_filter: fullstab::tol::PAIR_FILTER_DIVISOR,
        }
    }
}

pub fn verify(file: &ProblemFile, flags: &CommonFlags, vf: &VerifyFlags) -> Report {
    let (problem, kkt) = match file.to_problem() {
        Ok(p) => p,
        Err(e) => return error_report(e),
    };
    if let Err(e) = kkt.require_admissible(flags.tol) {
        return error_report(e);
    }
    let fmt = flags.format;
    // file-embedded experiment parameters yield to explicit flags upstream
    let mut params = ExperimentParams::new(vf.radius, vf.delta, vf.samples, vf.seed);
    params.resolution = vf.resolution;
    params.ladder_factor = vf.ladder_factor;
    params.pair_filter_divisor = vf.pair_filter;
    let est = match stability_experiment(&problem, &kkt, &params) {
        Ok(e) => e,
        Err(e) => return error_report(e),
    };
    let negative = !est.single_valued
        || est.lipschitz == LipschitzEstimate::Diverging
        || est.identification == IdentStatus::Fail;
    let exit = if !est.valid || est.identification == IdentStatus::Unresolved {
        2
    } else if negative {
        1
    } else {
        0
    };
    let mut report = Report::new(exit);
    {
        let s = report.section("experiment");
        s.row("experiment", if est.valid { "VALID" } else { "INVALID" });
        s.row("samples", est.sample_count.to_string());
        s.row("empties", est.empty_count.to_string());
        s.row("single_valued", est.single_valued.to_string());
        s.row(
            "lipschitz",
            match est.lipschitz {
                LipschitzEstimate::Finite(l) => fmt_for(fmt, l),
                LipschitzEstimate::Diverging => "DIVERGING".into(),
            },
        );
        for (k, rung) in est.radius_ladder.iter().enumerate() {
            s.row_vals(
                &format!("ladder_{}", k + 1),
                vec![
                    fmt_for(fmt, rung.radius),
                    rung.estimate.map(|e| fmt_for(fmt, e)).unwrap_or_else(|| "-".into()),
                    format!("successes={}", rung.successes),
                    format!("empties={}", rung.empties),
                ],
            );
        }
        s.row(
            "identification",
            match est.identification {
                IdentStatus::Pass => "PASS",
                IdentStatus::PassWithNotes => "PASS_WITH_NOTES",
                IdentStatus::Fail => "FAIL",
                IdentStatus::Unresolved => "UNRESOLVED",
                IdentStatus::NotChecked => "NOT_CHECKED",
            },
        );
        for (k, note) in est.notes.iter().enumerate() {
            s.row(&format!("note_{}", k + 1), note.clone());
        }
    }
    report
}

pub fn derivative(
    file: &ProblemFile,
    flags: &CommonFlags,
    mode: CriterionMode,
    x_prime: Option<Vec<f64>>,
    u_prime: Option<Vec<f64>>,
) -> Report {
    let (problem, kkt) = match file.to_problem() {
        Ok(p) => p,
        Err(e) => return error_report(e),
    };
    let fmt = flags.format;
    let snap = GRAPH_SNAP_TOL.max(flags.tol);
    let classification = match classify_indices(&problem, &kkt, snap) {
        Ok(c) => c,
        Err(e) => return error_report(e),
    };
    let xp = x_prime.unwrap_or_else(|| vec![0.0; problem.primal_dim()]);
    let up = u_prime.unwrap_or_else(|| vec![0.0; problem.constraint_dim()]);
    let fibers = match evaluate_derivative_fibers(&problem, &kkt, &xp, &up, mode) {
        Ok(f) => f,
        Err(e) => return error_report(e),
    };
    let mut report = Report::new(0);
    {
        let s = report.section("indices");
        for (i, e) in classification.entries.iter().enumerate() {
            s.row_vals(
                &format!("slopes_{}", i + 1),
                vec![e.slopes.sw.to_string(), e.slopes.ne.to_string()],
            );
            s.row(&format!("class_{}", i + 1), e.class.to_string());
        }
    }
    {
        let s = report.section("graphs");
        for i in 0..problem.constraint_dim() {
            let values = problem.constraint_values(&kkt.x).unwrap();
            let arg = values[i] + kkt.u[i];
            let graph = match mode {
                CriterionMode::Strict => strict_derivative_graph(problem.outer(i), arg, kkt.y[i]),
                CriterionMode::Coderivative => {
                    fullstab::derive::coderivative_graph(problem.outer(i), arg, kkt.y[i])
                }
            };
            match graph {
                Ok(g) => s.row(&format!("graph_{}", i + 1), g.to_string()),
                Err(e) => return error_report(e),
            };
        }
    }
    {
        let s = report.section("fibers");
        s.row_vals("x_prime", fmt_vec(&xp, fmt));
        s.row_vals("u_prime", fmt_vec(&up, fmt));
        for (i, fiber) in fibers.fibers.iter().enumerate() {
            let mut vals = vec![format!("slice={}", fmt_for(fmt, fibers.slices[i]))];
            if fiber.is_empty() {
                vals.push("EMPTY".into());
            }
            for iv in fiber {
                vals.push(format!(
                    "[{}, {}]",
                    fmt_for(fmt, iv.lo),
                    fmt_for(fmt, iv.hi)
                ));
            }
            s.row_vals(&format!("fiber_{}", i + 1), vals);
        }
        s.row_vals("tilt_base", fmt_vec(&fibers.tilt_base, fmt));
        for r in 0..fibers.multiplier_map.rows() {
            s.row_vals(
                &format!("tilt_map_row_{}", r + 1),
                fmt_vec(fibers.multiplier_map.row(r), fmt),
            );
        }
    }
    report
}

pub fn sample_cone(file: &ProblemFile, flags: &CommonFlags, samples: usize, seed: u64) -> Report {
    let (problem, kkt) = match file.to_problem() {
        Ok(p) => p,
        Err(e) => return error_report(e),
    };
    let fmt = flags.format;
    let values = match problem.constraint_values(&kkt.x) {
        Ok(v) => v,
        Err(e) => return error_report(e),
    };
    let mut all_pass = true;
    let mut report = Report::new(0);
    {
        let s = report.section("sample-cone");
        for i in 0..problem.constraint_dim() {
            let base = [values[i] + kkt.u[i], kkt.y[i]];
            let analytic = match strict_derivative_graph(problem.outer(i), base[0], base[1]) {
                Ok(g) => g,
                Err(e) => return error_report(e),
            };
            let cloud = match sample_strict_derivative_cloud(&CloudSpec {
                plq: problem.outer(i),
                base,
                t_grid: vec![1e-1, 1e-2, 1e-3, 1e-4],
                perturbation_radius: 1.0,
                count: samples,
                seed,
            }) {
                Ok(c) => c,
                Err(e) => return error_report(e),
            };
            let check = containment_check(&cloud, &analytic, 1e-6, 1e-2);
            all_pass &= check.pass;
            s.row_vals(
                &format!("cone_{}", i + 1),
                vec![
                    if check.pass { "PASS".into() } else { "FAIL".to_string() },
                    format!("samples={}", check.samples),
                    format!("outer={}", fmt_for(fmt, check.max_outer_angle)),
                    format!("coverage={}", fmt_for(fmt, check.max_coverage_gap)),
                    analytic.to_string(),
                ],
            );
        }
    }
    report.exit_code = if all_pass { 0 } else { 1 };
    report
}

pub fn kummer(file: &ProblemFile, flags: &CommonFlags) -> Report {
    let (h, outer, p_bar, x_bar, v_bar) = match file.to_generalized_equation() {
        Ok(parts) => parts,
        Err(e) => return error_report(e),
    };
    let fmt = flags.format;
    let verdict = match check_generalized_equation(&h, &outer, &p_bar, &x_bar, &v_bar) {
        Ok(v) => v,
        Err(e) => return error_report(e),
    };
    let exit = match verdict.status {
        FeasibilityStatus::OnlyZero => 0,
        FeasibilityStatus::Nonzero => 1,
    };
    let mut report = Report::new(exit);
    {
        let s = report.section("generalized-equation");
        s.row(
            "criterion",
            match verdict.status {
                FeasibilityStatus::OnlyZero => "ONLY_ZERO",
                FeasibilityStatus::Nonzero => "NONZERO",
            },
        );
        s.row(
            "localization",
            match verdict.status {
                FeasibilityStatus::OnlyZero => "single-valued Lipschitz localization certified",
                FeasibilityStatus::Nonzero => "localization refuted by a nonzero direction",
            },
        );
        if let Some(w) = &verdict.witness {
            s.row_vals("witness", fmt_vec(w, fmt));
        }
    }
    report
}
