//! Sampling experiment estimating single-valuedness and the Lipschitz
//! modulus of the localized primal-dual solution map.
//!
//! Parameter points are drawn uniformly from balls of shrinking radius
//! (the ladder); each is solved by the localized brute-force solver and
//! paired with its least-norm multiplier.  Samples are indexed and the
//! reduction is performed in index order, so reports are bitwise
//! reproducible for a fixed seed at any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::exec::{self, Mode};
use crate::linalg;
use crate::oracle::identify::{verify_identification, IdentVerdict};
use crate::oracle::localized::{solve_localized, SolveStatus};
use crate::problem::{GnlpProblem, KktPoint};
use crate::tol::{EMPTY_FRACTION_LIMIT, LADDER_FACTOR, PAIR_FILTER_DIVISOR};

#[derive(Clone, Debug)]
pub struct ExperimentParams {
    /// Perturbation radius around the base parameters.
    pub radius: f64,
    /// Localization radius for primal and dual balls.
    pub delta: f64,
    pub samples: usize,
    pub seed: u64,
    pub resolution: usize,
    /// Radius multipliers of the ladder rungs; the first is the headline.
    pub ladder_scales: Vec<f64>,
    /// Growth factor between consecutive rungs flagged as diverging.
    pub ladder_factor: f64,
    /// Pairs closer than `radius / divisor` in input space are skipped.
    pub pair_filter_divisor: f64,
    /// Identification sub-sample size (0 disables the check).
    pub identification_samples: usize,
}

impl ExperimentParams {
    pub fn new(radius: f64, delta: f64, samples: usize, seed: u64) -> Self {
        ExperimentParams {
            radius,
            delta,
            samples,
            seed,
            resolution: 64,
            ladder_scales: vec![1.0, 0.1, 1e-3],
            ladder_factor: LADDER_FACTOR,
            pair_filter_divisor: PAIR_FILTER_DIVISOR,
            identification_samples: 12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LipschitzEstimate {
    Finite(f64),
    Diverging,
}

#[derive(Clone, Copy, Debug)]
pub struct LadderRung {
    pub radius: f64,
    pub estimate: Option<f64>,
    pub successes: usize,
    pub empties: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IdentStatus {
    Pass,
    PassWithNotes,
    Fail,
    Unresolved,
    NotChecked,
}

#[derive(Clone, Debug)]
pub struct LocalizationEstimate {
    pub single_valued: bool,
    pub lipschitz: LipschitzEstimate,
    pub sample_count: usize,
    pub radius_ladder: Vec<LadderRung>,
    pub empty_count: usize,
    pub valid: bool,
    pub identification: IdentStatus,
    pub notes: Vec<String>,
}

impl LocalizationEstimate {
    /// The experiment confirms stability: valid, single-valued, and a
    /// non-diverging modulus ladder.
    pub fn indicates_stable(&self) -> bool {
        self.valid && self.single_valued && self.lipschitz != LipschitzEstimate::Diverging
    }
}

struct SampleOutcome {
    input: Vec<f64>,
    output: Option<Vec<f64>>,
    ok_single: bool,
    empty: bool,
}

fn draw_input(
    rng: &mut ChaCha8Rng,
    kkt: &KktPoint,
    radius: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let dim = kkt.v.len() + kkt.u.len();
    let raw: Vec<f64> = (0..dim)
        .map(|_| {
            let u1: f64 = rng.gen_range(1e-12..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        })
        .collect();
    let norm = linalg::norm2(&raw).max(1e-12);
    let r = radius * rng.gen_range(0.0f64..1.0).powf(1.0 / dim as f64);
    let offset = linalg::scale(&raw, r / norm);
    let v: Vec<f64> = kkt
        .v
        .iter()
        .zip(&offset[..kkt.v.len()])
        .map(|(b, o)| b + o)
        .collect();
    let u: Vec<f64> = kkt
        .u
        .iter()
        .zip(&offset[kkt.v.len()..])
        .map(|(b, o)| b + o)
        .collect();
    let mut input = v.clone();
    input.extend_from_slice(&u);
    (input, v, u)
}

fn run_rung(
    problem: &GnlpProblem,
    kkt: &KktPoint,
    params: &ExperimentParams,
    rung_index: usize,
    radius: f64,
    mode: Mode,
) -> Result<(LadderRung, Vec<SampleOutcome>)> {
    let outcomes: Vec<Result<SampleOutcome>> =
        exec::indexed_map_mode(mode, params.samples, |index| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(((rung_index as u64) << 32) | (index as u64 + 1));
            let (input, v, u) = draw_input(&mut rng, kkt, radius);
            let solve = solve_localized(problem, &v, &u, params.delta, &kkt.x, params.resolution)?;
            if solve.status == SolveStatus::Empty {
                return Ok(SampleOutcome {
                    input,
                    output: None,
                    ok_single: false,
                    empty: true,
                });
            }
            let best = &solve.minimizers[0];
            let output = best.multiplier.as_ref().map(|y| {
                let mut out = best.x.clone();
                out.extend_from_slice(y);
                out
            });
            let y_ok = best.multiplier.as_ref().is_some_and(|y| {
                linalg::norm2(&linalg::sub(y, &kkt.y)) <= params.delta
            });
            let ok_single =
                solve.status == SolveStatus::Unique && best.multiplier_singleton && y_ok;
            Ok(SampleOutcome {
                input,
                output,
                ok_single,
                empty: false,
            })
        });
    let mut collected = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        collected.push(o?);
    }
    let empties = collected.iter().filter(|o| o.empty).count();
    let successes = collected.len() - empties;
    // pairwise modulus with the input-distance filter
    let min_input_dist = radius / params.pair_filter_divisor;
    let mut estimate: Option<f64> = None;
    let with_output: Vec<&SampleOutcome> =
        collected.iter().filter(|o| o.output.is_some()).collect();
    for i in 0..with_output.len() {
        for j in i + 1..with_output.len() {
            let din = linalg::norm2(&linalg::sub(&with_output[i].input, &with_output[j].input));
            if din < min_input_dist {
                continue;
            }
            let dout = linalg::norm2(&linalg::sub(
                with_output[i].output.as_ref().unwrap(),
                with_output[j].output.as_ref().unwrap(),
            ));
            let r = dout / din;
            estimate = Some(estimate.map_or(r, |b: f64| b.max(r)));
        }
    }
    Ok((
        LadderRung {
            radius,
            estimate,
            successes,
            empties,
        },
        collected,
    ))
}

/// Runs the experiment in parallel when available.
pub fn stability_experiment(
    problem: &GnlpProblem,
    kkt: &KktPoint,
    params: &ExperimentParams,
) -> Result<LocalizationEstimate> {
    experiment_mode(problem, kkt, params, Mode::Auto)
}

/// Sequential twin kept for the fallback build and benchmarks.
pub fn stability_experiment_sequential(
    problem: &GnlpProblem,
    kkt: &KktPoint,
    params: &ExperimentParams,
) -> Result<LocalizationEstimate> {
    experiment_mode(problem, kkt, params, Mode::Sequential)
}

fn experiment_mode(
    problem: &GnlpProblem,
    kkt: &KktPoint,
    params: &ExperimentParams,
    mode: Mode,
) -> Result<LocalizationEstimate> {
    let mut ladder = Vec::with_capacity(params.ladder_scales.len());
    let mut main_outcomes: Vec<SampleOutcome> = Vec::new();
    for (k, scale) in params.ladder_scales.iter().enumerate() {
        let (rung, outcomes) = run_rung(problem, kkt, params, k, params.radius * scale, mode)?;
        if k == 0 {
            main_outcomes = outcomes;
        }
        ladder.push(rung);
    }
    let mut notes = Vec::new();

    let total: usize = params.samples * params.ladder_scales.len();
    let total_empty: usize = ladder.iter().map(|r| r.empties).sum();
    let empty_count = ladder.first().map(|r| r.empties).unwrap_or(0);
    let valid = (total_empty as f64) <= EMPTY_FRACTION_LIMIT * total as f64;
    if !valid {
        notes.push(format!(
            "experiment INVALID: {total_empty}/{total} infeasible solves"
        ));
    }

    let successes = main_outcomes.iter().filter(|o| !o.empty).count();
    let single_valued = successes > 0 && main_outcomes.iter().all(|o| o.empty || o.ok_single);
    if successes == 0 {
        notes.push("no successful solves at the headline radius".into());
    }

    // diverging ladder rule: any consecutive growth by the factor
    let mut diverging = false;
    for w in ladder.windows(2) {
        if let (Some(a), Some(b)) = (w[0].estimate, w[1].estimate) {
            if a > 0.0 && b >= params.ladder_factor * a {
                diverging = true;
            }
        }
    }
    let lipschitz = if diverging {
        LipschitzEstimate::Diverging
    } else {
        LipschitzEstimate::Finite(ladder[0].estimate.unwrap_or(0.0))
    };

    let identification = if params.identification_samples == 0 || problem.primal_dim() > 2 {
        IdentStatus::NotChecked
    } else {
        let k = params.identification_samples.min(params.samples);
        let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..k)
            .map(|index| {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(index as u64 + 1);
                let (_, v, u) = draw_input(&mut rng, kkt, params.radius);
                (v, u)
            })
            .collect();
        match verify_identification(problem, kkt, &samples, params.delta, params.resolution) {
            Ok(verdicts) => {
                if verdicts.iter().any(|v| matches!(v, IdentVerdict::Fail(_))) {
                    IdentStatus::Fail
                } else if verdicts.iter().any(|v| *v == IdentVerdict::Unresolved) {
                    IdentStatus::Unresolved
                } else if verdicts
                    .iter()
                    .any(|v| matches!(v, IdentVerdict::PassWithNote(_)))
                {
                    for v in &verdicts {
                        if let IdentVerdict::PassWithNote(n) = v {
                            notes.push(format!("identification note: {n}"));
                        }
                    }
                    IdentStatus::PassWithNotes
                } else {
                    IdentStatus::Pass
                }
            }
            Err(e) => {
                notes.push(format!("identification skipped: {e}"));
                IdentStatus::NotChecked
            }
        }
    };

    Ok(LocalizationEstimate {
        single_valued,
        lipschitz,
        sample_count: params.samples,
        radius_ladder: ladder,
        empty_count,
        valid,
        identification,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn quick_params(samples: usize, seed: u64) -> ExperimentParams {
        let mut p = ExperimentParams::new(0.1, 0.5, samples, seed);
        p.identification_samples = 4;
        p
    }

    #[test]
    fn stable_corner_problem() {
        let p = corpus::p1();
        let est = stability_experiment(&p.problem, &p.kkt, &quick_params(120, 5)).unwrap();
        assert!(est.valid);
        assert!(est.single_valued, "{:?}", est.notes);
        match est.lipschitz {
            LipschitzEstimate::Finite(l) => assert!(l <= 3.0, "modulus {l}"),
            LipschitzEstimate::Diverging => panic!("unexpected divergence"),
        }
        assert!(est.indicates_stable());
    }

    #[test]
    fn duplicate_equality_is_invalid_and_segmented() {
        let p = corpus::p2();
        let mut params = quick_params(60, 6);
        params.identification_samples = 0;
        let est = stability_experiment(&p.problem, &p.kkt, &params).unwrap();
        // random shifts make the duplicated equalities incompatible
        assert!(!est.valid);
        assert!(!est.indicates_stable());
        // the multiplier segment is visible at the base point
        let ms = p
            .problem
            .multiplier_set(&p.kkt.x, &p.kkt.u, &p.kkt.v, 1e-8)
            .unwrap();
        assert!(!ms.is_singleton);
    }

    #[test]
    fn flat_quartic_diverges() {
        let p = corpus::quartic();
        let mut params = quick_params(150, 7);
        params.identification_samples = 0;
        let est = stability_experiment(&p.problem, &p.kkt, &params).unwrap();
        assert!(est.valid);
        assert_eq!(est.lipschitz, LipschitzEstimate::Diverging);
        assert!(!est.indicates_stable());
    }

    #[test]
    fn determinism_between_strategies() {
        let p = corpus::p1();
        let params = quick_params(40, 9);
        let a = stability_experiment(&p.problem, &p.kkt, &params).unwrap();
        let b = stability_experiment_sequential(&p.problem, &p.kkt, &params).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
