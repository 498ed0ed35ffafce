//! Independent numeric verification of the analytic certificates:
//! difference-quotient sampling of derivative cones, chain-rule inclusion
//! checks, brute-force localized solves, Lipschitz modulus estimation, and
//! KKT identification.

mod chain;
mod cloud;
mod experiment;
mod identify;
mod localized;

pub use chain::{sample_chain_rule, ChainReport, ChainSpec};
pub use cloud::{
    containment_check, sample_cloud_with_sampler, sample_strict_derivative_cloud,
    sample_strict_derivative_cloud_sequential, CloudSpec, ContainmentReport, DirectionCloud,
};
pub use experiment::{
    stability_experiment, stability_experiment_sequential, ExperimentParams, IdentStatus,
    LadderRung, LipschitzEstimate, LocalizationEstimate,
};
pub use identify::{verify_identification, IdentVerdict};
pub use localized::{solve_localized, LocalMinimizer, LocalizedSolveResult, SolveStatus};

pub(crate) use localized::minimize_scalar as localized_minimize_scalar;

use crate::error::{Error, Result};

/// Max ratio of output distance to input distance over all pairs.
pub fn estimate_lipschitz(pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::Undefined(
            "lipschitz estimate needs at least two pairs".into(),
        ));
    }
    let mut best: Option<f64> = None;
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            let din = dist(&pairs[i].0, &pairs[j].0);
            if din == 0.0 {
                continue;
            }
            let dout = dist(&pairs[i].1, &pairs[j].1);
            let r = dout / din;
            best = Some(best.map_or(r, |b: f64| b.max(r)));
        }
    }
    best.ok_or_else(|| Error::Undefined("all inputs identical".into()))
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_map_modulus() {
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..10)
            .map(|k| {
                let x = vec![k as f64 * 0.1, -(k as f64) * 0.2];
                let y = vec![2.0 * x[0], 2.0 * x[1]];
                (x, y)
            })
            .collect();
        let l = estimate_lipschitz(&pairs).unwrap();
        assert!((l - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_output_is_zero() {
        let pairs = vec![
            (vec![0.0], vec![1.0]),
            (vec![1.0], vec![1.0]),
            (vec![2.0], vec![1.0]),
        ];
        assert_eq!(estimate_lipschitz(&pairs).unwrap(), 0.0);
    }

    #[test]
    fn identical_inputs_are_undefined() {
        let pairs = vec![(vec![1.0], vec![0.0]), (vec![1.0], vec![5.0])];
        assert!(estimate_lipschitz(&pairs).is_err());
    }
}
