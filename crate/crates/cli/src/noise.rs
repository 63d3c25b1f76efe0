//! Default device noise and its calibration.
//!
//! The shipped model is produced by `uqc calibrate-noise`: readout flips are
//! fixed and the depolarizing strength is bisected until the sampler's mean
//! accuracy on the binary test sets sits `target_gap` below the exact
//! backend. The values are illustrative only.

use serde::{Deserialize, Serialize};
use uqc::{NoiseModel, Problem};

use crate::commands::{make_datasets, sampler_mean_accuracy, train_model};
use crate::config::RunConfig;
use crate::error::Result;
use crate::provenance::Provenance;

pub const DEFAULT_NOISE_JSON: &str = include_str!("../config/default_noise.json");

pub const READOUT_FLIP_0TO1: f64 = 0.02;
pub const READOUT_FLIP_1TO0: f64 = 0.01;
pub const TARGET_GAP: f64 = 0.02;
const BISECTION_STEPS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseFile {
    pub noise: NoiseModel,
    pub calibration: Option<Calibration>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemGap {
    pub problem: String,
    pub exact_accuracy: f64,
    pub sampler_accuracy: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub target_gap: f64,
    pub achieved_gap: f64,
    pub noise_seeds: usize,
    pub shots: u32,
    pub problems: Vec<ProblemGap>,
    pub provenance: Provenance,
}

pub fn default_noise_file() -> NoiseFile {
    serde_json::from_str(DEFAULT_NOISE_JSON).expect("shipped noise file parses")
}

pub fn default_noise() -> NoiseModel {
    default_noise_file().noise
}

fn with_depolarizing(p: f64) -> NoiseModel {
    NoiseModel {
        depolarizing_p: p,
        readout_flip_0to1: READOUT_FLIP_0TO1,
        readout_flip_1to0: READOUT_FLIP_1TO0,
    }
}

/// Trains a model per binary configuration and bisects the depolarizing
/// strength so that the mean test-set gap matches `target_gap`.
///
/// Configurations for three-class problems are skipped.
pub fn calibrate(cfgs: &[RunConfig], target_gap: f64) -> Result<NoiseFile> {
    let cfgs: Vec<RunConfig> = cfgs
        .iter()
        .filter(|c| c.problem.num_classes() == 2)
        .map(|c| RunConfig {
            noise: with_depolarizing(0.0),
            ..c.clone()
        })
        .collect();
    if cfgs.is_empty() {
        return Err(crate::error::CliError::Config("calibration needs a binary problem".into()));
    }
    let mut cases = Vec::new();
    for cfg in &cfgs {
        let sets = make_datasets(cfg)?;
        let trained = train_model(cfg, &sets.train, &sets.test)?;
        let exact = trained.test_accuracy();
        cases.push((cfg, trained.params, sets.test, exact));
    }
    let gaps_at = |p: f64| -> Result<Vec<ProblemGap>> {
        cases
            .iter()
            .map(|(cfg, params, test, exact)| {
                let acc =
                    sampler_mean_accuracy(params, test, with_depolarizing(p), cfg.shots, cfg.seeds.sampler, cfg.noise_seeds)?;
                Ok(ProblemGap {
                    problem: cfg.problem.name().into(),
                    exact_accuracy: *exact,
                    sampler_accuracy: acc,
                    gap: exact - acc,
                })
            })
            .collect()
    };
    let mean_gap = |g: &[ProblemGap]| g.iter().map(|g| g.gap).sum::<f64>() / g.len() as f64;

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut best = (0.0, gaps_at(0.0)?);
    if mean_gap(&best.1) < target_gap {
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            let g = gaps_at(mid)?;
            let m = mean_gap(&g);
            log::info!("depolarizing {mid:.6}: mean gap {m:.5}");
            if (m - target_gap).abs() <= (mean_gap(&best.1) - target_gap).abs() {
                best = (mid, g);
            }
            if m < target_gap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let (p, problems) = best;
    Ok(NoiseFile {
        noise: with_depolarizing(p),
        calibration: Some(Calibration {
            target_gap,
            achieved_gap: mean_gap(&problems),
            noise_seeds: cfgs[0].noise_seeds,
            shots: cfgs[0].shots,
            problems,
            provenance: Provenance::for_many("calibrate-noise", &cfgs),
        }),
    })
}

pub fn binary_problems() -> impl Iterator<Item = Problem> {
    Problem::ALL.into_iter().filter(|p| p.num_classes() == 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_noise_is_valid() {
        let f = default_noise_file();
        f.noise.validate().unwrap();
        assert_eq!(f.noise.readout_flip_0to1, READOUT_FLIP_0TO1);
        assert_eq!(f.noise.readout_flip_1to0, READOUT_FLIP_1TO0);
        assert!(f.noise.depolarizing_p > 0.0 && f.noise.depolarizing_p < 1.0);
    }
}
