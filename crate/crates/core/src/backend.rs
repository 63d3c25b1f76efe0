//! Execution backends and readout-based classification.
//!
//! The exact backend reports the Born probability of outcome 0 together with
//! the nearest integer counts. The shot sampler applies the program exactly,
//! shrinks the final Bloch vector by the depolarizing factor, applies
//! asymmetric readout flips and draws `shots` Bernoulli outcomes from a
//! ChaCha8 substream keyed by `(seed, program index, basis)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Point2;
use crate::model::{LabelSet, UqcParams};
use crate::qmath::{bloch_of, BlochVec, PureState};
use crate::transpiler::{compile_point, program_unitary, Basis, NativeProgram, TranspileError};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("unsupported gate: CZ on a single-qubit backend")]
    UnsupportedGate,
    #[error("counts in slot `{slot}` were measured in basis {found:?}")]
    BasisMismatch { slot: &'static str, found: Basis },
    #[error("three-class readout needs X-basis counts")]
    MissingXBasis,
    #[error("counts are empty")]
    NoShots,
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("label set has {labels} classes but the model has {model}")]
    ClassMismatch { labels: usize, model: usize },
    #[error(transparent)]
    Transpile(#[from] TranspileError),
}

/// Outcome counts in one basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub basis: Basis,
    pub n0: u64,
    pub n1: u64,
    /// Exact probability of outcome 0; present only for the exact backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_p0: Option<f64>,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.n0 + self.n1
    }

    /// `⟨σ⟩ = p0 − p1`, exact when available, otherwise from counts.
    pub fn expectation(&self) -> Result<f64, BackendError> {
        if let Some(p0) = self.exact_p0 {
            return Ok(2.0 * p0 - 1.0);
        }
        let total = self.total();
        if total == 0 {
            return Err(BackendError::NoShots);
        }
        Ok((self.n0 as f64 - self.n1 as f64) / total as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub depolarizing_p: f64,
    pub readout_flip_0to1: f64,
    pub readout_flip_1to0: f64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        for (name, v) in [
            ("depolarizing_p", self.depolarizing_p),
            ("readout_flip_0to1", self.readout_flip_0to1),
            ("readout_flip_1to0", self.readout_flip_1to0),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(BackendError::InvalidNoise(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Probability of reading 0 for a final Bloch z-component `z`.
    pub fn readout_p0(&self, z: f64) -> f64 {
        let p0 = (1.0 + (1.0 - self.depolarizing_p) * z) / 2.0;
        let p0 = p0.clamp(0.0, 1.0);
        p0 * (1.0 - self.readout_flip_0to1) + (1.0 - p0) * self.readout_flip_1to0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Backend {
    Exact,
    Sampler { seed: u64, noise: NoiseModel },
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Sampler { .. } => "sampler",
        }
    }
}

/// Final Bloch vector of a program acting on `|0⟩` (measurement excluded).
pub fn program_bloch(prog: &NativeProgram) -> Result<BlochVec<f64>, BackendError> {
    let u = program_unitary::<f64>(&prog.gates).map_err(|e| match e {
        TranspileError::CzNotSupported => BackendError::UnsupportedGate,
        other => other.into(),
    })?;
    Ok(bloch_of(&u.apply(&PureState::zero())))
}

/// Runs one program. `program_index` selects the sampler substream.
pub fn run_program(prog: &NativeProgram, backend: &Backend, program_index: u64) -> Result<Counts, BackendError> {
    if prog.shots == 0 {
        return Err(BackendError::NoShots);
    }
    let z = program_bloch(prog)?.z;
    let shots = u64::from(prog.shots);
    match backend {
        Backend::Exact => {
            let p0 = ((1.0 + z) / 2.0).clamp(0.0, 1.0);
            let n0 = (shots as f64 * p0).round() as u64;
            Ok(Counts {
                basis: prog.basis,
                n0,
                n1: shots - n0,
                exact_p0: Some(p0),
            })
        }
        Backend::Sampler { seed, noise } => {
            noise.validate()?;
            let p0 = noise.readout_p0(z);
            let mut rng = substream(*seed, program_index, prog.basis);
            let n0 = (0..shots).filter(|_| rng.random::<f64>() < p0).count() as u64;
            Ok(Counts {
                basis: prog.basis,
                n0,
                n1: shots - n0,
                exact_p0: None,
            })
        }
    }
}

/// Independent stream for one (program, basis) pair.
pub fn substream(seed: u64, program_index: u64, basis: Basis) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(program_index * 2 + basis.index());
    rng
}

/// Bloch estimate `(x̂, 0, ẑ)`; `x̂ = 0` without X-basis counts.
pub fn estimate_bloch(z_counts: &Counts, x_counts: Option<&Counts>) -> Result<BlochVec<f64>, BackendError> {
    if z_counts.basis != Basis::Z {
        return Err(BackendError::BasisMismatch {
            slot: "z",
            found: z_counts.basis,
        });
    }
    let z = z_counts.expectation()?;
    let x = match x_counts {
        Some(c) if c.basis != Basis::X => {
            return Err(BackendError::BasisMismatch {
                slot: "x",
                found: c.basis,
            })
        }
        Some(c) => c.expectation()?,
        None => 0.0,
    };
    Ok(BlochVec::new(x, 0.0, z))
}

/// Closest label state to the estimated Bloch vector.
pub fn classify_from_counts(z_counts: &Counts, x_counts: Option<&Counts>, labels: &LabelSet<f64>) -> Result<usize, BackendError> {
    if labels.len() > 2 && x_counts.is_none() {
        return Err(BackendError::MissingXBasis);
    }
    let r = estimate_bloch(z_counts, x_counts)?;
    Ok(labels.closest(&r))
}

/// Measurement bases needed to tell `num_classes` label states apart.
pub fn bases_for(num_classes: usize) -> &'static [Basis] {
    if num_classes > 2 {
        &[Basis::Z, Basis::X]
    } else {
        &[Basis::Z]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointInference {
    pub point: [f64; 2],
    pub z_counts: Counts,
    pub x_counts: Option<Counts>,
    pub bloch_estimate: BlochVec<f64>,
    pub predicted_label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceRun {
    pub records: Vec<PointInference>,
    pub total_measurements: u64,
}

impl InferenceRun {
    pub fn predictions(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.predicted_label).collect()
    }

    /// Fraction of predictions equal to `truth`.
    pub fn accuracy(&self, truth: &[usize]) -> f64 {
        let hits = self
            .records
            .iter()
            .zip(truth)
            .filter(|(r, t)| r.predicted_label == **t)
            .count();
        hits as f64 / self.records.len().max(1) as f64
    }
}

/// Compile, execute and classify every point. Point `i` uses sampler
/// substreams `(seed, i, basis)`, so results do not depend on scheduling.
pub fn infer_dataset(
    params: &UqcParams<f64>,
    points: &[Point2],
    labels: &LabelSet<f64>,
    backend: &Backend,
    shots: u32,
    model_id: &str,
) -> Result<InferenceRun, BackendError> {
    if labels.len() != params.num_classes {
        return Err(BackendError::ClassMismatch {
            labels: labels.len(),
            model: params.num_classes,
        });
    }
    if shots == 0 {
        return Err(BackendError::NoShots);
    }
    if let Backend::Sampler { noise, .. } = backend {
        noise.validate()?;
    }
    let bases = bases_for(labels.len());
    let records = points
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mut z_counts = None;
            let mut x_counts = None;
            for &basis in bases {
                let prog = compile_point(params, x, basis, shots, model_id)?;
                let counts = run_program(&prog, backend, i as u64)?;
                match basis {
                    Basis::Z => z_counts = Some(counts),
                    Basis::X => x_counts = Some(counts),
                }
            }
            let z_counts = z_counts.expect("Z basis is always measured");
            let bloch_estimate = estimate_bloch(&z_counts, x_counts.as_ref())?;
            Ok(PointInference {
                point: [x.x1, x.x2],
                z_counts,
                x_counts,
                bloch_estimate,
                predicted_label: labels.closest(&bloch_estimate),
            })
        })
        .collect::<Result<Vec<_>, BackendError>>()?;
    let total_measurements = points.len() as u64 * bases.len() as u64 * u64::from(shots);
    Ok(InferenceRun {
        records,
        total_measurements,
    })
}
