//! Run configuration and its layering: flags over config file over the
//! built-in defaults table.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use uqc::{AdamConfig, Backend, NoiseModel, Problem, TrainConfig};

use crate::defaults;
use crate::error::{CliError, Result};
use crate::noise::default_noise;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    /// Training set seed; the test and inference sets use `data + 1` and `data + 2`.
    pub data: u64,
    /// Initial parameters of restart `r` use `init + r`.
    pub init: u64,
    /// Batch order of restart `r` uses `shuffle + r`.
    pub shuffle: u64,
    /// Sampler backend seed. Averaged runs use `sampler + k`.
    pub sampler: u64,
}

impl Seeds {
    pub fn train_data(&self) -> u64 {
        self.data
    }

    pub fn test_data(&self) -> u64 {
        self.data.wrapping_add(1)
    }

    pub fn infer_data(&self) -> u64 {
        self.data.wrapping_add(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sizes {
    pub train: usize,
    pub test: usize,
    pub infer: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Training {
    pub epochs: usize,
    pub batch_size: usize,
    /// Independent initialisations; the one with the best test accuracy wins.
    pub restarts: usize,
    /// Keep the best epoch of a run instead of the last one.
    pub keep_best: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Exact,
    Sampler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    pub layers: usize,
    pub adam: AdamConfig,
    pub training: Training,
    pub sizes: Sizes,
    pub backend: BackendKind,
    pub noise: NoiseModel,
    pub shots: u32,
    /// Sampler seeds averaged for the noisy accuracy in summaries.
    pub noise_seeds: usize,
    pub seeds: Seeds,
    /// Record wall-clock seconds in metrics. Off by default so that
    /// outputs are reproducible byte for byte.
    pub record_timing: bool,
    /// Not part of the config hash.
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn defaults(problem: Problem) -> Self {
        let row = defaults::for_problem(problem);
        Self {
            problem,
            layers: row.layers,
            adam: AdamConfig::default(),
            training: Training {
                epochs: defaults::EPOCHS,
                batch_size: defaults::BATCH_SIZE,
                restarts: defaults::RESTARTS,
                keep_best: true,
            },
            sizes: Sizes {
                train: defaults::TRAIN_N,
                test: defaults::TEST_N,
                infer: row.infer_n,
            },
            backend: BackendKind::Exact,
            noise: default_noise(),
            shots: defaults::SHOTS,
            noise_seeds: defaults::NOISE_SEEDS,
            seeds: Seeds {
                data: defaults::DATA_SEED,
                init: defaults::INIT_SEED,
                shuffle: defaults::SHUFFLE_SEED,
                sampler: defaults::SAMPLER_SEED,
            },
            record_timing: false,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.layers == 0 {
            return bad("layers must be at least 1".into());
        }
        if self.sizes.train == 0 || self.sizes.test == 0 || self.sizes.infer == 0 {
            return bad("dataset sizes must be at least 1".into());
        }
        if self.training.epochs == 0 || self.training.restarts == 0 {
            return bad("epochs and restarts must be at least 1".into());
        }
        if self.training.batch_size == 0 || self.training.batch_size > self.sizes.train {
            return bad(format!(
                "batch size {} outside 1..={}",
                self.training.batch_size, self.sizes.train
            ));
        }
        if self.shots == 0 {
            return bad("shots must be at least 1".into());
        }
        if self.noise_seeds == 0 {
            return bad("noise_seeds must be at least 1".into());
        }
        self.adam.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.noise.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    /// Trainer settings for restart `r`.
    pub fn train_config(&self, restart: usize) -> TrainConfig {
        TrainConfig {
            epochs: self.training.epochs,
            batch_size: self.training.batch_size,
            shuffle_seed: self.seeds.shuffle.wrapping_add(restart as u64),
            keep_best: self.training.keep_best,
        }
    }

    pub fn init_seed(&self, restart: usize) -> u64 {
        self.seeds.init.wrapping_add(restart as u64)
    }

    pub fn backend(&self) -> Backend {
        match self.backend {
            BackendKind::Exact => Backend::Exact,
            BackendKind::Sampler => self.sampler(self.seeds.sampler),
        }
    }

    pub fn sampler(&self, seed: u64) -> Backend {
        Backend::Sampler {
            seed,
            noise: self.noise,
        }
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        hash_hex(self.canonical_json().as_bytes())
    }
}

pub fn hash_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Recursively overlays `top` onto `base`. Objects merge key by key, any
/// other value replaces.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

pub fn read_config_file(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if !value.is_object() {
        return Err(CliError::Config(format!("{}: top level must be an object", path.display())));
    }
    Ok(value)
}

fn problem_in(v: &Value) -> Result<Option<Problem>> {
    match v.get("problem") {
        None | Some(Value::Null) => Ok(None),
        Some(p) => serde_json::from_value(p.clone())
            .map(Some)
            .map_err(|e| CliError::Config(format!("problem: {e}"))),
    }
}

/// Builds the effective configuration.
///
/// The problem comes from `flags`, then `file`, then `fallback` (e.g. the
/// problem recorded in an input dataset); the defaults row for that
/// problem is then overlaid with the file and the flags.
pub fn resolve(file: Option<&Value>, flags: &Map<String, Value>, fallback: Option<Problem>) -> Result<RunConfig> {
    let flags = Value::Object(flags.clone());
    let problem = match problem_in(&flags)? {
        Some(p) => p,
        None => match file.map(problem_in).transpose()?.flatten() {
            Some(p) => p,
            None => fallback.ok_or_else(|| CliError::Config("no problem given (use --problem)".into()))?,
        },
    };
    let mut value = serde_json::to_value(RunConfig::defaults(problem)).expect("config serializes");
    if let Some(f) = file {
        merge(&mut value, f.clone());
    }
    merge(&mut value, flags);
    let text = value.to_string();
    let de = &mut serde_json::Deserializer::from_str(&text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Config(format!("at `{}`: {}", e.path(), e.inner())))?;
    cfg.validate()?;
    Ok(cfg)
}
