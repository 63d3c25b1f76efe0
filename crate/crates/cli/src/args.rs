use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use uqc::Problem;

use crate::config::BackendKind;

#[derive(Debug, Parser)]
#[command(name = "uqc", version, about = "Single-qubit re-uploading classifier pipeline")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate training, test and inference CSVs.
    GenData {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Train a model and write model.json plus per-epoch metrics.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Defaults to <out>/train.csv.
        #[arg(long)]
        train_csv: Option<PathBuf>,
        /// Defaults to <out>/test.csv.
        #[arg(long)]
        test_csv: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Classify a labelled CSV through the native-program pipeline.
    Infer {
        #[command(flatten)]
        run: RunArgs,
        /// Defaults to <out>/model.json.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Defaults to <out>/infer.csv.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print the native program for one input point.
    Transpile {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        x1: f64,
        #[arg(long, allow_negative_numbers = true)]
        x2: f64,
        #[arg(long, value_enum, default_value_t = BasisArg::Z)]
        basis: BasisArg,
        #[arg(long, default_value_t = crate::defaults::SHOTS)]
        shots: u32,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate every dataset, model, inference report and summary.
    Reproduce {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "reproduce-out")]
        out: PathBuf,
    },
    /// Fit the default depolarizing strength to a target accuracy gap.
    CalibrateNoise {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = crate::noise::TARGET_GAP)]
        target_gap: f64,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    Z,
    X,
}

impl From<BasisArg> for uqc::Basis {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Z => uqc::Basis::Z,
            BasisArg::X => uqc::Basis::X,
        }
    }
}

/// Flags shared by the configurable subcommands. Unset flags leave the
/// config file or default value in place.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON file with any subset of the run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<Problem>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Return the last epoch's parameters instead of the best one.
    #[arg(long)]
    pub last_epoch: bool,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub train_n: Option<usize>,
    #[arg(long)]
    pub test_n: Option<usize>,
    #[arg(long)]
    pub infer_n: Option<usize>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    #[arg(long)]
    pub depolarizing: Option<f64>,
    #[arg(long)]
    pub readout_0to1: Option<f64>,
    #[arg(long)]
    pub readout_1to0: Option<f64>,
    /// Turn every noise channel off.
    #[arg(long, conflicts_with_all = ["depolarizing", "readout_0to1", "readout_1to0"])]
    pub noiseless: bool,
    #[arg(long)]
    pub shots: Option<u32>,
    #[arg(long)]
    pub noise_seeds: Option<usize>,
    #[arg(long, visible_alias = "data-seed")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub init_seed: Option<u64>,
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
    #[arg(long)]
    pub sampler_seed: Option<u64>,
    /// Record wall-clock seconds in metrics and summaries.
    #[arg(long)]
    pub record_timing: bool,
}

fn put(map: &mut Map<String, Value>, path: &[&str], v: Value) {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = map;
    for p in parents {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| Value::Object(Map::new()))
            .as_object_mut()
            .expect("flag paths do not collide with scalars");
    }
    cur.insert(last.to_string(), v);
}

impl RunArgs {
    /// Flags as a partial configuration object.
    pub fn overrides(&self) -> Map<String, Value> {
        let mut m = Map::new();
        macro_rules! set {
            ($field:expr, $($path:literal).+) => {
                if let Some(v) = &$field {
                    put(&mut m, &[$($path),+], json!(v));
                }
            };
        }
        set!(self.problem, "problem");
        set!(self.layers, "layers");
        set!(self.epochs, "training"."epochs");
        set!(self.batch_size, "training"."batch_size");
        set!(self.restarts, "training"."restarts");
        set!(self.learning_rate, "adam"."learning_rate");
        set!(self.train_n, "sizes"."train");
        set!(self.test_n, "sizes"."test");
        set!(self.infer_n, "sizes"."infer");
        set!(self.backend, "backend");
        set!(self.depolarizing, "noise"."depolarizing_p");
        set!(self.readout_0to1, "noise"."readout_flip_0to1");
        set!(self.readout_1to0, "noise"."readout_flip_1to0");
        set!(self.shots, "shots");
        set!(self.noise_seeds, "noise_seeds");
        set!(self.seed, "seeds"."data");
        set!(self.init_seed, "seeds"."init");
        set!(self.shuffle_seed, "seeds"."shuffle");
        set!(self.sampler_seed, "seeds"."sampler");
        if self.last_epoch {
            put(&mut m, &["training", "keep_best"], json!(false));
        }
        if self.noiseless {
            put(&mut m, &["noise"], json!(uqc::NoiseModel::noiseless()));
        }
        if self.record_timing {
            put(&mut m, &["record_timing"], json!(true));
        }
        m
    }
}
