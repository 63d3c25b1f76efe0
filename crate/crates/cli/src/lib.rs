//! Command-line pipeline around the `uqc` classifier: data generation,
//! training, transpilation, inference and full reproduction runs.

pub mod args;
pub mod commands;
pub mod config;
pub mod defaults;
pub mod error;
pub mod noise;
pub mod provenance;

use std::fs;
use std::path::Path;

use serde_json::Value;
use uqc::{Point2, Problem};

use args::{Command, RunArgs};
use config::{read_config_file, resolve, RunConfig};
pub use error::{CliError, Result};

fn load_file(run: &RunArgs) -> Result<Option<Value>> {
    run.config.as_deref().map(read_config_file).transpose()
}

fn config_for(run: &RunArgs, fallback: Option<Problem>) -> Result<RunConfig> {
    resolve(load_file(run)?.as_ref(), &run.overrides(), fallback)
}

/// One configuration per problem, with the problem forced.
fn configs_for(run: &RunArgs, problems: impl Iterator<Item = Problem>) -> Result<Vec<RunConfig>> {
    let file = load_file(run)?;
    problems
        .map(|p| {
            let mut flags = run.overrides();
            flags.insert("problem".into(), serde_json::json!(p));
            resolve(file.as_ref(), &flags, None)
        })
        .collect()
}

fn csv_problem(path: &Path) -> Option<Problem> {
    uqc::Dataset::load_csv(path).ok().map(|d| d.problem)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Runs one parsed subcommand.
pub fn run(command: Command) -> Result<()> {
    match command {
        Command::GenData { run, out } => {
            let cfg = config_for(&run, None)?;
            let files = commands::gen_data(&cfg, &out)?;
            for p in [&files.train, &files.test, &files.infer] {
                println!("{}", p.display());
            }
        }
        Command::Train {
            run,
            train_csv,
            test_csv,
            out,
        } => {
            let train_csv = train_csv.unwrap_or_else(|| out.join(commands::TRAIN_CSV));
            let test_csv = test_csv.unwrap_or_else(|| out.join(commands::TEST_CSV));
            let cfg = config_for(&run, csv_problem(&train_csv))?;
            let trained = commands::cmd_train(&cfg, &train_csv, &test_csv, &out)?;
            println!(
                "test accuracy {:.4} (restart {}, epoch {})",
                trained.test_accuracy(),
                trained.selected_restart,
                trained.restarts[trained.selected_restart].selected_epoch
            );
        }
        Command::Infer { run, model, data, out } => {
            let model = model.unwrap_or_else(|| out.join(commands::MODEL_JSON));
            let data = data.unwrap_or_else(|| out.join(commands::INFER_CSV));
            let cfg = config_for(&run, csv_problem(&data))?;
            let s = commands::cmd_infer(&cfg, &model, &data, &out)?;
            println!(
                "{} accuracy {:.4} over {} points, {} measurements",
                s.backend, s.accuracy, s.points, s.total_measurements
            );
        }
        Command::Transpile {
            model,
            x1,
            x2,
            basis,
            shots,
            out,
        } => {
            let prog = commands::cmd_transpile(&model, Point2::new(x1, x2), basis.into(), shots)?;
            emit(&(prog.to_json_pretty() + "\n"), out.as_deref())?;
        }
        Command::Reproduce { run, out } => {
            let cfgs = match run.problem {
                Some(p) => configs_for(&run, std::iter::once(p))?,
                None => configs_for(&run, Problem::ALL.into_iter())?,
            };
            let summary = commands::reproduce(&cfgs, &out)?;
            println!("problem       ideal  sampler(mean)  gap");
            for r in &summary.rows {
                println!(
                    "{:<12} {:.4}  {:.4}         {:+.4}",
                    r.problem, r.ideal_accuracy, r.sampler_mean_accuracy, r.gap
                );
            }
        }
        Command::CalibrateNoise { run, target_gap, out } => {
            if !(0.0..1.0).contains(&target_gap) {
                return Err(CliError::Config(format!("target gap {target_gap} outside [0, 1)")));
            }
            let cfgs = match run.problem {
                Some(p) => configs_for(&run, std::iter::once(p))?,
                None => configs_for(&run, noise::binary_problems())?,
            };
            let file = noise::calibrate(&cfgs, target_gap)?;
            let text = serde_json::to_string_pretty(&file).expect("noise file serializes") + "\n";
            emit(&text, out.as_deref())?;
        }
    }
    Ok(())
}
