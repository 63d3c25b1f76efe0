//! Pipeline steps behind the subcommands. Every file written here starts
//! with (or embeds) a [`Provenance`] record.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use uqc::backend::{infer_dataset, InferenceRun};
use uqc::data::generate;
use uqc::model::{LabelSet, ModelFile};
use uqc::qmath::BlochVec;
use uqc::trainer::train;
use uqc::transpiler::{compile_point, Basis, NativeProgram};
use uqc::{Backend, Counts, Dataset, NoiseModel, Point2, Problem, TrainMetrics, UqcParamsF64};

use crate::config::{hash_hex, RunConfig};
use crate::error::{CliError, Result};
use crate::provenance::Provenance;

pub const TRAIN_CSV: &str = "train.csv";
pub const TEST_CSV: &str = "test.csv";
pub const INFER_CSV: &str = "infer.csv";
pub const MODEL_JSON: &str = "model.json";
pub const METRICS_JSONL: &str = "metrics.jsonl";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SUMMARY_CSV: &str = "summary.csv";

pub fn infer_report_name(tag: &str) -> String {
    format!("infer_{tag}.jsonl")
}

pub fn plot_name(tag: &str) -> String {
    format!("plot_{tag}.csv")
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn to_line<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("record serializes")
}

/// Provenance line, then one line per record, then an optional trailer.
fn write_jsonl<T: Serialize>(path: &Path, prov: &Provenance, records: &[T], trailer: Option<Value>) -> Result<()> {
    let mut out = to_line(&json!({ "provenance": prov }));
    out.push('\n');
    for r in records {
        out.push_str(&to_line(r));
        out.push('\n');
    }
    if let Some(t) = trailer {
        out.push_str(&to_line(&t));
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

fn write_csv_rows<T: Serialize>(path: &Path, prov: &Provenance, rows: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "{}", prov.csv_comment()).expect("writing to a Vec cannot fail");
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in rows {
            w.serialize(r)
                .map_err(|e| CliError::io(path, std::io::Error::other(e)))?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    write_file(path, &buf)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    if !path.exists() {
        return Err(CliError::Config(format!("dataset {} does not exist", path.display())));
    }
    Ok(Dataset::load_csv(path)?)
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    if !path.exists() {
        return Err(CliError::Config(format!("model {} does not exist", path.display())));
    }
    Ok(ModelFile::load(path)?)
}

fn require_problem(cfg: &RunConfig, found: Problem, what: &str) -> Result<()> {
    if found != cfg.problem {
        return Err(CliError::Config(format!(
            "{what} is for problem {found} ({} classes) but the configuration says {} ({} classes)",
            found.num_classes(),
            cfg.problem,
            cfg.problem.num_classes()
        )));
    }
    Ok(())
}

pub struct Datasets {
    pub train: Dataset,
    pub test: Dataset,
    pub infer: Dataset,
}

pub fn make_datasets(cfg: &RunConfig) -> Result<Datasets> {
    Ok(Datasets {
        train: generate(cfg.problem, cfg.sizes.train, cfg.seeds.train_data())?,
        test: generate(cfg.problem, cfg.sizes.test, cfg.seeds.test_data())?,
        infer: generate(cfg.problem, cfg.sizes.infer, cfg.seeds.infer_data())?,
    })
}

pub fn write_dataset(ds: &Dataset, path: &Path, prov: &Provenance) -> Result<()> {
    let tags = prov.tags();
    let tags: Vec<(&str, &str)> = tags.iter().map(|(k, v)| (*k, v.as_str())).collect();
    let mut buf = Vec::new();
    ds.write_csv_tagged(&mut buf, &tags)?;
    write_file(path, &buf)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataFiles {
    pub train: PathBuf,
    pub test: PathBuf,
    pub infer: PathBuf,
}

/// Writes the training, test and inference sets into `out`.
pub fn gen_data(cfg: &RunConfig, out: &Path) -> Result<DataFiles> {
    let prov = Provenance::new("gen-data", cfg);
    let sets = make_datasets(cfg)?;
    create_dir(out)?;
    let files = DataFiles {
        train: out.join(TRAIN_CSV),
        test: out.join(TEST_CSV),
        infer: out.join(INFER_CSV),
    };
    write_dataset(&sets.train, &files.train, &prov)?;
    write_dataset(&sets.test, &files.test, &prov)?;
    write_dataset(&sets.infer, &files.infer, &prov)?;
    Ok(files)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub restart: usize,
    pub init_seed: u64,
    pub shuffle_seed: u64,
    /// Test accuracy of the parameters the run returned.
    pub selected_accuracy: f64,
    pub selected_epoch: usize,
    pub final_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub params: UqcParamsF64,
    pub metrics: TrainMetrics,
    pub restarts: Vec<RestartSummary>,
    pub selected_restart: usize,
    /// Learning curves of every restart, selected one included.
    pub runs: Vec<TrainMetrics>,
    /// Wall-clock seconds per restart.
    pub seconds: Vec<f64>,
}

impl Trained {
    pub fn test_accuracy(&self) -> f64 {
        self.restarts[self.selected_restart].selected_accuracy
    }
}

/// Trains `cfg.training.restarts` models and keeps the one whose returned
/// parameters score best on the test set (earliest restart on ties).
pub fn train_model(cfg: &RunConfig, train_set: &Dataset, test_set: &Dataset) -> Result<Trained> {
    require_problem(cfg, train_set.problem, "training data")?;
    require_problem(cfg, test_set.problem, "test data")?;
    let mut best: Option<(f64, usize, UqcParamsF64, TrainMetrics)> = None;
    let mut restarts = Vec::with_capacity(cfg.training.restarts);
    let mut seconds = Vec::with_capacity(cfg.training.restarts);
    let mut runs = Vec::with_capacity(cfg.training.restarts);
    for r in 0..cfg.training.restarts {
        let tcfg = cfg.train_config(r);
        let start = Instant::now();
        let (params, metrics) = train::<f64>(train_set, test_set, cfg.layers, &cfg.adam, &tcfg, cfg.init_seed(r))?;
        seconds.push(start.elapsed().as_secs_f64());
        let selected_accuracy = metrics.epochs[metrics.selected_epoch - 1].test_accuracy;
        log::info!(
            "restart {r}: epoch {} accuracy {selected_accuracy:.4}",
            metrics.selected_epoch
        );
        restarts.push(RestartSummary {
            restart: r,
            init_seed: cfg.init_seed(r),
            shuffle_seed: tcfg.shuffle_seed,
            selected_accuracy,
            selected_epoch: metrics.selected_epoch,
            final_accuracy: metrics.final_accuracy(),
        });
        if best.as_ref().is_none_or(|(acc, ..)| selected_accuracy > *acc) {
            best = Some((selected_accuracy, r, params, metrics.clone()));
        }
        runs.push(metrics);
    }
    let (_, selected_restart, params, metrics) = best.expect("at least one restart");
    Ok(Trained {
        params,
        metrics,
        restarts,
        selected_restart,
        runs,
        seconds,
    })
}

pub fn model_file(cfg: &RunConfig, trained: &Trained, prov: &Provenance) -> ModelFile {
    let sel = &trained.restarts[trained.selected_restart];
    let mut mf = ModelFile::from_params(&trained.params, cfg.problem.name(), sel.init_seed);
    mf.provenance = Some(json!({
        "run": prov,
        "selected_restart": trained.selected_restart,
        "selected_epoch": sel.selected_epoch,
        "restarts": trained.restarts,
    }));
    mf
}

/// Problem name plus a digest of the parameters.
pub fn model_id(mf: &ModelFile) -> String {
    let digest = hash_hex(to_line(&mf.params).as_bytes());
    format!("{}-{}", mf.problem_name, &digest[..12])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsLine {
    pub epoch: usize,
    pub mean_batch_cost: f64,
    pub test_accuracy: f64,
    pub seconds: Option<f64>,
}

pub fn metrics_lines(metrics: &TrainMetrics, record_timing: bool) -> Vec<MetricsLine> {
    metrics
        .epochs
        .iter()
        .map(|e| MetricsLine {
            epoch: e.epoch,
            mean_batch_cost: e.mean_batch_cost,
            test_accuracy: e.test_accuracy,
            seconds: record_timing.then_some(e.seconds),
        })
        .collect()
}

fn write_training(cfg: &RunConfig, trained: &Trained, prov: &Provenance, out: &Path) -> Result<ModelFile> {
    create_dir(out)?;
    let mf = model_file(cfg, trained, prov);
    let path = out.join(MODEL_JSON);
    write_file(&path, (mf.to_json() + "\n").as_bytes())?;
    write_jsonl(
        &out.join(METRICS_JSONL),
        prov,
        &metrics_lines(&trained.metrics, cfg.record_timing),
        None,
    )?;
    Ok(mf)
}

/// Trains on the given CSVs and writes `model.json` and `metrics.jsonl`.
pub fn cmd_train(cfg: &RunConfig, train_csv: &Path, test_csv: &Path, out: &Path) -> Result<Trained> {
    let train_set = load_dataset(train_csv)?;
    let test_set = load_dataset(test_csv)?;
    let trained = train_model(cfg, &train_set, &test_set)?;
    write_training(cfg, &trained, &Provenance::new("train", cfg), out)?;
    Ok(trained)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub point: [f64; 2],
    pub basis_counts: BTreeMap<String, Counts>,
    pub bloch_estimate: BlochVec<f64>,
    pub predicted_label: usize,
    pub true_label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferSummary {
    pub accuracy: f64,
    pub total_measurements: u64,
    pub points: usize,
    pub shots: u32,
    pub backend: String,
    pub noise: Option<NoiseModel>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub x1: f64,
    pub x2: f64,
    pub predicted_label: usize,
}

fn truth(ds: &Dataset) -> Vec<usize> {
    ds.points.iter().map(|p| p.label).collect()
}

fn points(ds: &Dataset) -> Vec<Point2> {
    ds.points.iter().map(|p| p.point).collect()
}

pub fn run_inference(
    params: &UqcParamsF64,
    ds: &Dataset,
    backend: &Backend,
    shots: u32,
    model_id: &str,
) -> Result<(InferenceRun, InferSummary)> {
    let labels = LabelSet::<f64>::new(params.num_classes)?;
    let run = infer_dataset(params, &points(ds), &labels, backend, shots, model_id)?;
    let (noise, seed) = match backend {
        Backend::Exact => (None, None),
        Backend::Sampler { seed, noise } => (Some(*noise), Some(*seed)),
    };
    let summary = InferSummary {
        accuracy: run.accuracy(&truth(ds)),
        total_measurements: run.total_measurements,
        points: ds.len(),
        shots,
        backend: backend.name().into(),
        noise,
        seed,
    };
    Ok((run, summary))
}

/// Mean sampler accuracy over seeds `seed0, seed0 + 1, …`.
pub fn sampler_mean_accuracy(
    params: &UqcParamsF64,
    ds: &Dataset,
    noise: NoiseModel,
    shots: u32,
    seed0: u64,
    repeats: usize,
) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..repeats {
        let backend = Backend::Sampler {
            seed: seed0.wrapping_add(k as u64),
            noise,
        };
        total += run_inference(params, ds, &backend, shots, "")?.1.accuracy;
    }
    Ok(total / repeats as f64)
}

/// Writes `infer_<tag>.jsonl` and `plot_<tag>.csv`.
pub fn write_inference(
    out: &Path,
    tag: &str,
    prov: &Provenance,
    run: &InferenceRun,
    ds: &Dataset,
    summary: &InferSummary,
) -> Result<()> {
    create_dir(out)?;
    let records: Vec<PointRecord> = run
        .records
        .iter()
        .zip(&ds.points)
        .map(|(r, lp)| {
            let mut basis_counts = BTreeMap::new();
            basis_counts.insert("z".to_string(), r.z_counts);
            if let Some(x) = r.x_counts {
                basis_counts.insert("x".to_string(), x);
            }
            PointRecord {
                point: r.point,
                basis_counts,
                bloch_estimate: r.bloch_estimate,
                predicted_label: r.predicted_label,
                true_label: lp.label,
            }
        })
        .collect();
    write_jsonl(
        &out.join(infer_report_name(tag)),
        prov,
        &records,
        Some(json!({ "summary": summary })),
    )?;
    let plot: Vec<PlotRow> = run
        .records
        .iter()
        .map(|r| PlotRow {
            x1: r.point[0],
            x2: r.point[1],
            predicted_label: r.predicted_label,
        })
        .collect();
    write_csv_rows(&out.join(plot_name(tag)), prov, &plot)
}

/// Runs the configured backend over a labelled CSV and writes the report.
pub fn cmd_infer(cfg: &RunConfig, model_path: &Path, data_path: &Path, out: &Path) -> Result<InferSummary> {
    let mf = load_model(model_path)?;
    let model_problem: Problem = mf
        .problem_name
        .parse()
        .map_err(|e| CliError::Config(format!("model {}: {e}", model_path.display())))?;
    require_problem(cfg, model_problem, "the model")?;
    if mf.num_classes != cfg.problem.num_classes() {
        return Err(CliError::Config(format!(
            "model has {} classes, problem {} has {}",
            mf.num_classes,
            cfg.problem,
            cfg.problem.num_classes()
        )));
    }
    let ds = load_dataset(data_path)?;
    require_problem(cfg, ds.problem, "inference data")?;
    let params = mf.to_params()?;
    let backend = cfg.backend();
    let (run, summary) = run_inference(&params, &ds, &backend, cfg.shots, &model_id(&mf))?;
    write_inference(out, backend.name(), &Provenance::new("infer", cfg), &run, &ds, &summary)?;
    Ok(summary)
}

/// Compiles one input point of a saved model into a native program.
pub fn cmd_transpile(model_path: &Path, x: Point2, basis: Basis, shots: u32) -> Result<NativeProgram> {
    if !x.x1.is_finite() || !x.x2.is_finite() {
        return Err(CliError::Config("point coordinates must be finite".into()));
    }
    if shots == 0 {
        return Err(CliError::Config("shots must be at least 1".into()));
    }
    let mf = load_model(model_path)?;
    let params = mf.to_params()?;
    let mut prog = compile_point(&params, &x, basis, shots, &model_id(&mf))?;
    let mut prov = mf
        .provenance
        .as_ref()
        .and_then(|p| p.get("run"))
        .cloned()
        .unwrap_or_else(|| json!({ "tool": crate::provenance::TOOL, "version": crate::provenance::VERSION }));
    if let Some(obj) = prov.as_object_mut() {
        obj.insert("command".into(), json!("transpile"));
    }
    prog.meta.provenance = Some(prov);
    Ok(prog)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub problem: String,
    pub layers: usize,
    pub classes: usize,
    /// Test accuracy of the selected model.
    pub test_accuracy: f64,
    pub first_epoch_at_90: Option<usize>,
    pub selected_restart: usize,
    pub selected_epoch: usize,
    pub ideal_accuracy: f64,
    pub sampler_accuracy: f64,
    pub sampler_mean_accuracy: f64,
    /// `ideal_accuracy − sampler_mean_accuracy`.
    pub gap: f64,
    pub points: usize,
    pub measurements: u64,
    pub train_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub provenance: Provenance,
    pub noise: NoiseModel,
    pub noise_seeds: usize,
    pub rows: Vec<SummaryRow>,
}

/// Full pipeline for each configuration: data, training, exact and
/// sampler inference, plot data and a summary table.
pub fn reproduce(cfgs: &[RunConfig], out: &Path) -> Result<Summary> {
    if cfgs.is_empty() {
        return Err(CliError::Config("nothing to reproduce".into()));
    }
    create_dir(out)?;
    let mut rows = Vec::with_capacity(cfgs.len());
    for cfg in cfgs {
        let dir = out.join(cfg.problem.name());
        create_dir(&dir)?;
        let prov = Provenance::new("reproduce", cfg);
        let sets = make_datasets(cfg)?;
        write_dataset(&sets.train, &dir.join(TRAIN_CSV), &prov)?;
        write_dataset(&sets.test, &dir.join(TEST_CSV), &prov)?;
        write_dataset(&sets.infer, &dir.join(INFER_CSV), &prov)?;

        let trained = train_model(cfg, &sets.train, &sets.test)?;
        let mf = write_training(cfg, &trained, &prov, &dir)?;
        let id = model_id(&mf);

        let (exact_run, exact) = run_inference(&trained.params, &sets.infer, &Backend::Exact, cfg.shots, &id)?;
        write_inference(&dir, "exact", &prov, &exact_run, &sets.infer, &exact)?;
        let sampler_backend = cfg.sampler(cfg.seeds.sampler);
        let (sampler_run, sampler) = run_inference(&trained.params, &sets.infer, &sampler_backend, cfg.shots, &id)?;
        write_inference(&dir, "sampler", &prov, &sampler_run, &sets.infer, &sampler)?;
        let mean = sampler_mean_accuracy(
            &trained.params,
            &sets.infer,
            cfg.noise,
            cfg.shots,
            cfg.seeds.sampler,
            cfg.noise_seeds,
        )?;
        let sel = &trained.restarts[trained.selected_restart];
        log::info!(
            "{}: test {:.4} ideal {:.4} sampler {:.4}",
            cfg.problem,
            sel.selected_accuracy,
            exact.accuracy,
            mean
        );
        rows.push(SummaryRow {
            problem: cfg.problem.name().into(),
            layers: cfg.layers,
            classes: cfg.problem.num_classes(),
            test_accuracy: sel.selected_accuracy,
            first_epoch_at_90: trained.metrics.first_epoch_reaching(0.9),
            selected_restart: trained.selected_restart,
            selected_epoch: sel.selected_epoch,
            ideal_accuracy: exact.accuracy,
            sampler_accuracy: sampler.accuracy,
            sampler_mean_accuracy: mean,
            gap: exact.accuracy - mean,
            points: sets.infer.len(),
            measurements: exact.total_measurements,
            train_seconds: cfg.record_timing.then(|| trained.seconds.iter().sum()),
        });
    }
    let summary = Summary {
        provenance: Provenance::for_many("reproduce", cfgs),
        noise: cfgs[0].noise,
        noise_seeds: cfgs[0].noise_seeds,
        rows,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    write_file(&out.join(SUMMARY_JSON), json.as_bytes())?;
    write_csv_rows(&out.join(SUMMARY_CSV), &summary.provenance, &summary.rows)?;
    Ok(summary)
}
