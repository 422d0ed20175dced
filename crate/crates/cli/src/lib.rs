//! Experiment harness behind the `lmgp` binary: config parsing, the
//! experiment runners and result writers.

pub mod artifact;
pub mod config;
pub mod experiments;
pub mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lmgp::latent::latent_positions;
use lmgp::{fit_with_continuation, FittedModel};

use crate::artifact::ModelArtifact;
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::experiments::{fmt, kind_name, ResultRecord};
use crate::output::{write_timing, CsvTable};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("model artifact error: {0}")]
    Artifact(String),
    #[error(transparent)]
    Model(#[from] lmgp::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for configuration and other fatal errors.
    pub fn exit_code(&self) -> i32 {
        1
    }
}

/// Whether every job of a run succeeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    PartialFailure,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Success => 0,
            Self::PartialFailure => 2,
        }
    }

    fn from_failures(any: bool) -> Self {
        if any {
            Self::PartialFailure
        } else {
            Self::Success
        }
    }
}

/// Runs one subcommand and writes its outputs under `cfg.output.dir`.
pub fn run(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    cfg.validate(kind)?;
    std::fs::create_dir_all(&cfg.output.dir)?;
    match kind {
        ExperimentKind::Fit => run_fit(cfg),
        ExperimentKind::Predict => run_predict(cfg),
        ExperimentKind::Latent => run_latent(cfg),
        ExperimentKind::Sweep => {
            let records = experiments::run_sweep(cfg)?;
            write_records(cfg, "sweep.csv", &records)
        }
        ExperimentKind::Varlen => {
            let records = experiments::run_varlen(cfg)?;
            write_records(cfg, "varlen.csv", &records)
        }
        ExperimentKind::Sensitivity => run_sensitivity(cfg),
        ExperimentKind::Bo => run_bo(cfg),
    }
}

fn out(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.output.dir.join(name)
}

fn write_records(cfg: &ExperimentConfig, name: &str, records: &[ResultRecord]) -> Result<Outcome, CliError> {
    let mut t = CsvTable::new(ResultRecord::HEADER);
    let mut timing = Vec::new();
    for r in records {
        t.push(r.fields());
        timing.push((
            format!("{}/{}/n{}/v{}/r{}", r.model, r.function, r.n_train, fmt(r.noise_variance), r.replicate),
            r.wall_time,
        ));
    }
    let path = out(cfg, name);
    t.write(&path, &cfg.hash)?;
    write_timing(&path, &timing)?;
    Ok(Outcome::from_failures(records.iter().any(ResultRecord::failed)))
}

fn artifact_path(cfg: &ExperimentConfig, kind: lmgp::ModelKind) -> PathBuf {
    match &cfg.data.artifact {
        Some(p) if cfg.model.kinds.len() == 1 => p.clone(),
        _ => out(cfg, &format!("model-{}.json", kind_name(kind))),
    }
}

fn run_fit(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (train, held) = experiments::fit_data(cfg)?;
    let mut t = CsvTable::new([
        "model",
        "n_train",
        "objective",
        "process_variance",
        "noise_variance",
        "holdout_mse",
        "status",
    ]);
    let mut timing = Vec::new();
    let mut failed = false;
    for &kind in &cfg.model.kinds {
        let start = std::time::Instant::now();
        let result = fit_with_continuation(&train, &cfg.fit_config(kind, experiments::fit_seed(cfg), train.space().dx()));
        timing.push((kind_name(kind).to_string(), start.elapsed()));
        match result {
            Ok(model) => {
                let holdout = match &held {
                    Some((x, y)) if !x.is_empty() => {
                        let pred: Vec<f64> = model.predict_many(x)?.iter().map(|p| p.mean).collect();
                        fmt(lmgp::testbed::mse(&pred, y)?)
                    }
                    _ => String::new(),
                };
                let path = artifact_path(cfg, kind);
                if let Some(dir) = path.parent() {
                    std::fs::create_dir_all(dir)?;
                }
                ModelArtifact::from_model(&model).save(&path)?;
                t.push(vec![
                    kind_name(kind).into(),
                    train.len().to_string(),
                    fmt(model.objective()),
                    fmt(model.process_variance()),
                    fmt(model.noise_variance()),
                    holdout,
                    "ok".into(),
                ]);
            }
            Err(e) => {
                failed = true;
                t.push(vec![
                    kind_name(kind).into(),
                    train.len().to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    format!("failed: {e}"),
                ]);
            }
        }
    }
    let path = out(cfg, "fit.csv");
    t.write(&path, &cfg.hash)?;
    write_timing(&path, &timing)?;
    Ok(Outcome::from_failures(failed))
}

fn load_model(path: &Path) -> Result<FittedModel, CliError> {
    ModelArtifact::load(path)?.to_model()
}

fn require_artifact(cfg: &ExperimentConfig) -> Result<&Path, CliError> {
    cfg.data
        .artifact
        .as_deref()
        .ok_or_else(|| CliError::Config("[data] artifact (a model written by `fit`) is required".into()))
}

fn run_predict(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let model = load_model(require_artifact(cfg)?)?;
    let inputs = cfg
        .data
        .inputs
        .as_deref()
        .ok_or_else(|| CliError::Config("[data] inputs (CSV with columns x1..x{dx},t1..t{dt}) is required".into()))?;
    let file = std::fs::File::open(inputs)?;
    let (samples, _) = lmgp::io::read_samples(file, model.train().space())?;
    let mut t = CsvTable::new(["mean", "variance"]);
    for p in model.predict_many(&samples)? {
        t.push(vec![fmt(p.mean), fmt(p.variance)]);
    }
    t.write(&out(cfg, "predictions.csv"), &cfg.hash)?;
    Ok(Outcome::Success)
}

fn run_latent(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let model = match &cfg.data.artifact {
        Some(p) => load_model(p)?,
        None => {
            let (train, _) = experiments::fit_data(cfg)?;
            fit_with_continuation(
                &train,
                &cfg.fit_config(cfg.model.kinds[0], experiments::fit_seed(cfg), train.space().dx()),
            )?
        }
    };
    let mut t = CsvTable::new(["combo", "z1", "z2"]);
    for p in latent_positions(&model)? {
        t.push(vec![p.label, fmt(p.z[0]), fmt(p.z[1])]);
    }
    t.write(&out(cfg, "latent.csv"), &cfg.hash)?;
    Ok(Outcome::Success)
}

fn run_sensitivity(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut t = CsvTable::new(["input", "index"]);
    for e in experiments::run_sensitivity(cfg)? {
        t.push(vec![e.input, fmt(e.index)]);
    }
    t.write(&out(cfg, "sensitivity.csv"), &cfg.hash)?;
    Ok(Outcome::Success)
}

fn run_bo(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let pool = experiments::candidate_pool(cfg)?;
    if cfg.bo.init_size >= pool.len() {
        return Err(CliError::Config(format!(
            "[bo] init_size {} must be smaller than the pool ({} candidates)",
            cfg.bo.init_size,
            pool.len()
        )));
    }
    let runs = experiments::run_bo_race(cfg, &pool);
    let schema = &pool.space().categorical;
    let mut traj = CsvTable::new(["model", "seed", "iter", "index", "combo", "y", "incumbent"]);
    let mut hist: BTreeMap<(String, usize), usize> = BTreeMap::new();
    let mut timing = Vec::new();
    let mut failed = false;
    for r in &runs {
        timing.push((format!("{}/{}", r.model, r.seed_index), r.wall_time));
        match &r.result {
            Ok(t) => {
                failed |= t.aborted.is_some();
                for s in &t.steps {
                    traj.push(vec![
                        r.model.clone(),
                        r.seed_index.to_string(),
                        s.iteration.to_string(),
                        s.index.to_string(),
                        schema.combination_label(&pool.samples()[s.index].t),
                        fmt(s.y),
                        fmt(s.incumbent),
                    ]);
                }
                if t.aborted.is_none() {
                    *hist.entry((r.model.clone(), t.additional_evaluations)).or_default() += 1;
                }
            }
            Err(_) => failed = true,
        }
    }
    let path = out(cfg, "bo_trajectories.csv");
    traj.write(&path, &cfg.hash)?;
    write_timing(&path, &timing)?;

    let mut summary = CsvTable::new(["model", "runs", "completed", "found", "mean_additional"]);
    for s in experiments::summarize_race(&runs) {
        summary.push(vec![
            s.model,
            s.runs.to_string(),
            s.completed.to_string(),
            s.found.to_string(),
            fmt(s.mean_additional),
        ]);
    }
    summary.write(&out(cfg, "bo_summary.csv"), &cfg.hash)?;

    // histogram rows follow the race's model order
    let mut histogram = CsvTable::new(["model", "additional", "count"]);
    let mut order: Vec<&str> = Vec::new();
    for r in &runs {
        if !order.contains(&r.model.as_str()) {
            order.push(&r.model);
        }
    }
    for m in order {
        for ((model, k), c) in hist.iter().filter(|((model, _), _)| model == m) {
            histogram.push(vec![model.clone(), k.to_string(), c.to_string()]);
        }
    }
    histogram.write(&out(cfg, "bo_histogram.csv"), &cfg.hash)?;
    Ok(Outcome::from_failures(failed))
}
