//! Experiment runners. Each returns plain records; writing them out is the
//! caller's job so the same code backs the binary and the test suites.

use std::time::{Duration, Instant};

use lmgp::bayesopt::{bo_run, random_search, BoConfig, BoTrajectory, CandidatePool, StopRule};
use lmgp::latent::NanFill;
use lmgp::testbed::{
    add_noise, apply_variable_length_pattern, mse, noise_presets, sample_mixed_design_with, total_effect_indices,
    BenchmarkFunction, FunctionId, NoiseSpec, SobolSampler, TotalEffect,
};
use lmgp::{fit_with_continuation, FitConfig, FittedModel, MixedDataset, MixedSample, ModelKind};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, NoiseLevel};
use crate::CliError;

/// Derives an independent seed from a base seed and a path of labels.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    // splitmix64 finalizer applied after each label
    let mut s = base;
    for &p in path {
        s = s.wrapping_add(p.wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(0x6A09_E667_F3BC_C909);
        let mut z = s;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        s = z ^ (z >> 31);
    }
    s
}

const TRAIN_DESIGN: u64 = 1;
const TEST_DESIGN: u64 = 2;
const TRAIN_NOISE: u64 = 3;
const TEST_NOISE: u64 = 4;
const FIT: u64 = 5;
const NAN_PRIOR: u64 = 6;
const POOL: u64 = 7;
const BO_SEED: u64 = 8;
const SPLIT: u64 = 9;

/// Noisy train and test data for one replicate of a benchmark cell.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub train: MixedDataset,
    pub test_x: Vec<MixedSample>,
    pub test_y: Vec<f64>,
    pub seed: u64,
}

/// Replicate `replicate` of a benchmark function: digitally shifted Sobol
/// train and test designs with IID noise added to both. The designs depend
/// only on (seed, function, replicate), so train sizes nest and models see
/// the same data.
pub fn benchmark_replicate(
    f: &BenchmarkFunction,
    n_train: usize,
    n_test: usize,
    noise: f64,
    seed: u64,
    replicate: usize,
    variable_length: bool,
) -> Result<Replicate, lmgp::Error> {
    let rep_seed = derive_seed(seed, &[u64::from(f.id.number()), replicate as u64]);
    let dim = f.dx() + f.dt();
    let design = |stream: u64, n: usize| -> Result<Vec<MixedSample>, lmgp::Error> {
        let sampler = SobolSampler::new(dim)?.with_digital_shift(derive_seed(rep_seed, &[stream]));
        let mut xs = sample_mixed_design_with(f, &sampler, n, 1)?;
        if variable_length {
            for w in &mut xs {
                w.t = apply_variable_length_pattern(&w.t);
            }
        }
        Ok(xs)
    };
    let train_x = design(TRAIN_DESIGN, n_train)?;
    let test_x = design(TEST_DESIGN, n_test)?;
    let eval = |xs: &[MixedSample]| xs.iter().map(|w| f.eval(w)).collect::<Result<Vec<_>, _>>();
    let noise_seed = |stream: u64| NoiseSpec {
        variance: noise,
        seed: derive_seed(rep_seed, &[stream, noise.to_bits()]),
    };
    let train_y = add_noise(&eval(&train_x)?, noise_seed(TRAIN_NOISE))?;
    let test_y = add_noise(&eval(&test_x)?, noise_seed(TEST_NOISE))?;
    let space = if variable_length {
        f.variable_length_space()?
    } else {
        f.space()
    };
    Ok(Replicate {
        train: MixedDataset::new(space, train_x, train_y)?,
        test_x,
        test_y,
        seed: rep_seed,
    })
}

/// One row of a sweep or variable-length result table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub experiment: String,
    pub model: String,
    pub function: String,
    pub n_train: usize,
    pub noise_variance: f64,
    pub replicate: usize,
    pub seed: u64,
    pub outcome: Result<CellMetrics, String>,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMetrics {
    pub test_mse: f64,
    /// Fitted δσ̂² on the response scale.
    pub noise_estimate: f64,
    pub objective: f64,
}

impl ResultRecord {
    pub fn failed(&self) -> bool {
        self.outcome.is_err()
    }

    pub const HEADER: [&'static str; 11] = [
        "experiment",
        "model",
        "function",
        "n_train",
        "noise_variance",
        "replicate",
        "seed",
        "test_mse",
        "noise_estimate",
        "objective",
        "status",
    ];

    pub fn fields(&self) -> Vec<String> {
        let (m, n, o, status) = match &self.outcome {
            Ok(c) => (fmt(c.test_mse), fmt(c.noise_estimate), fmt(c.objective), "ok".to_string()),
            Err(e) => (String::new(), String::new(), String::new(), format!("failed: {e}")),
        };
        vec![
            self.experiment.clone(),
            self.model.clone(),
            self.function.clone(),
            self.n_train.to_string(),
            fmt(self.noise_variance),
            self.replicate.to_string(),
            self.seed.to_string(),
            m,
            n,
            o,
            status,
        ]
    }
}

/// Shortest round-trip decimal form.
pub fn fmt(v: f64) -> String {
    format!("{v:?}")
}

/// Fits on a replicate's training data and scores on its test data.
pub fn fit_and_score(rep: &Replicate, fit: &FitConfig) -> Result<(FittedModel, CellMetrics), lmgp::Error> {
    let model = fit_with_continuation(&rep.train, fit)?;
    let pred: Vec<f64> = model.predict_many(&rep.test_x)?.iter().map(|p| p.mean).collect();
    let metrics = CellMetrics {
        test_mse: mse(&pred, &rep.test_y)?,
        noise_estimate: model.noise_variance(),
        objective: model.objective(),
    };
    Ok((model, metrics))
}

/// A sweep cell: one (function, model, n_train, noise, replicate).
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub function: FunctionId,
    pub kind: ModelKind,
    pub n_train: usize,
    pub noise: f64,
    pub replicate: usize,
}

pub fn resolve_noise(f: &BenchmarkFunction, levels: &[NoiseLevel]) -> Result<Vec<f64>, lmgp::Error> {
    let needs_presets = levels.iter().any(|l| matches!(l, NoiseLevel::Preset(_)));
    let presets = if needs_presets { noise_presets(f)? } else { [0.0; 3] };
    Ok(levels
        .iter()
        .map(|l| match l {
            NoiseLevel::Variance(v) => *v,
            NoiseLevel::Preset(p) => presets[p.index()],
        })
        .collect())
}

pub fn sweep_cells(cfg: &ExperimentConfig, function: FunctionId) -> Result<Vec<SweepCell>, CliError> {
    let f = BenchmarkFunction::new(function);
    let noises = resolve_noise(&f, &cfg.sweep.noise)?;
    let mut cells = Vec::new();
    for &kind in &cfg.model.kinds {
        for &n_train in &cfg.sweep.train_sizes {
            for &noise in &noises {
                for replicate in 0..cfg.sweep.replicates {
                    cells.push(SweepCell {
                        function,
                        kind,
                        n_train,
                        noise,
                        replicate,
                    });
                }
            }
        }
    }
    Ok(cells)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

/// Runs one sweep cell; failures are captured in the record.
pub fn run_sweep_cell(cfg: &ExperimentConfig, cell: &SweepCell) -> (ResultRecord, Option<FittedModel>) {
    let seed = cfg.experiment.seed;
    let f = BenchmarkFunction::new(cell.function);
    let ((outcome, model, rep_seed), wall_time) = timed(|| {
        let rep = match benchmark_replicate(&f, cell.n_train, cfg.sweep.test_size, cell.noise, seed, cell.replicate, false) {
            Ok(r) => r,
            Err(e) => return (Err(e.to_string()), None, 0),
        };
        let fit = cfg.fit_config(cell.kind, derive_seed(rep.seed, &[FIT, cell.n_train as u64]), f.dx());
        match fit_and_score(&rep, &fit) {
            Ok((m, metrics)) => (Ok(metrics), Some(m), rep.seed),
            Err(e) => (Err(e.to_string()), None, rep.seed),
        }
    });
    let record = ResultRecord {
        experiment: cfg.experiment.id.clone(),
        model: kind_name(cell.kind).into(),
        function: cell.function.name().into(),
        n_train: cell.n_train,
        noise_variance: cell.noise,
        replicate: cell.replicate,
        seed: rep_seed,
        outcome,
        wall_time,
    };
    (record, model)
}

pub fn kind_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Gp => "gp",
        ModelKind::Lmgp => "lmgp",
        ModelKind::Lvgp => "lvgp",
    }
}

/// Benchmark sweep over every configured cell, in cell order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>, CliError> {
    let cells = sweep_cells(cfg, cfg.require_function()?)?;
    Ok(cells.par_iter().map(|c| run_sweep_cell(cfg, c).0).collect())
}

/// NaN-handling strategies compared by the variable-length experiment.
pub fn nan_strategies(rep_seed: u64) -> [(&'static str, NanFill); 2] {
    [
        ("lmgp-nan-zero", NanFill::Zero),
        (
            "lmgp-nan-random",
            NanFill::Random {
                seed: derive_seed(rep_seed, &[NAN_PRIOR]),
            },
        ),
    ]
}

/// Variable-length experiment: LMGP under both NaN strategies on data whose
/// level combinations follow the variable-length pattern.
pub fn run_varlen(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>, CliError> {
    let function = cfg.require_function()?;
    if !matches!(function, FunctionId::Borehole | FunctionId::Olt) {
        return Err(CliError::Config(format!(
            "the variable-length experiment supports borehole and olt, not {function}"
        )));
    }
    let f = BenchmarkFunction::new(function);
    let noises = resolve_noise(&f, &cfg.sweep.noise)?;
    let mut cells = Vec::new();
    for &n_train in &cfg.sweep.train_sizes {
        for &noise in &noises {
            for replicate in 0..cfg.sweep.replicates {
                for strategy in 0..2 {
                    cells.push((n_train, noise, replicate, strategy));
                }
            }
        }
    }
    let seed = cfg.experiment.seed;
    Ok(cells
        .par_iter()
        .map(|&(n_train, noise, replicate, strategy)| {
            let ((outcome, model, rep_seed), wall_time) = timed(|| {
                let rep = match benchmark_replicate(&f, n_train, cfg.sweep.test_size, noise, seed, replicate, true) {
                    Ok(r) => r,
                    Err(e) => return (Err(e.to_string()), "lmgp", 0),
                };
                let (label, fill) = nan_strategies(rep.seed)[strategy];
                let mut fit = cfg.fit_config(ModelKind::Lmgp, derive_seed(rep.seed, &[FIT, n_train as u64]), f.dx());
                fit.model.nan_fill = fill;
                (fit_and_score(&rep, &fit).map(|(_, m)| m).map_err(|e| e.to_string()), label, rep.seed)
            });
            ResultRecord {
                experiment: cfg.experiment.id.clone(),
                model: model.into(),
                function: function.name().into(),
                n_train,
                noise_variance: noise,
                replicate,
                seed: rep_seed,
                outcome,
                wall_time,
            }
        })
        .collect())
}

pub fn run_sensitivity(cfg: &ExperimentConfig) -> Result<Vec<TotalEffect>, CliError> {
    let f = BenchmarkFunction::new(cfg.require_function()?);
    Ok(total_effect_indices(&f, cfg.sensitivity.n_base, cfg.experiment.seed)?)
}

/// Candidate pool from the configured CSV, or drawn from a benchmark
/// function as a digitally shifted Sobol design with exact responses.
pub fn candidate_pool(cfg: &ExperimentConfig) -> Result<CandidatePool, CliError> {
    if let Some(path) = &cfg.data.candidates {
        return lmgp::io::load_candidate_csv(path).map_err(|e| {
            CliError::Config(format!(
                "cannot load candidates from {}: {e} (expected CSV columns x1..x{{dx}},t1..t{{dt}},y)",
                path.display()
            ))
        });
    }
    let Some(function) = cfg.function()? else {
        return Err(CliError::Config(
            "bo needs [data] candidates (CSV with columns x1..x{dx},t1..t{dt},y) or [data] function".into(),
        ));
    };
    Ok(synthetic_pool(function, cfg.bo.pool_size, cfg.experiment.seed)?)
}

pub fn synthetic_pool(function: FunctionId, size: usize, seed: u64) -> Result<CandidatePool, lmgp::Error> {
    let f = BenchmarkFunction::new(function);
    let sampler = SobolSampler::new(f.dx() + f.dt())?.with_digital_shift(derive_seed(seed, &[POOL]));
    let xs = sample_mixed_design_with(&f, &sampler, size, 1)?;
    let ys = xs.iter().map(|w| f.eval(w)).collect::<Result<Vec<_>, _>>()?;
    CandidatePool::new(f.space(), xs, Some(ys))
}

/// One BO run (or baseline run) of a race.
#[derive(Debug, Clone)]
pub struct RaceRun {
    pub model: String,
    pub seed_index: usize,
    pub result: Result<BoTrajectory, String>,
    pub wall_time: Duration,
}

pub const RANDOM_BASELINE: &str = "random";

/// Runs BO for every configured model kind and seed, plus the random
/// baseline. Run `s` of every model shares the same initial draw.
pub fn run_bo_race(cfg: &ExperimentConfig, pool: &CandidatePool) -> Vec<RaceRun> {
    let stop = cfg.bo.budget.map_or(StopRule::TargetFound, StopRule::Budget);
    let mut jobs: Vec<(Option<ModelKind>, usize)> = Vec::new();
    for &k in &cfg.model.kinds {
        jobs.extend((0..cfg.bo.seeds).map(|s| (Some(k), s)));
    }
    if cfg.bo.random_baseline {
        jobs.extend((0..cfg.bo.seeds).map(|s| (None, s)));
    }
    jobs.par_iter()
        .map(|&(kind, s)| {
            let seed = derive_seed(cfg.experiment.seed, &[BO_SEED, s as u64]);
            let mut pool = pool.clone();
            let (result, wall_time) = timed(|| match kind {
                Some(k) => {
                    let config = BoConfig {
                        init_size: cfg.bo.init_size,
                        direction: cfg.bo.direction,
                        stop,
                        seed,
                        fit: cfg.fit_config(k, derive_seed(seed, &[FIT]), pool.space().dx()),
                        warm_start: cfg.optimizer.warm_start,
                    };
                    bo_run(&mut pool, &config)
                }
                None => random_search(&mut pool, cfg.bo.init_size, cfg.bo.direction, seed, stop),
            });
            RaceRun {
                model: kind.map_or(RANDOM_BASELINE, kind_name).into(),
                seed_index: s,
                result: result.map_err(|e| e.to_string()),
                wall_time,
            }
        })
        .collect()
}

/// Per-model mean additional evaluations over completed runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RaceSummary {
    pub model: String,
    pub runs: usize,
    pub completed: usize,
    pub found: usize,
    pub mean_additional: f64,
}

pub fn summarize_race(runs: &[RaceRun]) -> Vec<RaceSummary> {
    let mut models: Vec<&str> = Vec::new();
    for r in runs {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    models
        .into_iter()
        .map(|m| {
            let mine: Vec<&RaceRun> = runs.iter().filter(|r| r.model == m).collect();
            let done: Vec<&BoTrajectory> = mine
                .iter()
                .filter_map(|r| r.result.as_ref().ok())
                .filter(|t| t.aborted.is_none())
                .collect();
            let total: usize = done.iter().map(|t| t.additional_evaluations).sum();
            RaceSummary {
                model: m.to_string(),
                runs: mine.len(),
                completed: done.len(),
                found: done.iter().filter(|t| t.found_target).count(),
                mean_additional: if done.is_empty() {
                    f64::NAN
                } else {
                    total as f64 / done.len() as f64
                },
            }
        })
        .collect()
}

/// Training data for `fit`: a dataset CSV, or replicate 0 of a benchmark
/// function at the first configured train size and noise level. The
/// optional held-out part comes from a seeded shuffle of the dataset, or
/// from the benchmark test design.
pub fn fit_data(cfg: &ExperimentConfig) -> Result<(MixedDataset, Option<(Vec<MixedSample>, Vec<f64>)>), CliError> {
    if let Some(path) = &cfg.data.dataset {
        let data = lmgp::io::load_dataset_csv(path)
            .map_err(|e| CliError::Config(format!("cannot load dataset {}: {e}", path.display())))?;
        let Some(frac) = cfg.data.train_fraction.filter(|f| *f < 1.0) else {
            return Ok((data, None));
        };
        let mut idx: Vec<usize> = (0..data.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.experiment.seed, &[SPLIT])));
        let n_train = ((data.len() as f64 * frac).round() as usize).clamp(1, data.len());
        let (tr, te) = idx.split_at(n_train);
        let (mut tr, mut te) = (tr.to_vec(), te.to_vec());
        tr.sort_unstable();
        te.sort_unstable();
        let train = data.select(&tr)?;
        let held = te.iter().map(|&i| data.samples()[i].clone()).collect();
        let held_y = te.iter().map(|&i| data.y()[i]).collect();
        return Ok((train, Some((held, held_y))));
    }
    let function = cfg.function()?.ok_or_else(|| {
        CliError::Config("fit needs [data] dataset (CSV with columns x1..x{dx},t1..t{dt},y) or [data] function".into())
    })?;
    let f = BenchmarkFunction::new(function);
    let noise = resolve_noise(&f, &cfg.sweep.noise[..1.min(cfg.sweep.noise.len())])?
        .first()
        .copied()
        .unwrap_or(0.0);
    let rep = benchmark_replicate(&f, cfg.sweep.train_sizes[0], cfg.sweep.test_size, noise, cfg.experiment.seed, 0, false)?;
    Ok((rep.train, Some((rep.test_x, rep.test_y))))
}

pub fn fit_seed(cfg: &ExperimentConfig) -> u64 {
    derive_seed(cfg.experiment.seed, &[FIT])
}
