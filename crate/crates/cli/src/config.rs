//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use lmgp::bayesopt::Direction;
use lmgp::gp::MeanBasis;
use lmgp::latent::PriorStrategy;
use lmgp::optimize::{FitConfig, LbfgsOptions};
use lmgp::testbed::FunctionId;
use lmgp::{ModelKind, ModelSpec};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Fit,
    Predict,
    Latent,
    Sweep,
    Varlen,
    Sensitivity,
    Bo,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fit => "fit",
            Self::Predict => "predict",
            Self::Latent => "latent",
            Self::Sweep => "sweep",
            Self::Varlen => "varlen",
            Self::Sensitivity => "sensitivity",
            Self::Bo => "bo",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub id: String,
    /// When present it must agree with the subcommand.
    pub kind: Option<ExperimentKind>,
    pub seed: u64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            id: "experiment".into(),
            kind: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// Benchmark function by number or name.
    pub function: Option<String>,
    /// Training data CSV (`x1..,t1..,y`).
    pub dataset: Option<PathBuf>,
    /// Candidate pool CSV for `bo`.
    pub candidates: Option<PathBuf>,
    /// Inputs to predict at (`x1..,t1..`).
    pub inputs: Option<PathBuf>,
    /// Model artifact written by `fit`.
    pub artifact: Option<PathBuf>,
    /// Fraction of a dataset used for training; the rest is held out.
    pub train_fraction: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisName {
    #[default]
    Constant,
    Linear,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub kinds: Vec<ModelKind>,
    pub prior: PriorStrategy,
    pub latent_dim: usize,
    pub basis: BasisName,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            kinds: vec![ModelKind::Lmgp],
            prior: PriorStrategy::OneHotGrouped,
            latent_dim: 2,
            basis: BasisName::Constant,
        }
    }
}

/// A noise variance given directly or as a per-function preset.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum NoiseLevel {
    Variance(f64),
    Preset(NoisePreset),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoisePreset {
    Zero,
    Small,
    Large,
}

impl NoisePreset {
    pub fn index(self) -> usize {
        match self {
            Self::Zero => 0,
            Self::Small => 1,
            Self::Large => 2,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub train_sizes: Vec<usize>,
    pub noise: Vec<NoiseLevel>,
    pub replicates: usize,
    pub test_size: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            train_sizes: vec![100, 200, 300, 400],
            noise: vec![
                NoiseLevel::Preset(NoisePreset::Zero),
                NoiseLevel::Preset(NoisePreset::Small),
                NoiseLevel::Preset(NoisePreset::Large),
            ],
            replicates: 10,
            test_size: 10_000,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub n_starts: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub f_tol: f64,
    pub memory: usize,
    pub continuation: bool,
    /// Reuse the previous BO iteration's hyperparameters as a start.
    pub warm_start: bool,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let l = LbfgsOptions::default();
        Self {
            n_starts: 12,
            max_iter: l.max_iter,
            grad_tol: l.grad_tol,
            f_tol: l.f_tol,
            memory: l.memory,
            continuation: true,
            warm_start: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoSection {
    pub seeds: usize,
    pub init_size: usize,
    /// Size of the synthetic pool drawn from a benchmark function.
    pub pool_size: usize,
    pub direction: Direction,
    /// Stop after this many additional evaluations instead of when the
    /// pool optimum is found.
    pub budget: Option<usize>,
    /// Also run the seeded random-search baseline.
    pub random_baseline: bool,
}

impl Default for BoSection {
    fn default() -> Self {
        Self {
            seeds: 30,
            init_size: 40,
            pool_size: 240,
            direction: Direction::Maximize,
            budget: None,
            random_baseline: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivitySection {
    pub n_base: usize,
}

impl Default for SensitivitySection {
    fn default() -> Self {
        Self { n_base: 1 << 14 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub data: DataSection,
    pub model: ModelSection,
    pub sweep: SweepSection,
    pub optimizer: OptimizerSection,
    pub bo: BoSection,
    pub sensitivity: SensitivitySection,
    pub output: OutputSection,
    /// SHA-256 of the config text and effective seed.
    #[serde(skip)]
    pub hash: String,
}

impl ExperimentConfig {
    /// Parses a config; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        resolve(&mut cfg.data.dataset);
        resolve(&mut cfg.data.candidates);
        resolve(&mut cfg.data.inputs);
        resolve(&mut cfg.data.artifact);
        if cfg.output.dir.is_relative() {
            cfg.output.dir = base.join(&cfg.output.dir);
        }
        cfg.rehash(text);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    fn rehash(&mut self, text: &str) {
        let mut h = Sha256::new();
        h.update(text.as_bytes());
        h.update(format!("\nseed={}", self.experiment.seed).as_bytes());
        self.hash = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    }

    /// Replaces the seed and refreshes the hash so outputs record it.
    pub fn set_seed(&mut self, seed: u64, text: &str) {
        self.experiment.seed = seed;
        self.rehash(text);
    }

    pub fn function(&self) -> Result<Option<FunctionId>, CliError> {
        self.data
            .function
            .as_deref()
            .map(|s| s.parse::<FunctionId>().map_err(|e| CliError::Config(e.to_string())))
            .transpose()
    }

    pub fn require_function(&self) -> Result<FunctionId, CliError> {
        self.function()?
            .ok_or_else(|| CliError::Config("[data] function is required for this experiment".into()))
    }

    /// `dx` is the number of numeric inputs, used by the linear basis.
    pub fn model_spec(&self, kind: ModelKind, dx: usize) -> ModelSpec {
        let mut spec = ModelSpec::new(kind);
        spec.prior = self.model.prior;
        spec.latent_dim = self.model.latent_dim;
        spec.basis = match self.model.basis {
            BasisName::Constant => MeanBasis::constant(),
            BasisName::Linear => MeanBasis::linear(dx),
        };
        spec
    }

    pub fn fit_config(&self, kind: ModelKind, seed: u64, dx: usize) -> FitConfig {
        let o = &self.optimizer;
        let mut fit = FitConfig::new(kind, seed);
        fit.model = self.model_spec(kind, dx);
        fit.n_starts = o.n_starts;
        fit.lbfgs = LbfgsOptions {
            memory: o.memory,
            max_iter: o.max_iter,
            grad_tol: o.grad_tol,
            f_tol: o.f_tol,
        };
        fit.continuation = o.continuation;
        fit
    }

    /// Checks invariants that do not depend on the subcommand.
    pub fn validate(&self, kind: ExperimentKind) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        if let Some(k) = self.experiment.kind {
            if k != kind {
                return Err(CliError::Config(format!(
                    "config declares kind {} but the {} subcommand was invoked",
                    k.name(),
                    kind.name()
                )));
            }
        }
        if self.sweep.replicates == 0 {
            return bad("[sweep] replicates must be at least 1");
        }
        if self.sweep.train_sizes.is_empty() || self.sweep.train_sizes.contains(&0) {
            return bad("[sweep] train_sizes must be a nonempty list of positive sizes");
        }
        if self.sweep.test_size == 0 {
            return bad("[sweep] test_size must be positive");
        }
        for n in &self.sweep.noise {
            if let NoiseLevel::Variance(v) = n {
                if !(v.is_finite() && *v >= 0.0) {
                    return bad("[sweep] noise variances must be finite and nonnegative");
                }
            }
        }
        if self.model.kinds.is_empty() {
            return bad("[model] kinds must list at least one model");
        }
        if self.model.latent_dim == 0 {
            return bad("[model] latent_dim must be positive");
        }
        if self.optimizer.n_starts == 0 || self.optimizer.max_iter == 0 || self.optimizer.memory == 0 {
            return bad("[optimizer] n_starts, max_iter and memory must be positive");
        }
        if let Some(f) = self.data.train_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return bad("[data] train_fraction must be in (0, 1]");
            }
        }
        if self.bo.seeds == 0 || self.bo.init_size == 0 {
            return bad("[bo] seeds and init_size must be positive");
        }
        if self.sensitivity.n_base == 0 {
            return bad("[sensitivity] n_base must be positive");
        }
        self.function()?;
        for p in [&self.data.dataset, &self.data.candidates, &self.data.inputs]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                return Err(CliError::Config(format!("file not found: {}", p.display())));
            }
        }
        if kind != ExperimentKind::Fit {
            if let Some(p) = &self.data.artifact {
                if !p.exists() {
                    return Err(CliError::Config(format!("artifact not found: {}", p.display())));
                }
            }
        }
        Ok(())
    }
}
