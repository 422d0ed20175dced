//! Self-describing JSON model artifacts.

use std::path::Path;

use lmgp::gp::Standardization;
use lmgp::{FittedModel, Hyperparameters, MixedDataset, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT: &str = "lmgp-model";
pub const FORMAT_VERSION: u32 = 1;

/// Everything needed to rebuild a fitted model. The training data is
/// embedded and the model is re-conditioned on load; the stored β̂ and σ̂²
/// are checked against the recomputed values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format: String,
    pub format_version: u32,
    pub tool_version: String,
    pub spec: ModelSpec,
    pub hyperparameters: Hyperparameters,
    pub standardization: Standardization,
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub objective: f64,
    pub train: MixedDataset,
}

impl ModelArtifact {
    pub fn from_model(model: &FittedModel) -> Self {
        Self {
            format: FORMAT.into(),
            format_version: FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            spec: model.spec().clone(),
            hyperparameters: model.hyperparameters().clone(),
            standardization: model.standardization().clone(),
            beta: model.beta().to_vec(),
            sigma2: model.sigma2(),
            objective: model.objective(),
            train: model.train().clone(),
        }
    }

    pub fn to_model(&self) -> Result<FittedModel, CliError> {
        if self.format != FORMAT || self.format_version != FORMAT_VERSION {
            return Err(CliError::Artifact(format!(
                "unsupported artifact {} v{} (this tool reads {FORMAT} v{FORMAT_VERSION})",
                self.format, self.format_version
            )));
        }
        let train = MixedDataset::new(self.train.space().clone(), self.train.samples().to_vec(), self.train.y().to_vec())
            .map_err(|e| CliError::Artifact(format!("embedded training data: {e}")))?;
        let model = FittedModel::condition(train, &self.spec, self.hyperparameters.clone())
            .map_err(|e| CliError::Artifact(e.to_string()))?;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-8 * a.abs().max(b.abs()).max(1e-300);
        let consistent = model.standardization() == &self.standardization
            && model.beta().len() == self.beta.len()
            && model.beta().iter().zip(&self.beta).all(|(a, b)| close(*a, *b))
            && close(model.sigma2(), self.sigma2);
        if !consistent {
            return Err(CliError::Artifact(
                "stored estimates do not match the re-conditioned model".into(),
            ));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Artifact(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Artifact(format!("{}: {e}", path.display())))
    }
}
