//! Gaussian-process surrogates for inputs that mix numeric and categorical
//! variables. Categorical level combinations are embedded in a learned
//! low-dimensional latent space (LMGP), with plain GP and per-variable
//! latent (LVGP) models as baselines.

pub mod bayesopt;
pub mod data;
pub mod error;
pub mod gp;
pub mod io;
pub mod latent;
pub mod optimize;
pub mod schema;
pub mod testbed;

pub use bayesopt::{bo_run, bo_step, expected_improvement, BoConfig, BoTrajectory, CandidatePool, Direction, StopRule};
pub use data::{MixedDataset, MixedSample};
pub use error::{Error, Result};
pub use gp::{FittedModel, Hyperparameters, MeanBasis, ModelKind, PredictivePoint};
pub use optimize::{fit_with_continuation, FitConfig, ModelSpec};
pub use schema::{CategoricalSchema, CategoricalVariable, InputSpace, Level, NumericVariable};
