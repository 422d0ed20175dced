//! Gaussian-process core: correlation functions, the profile likelihood and
//! the predictive distribution.

pub mod kernel;
pub mod likelihood;
pub mod linalg;
pub mod model;

use serde::{Deserialize, Serialize};

use crate::latent::LatentMap;

pub use kernel::{build_correlation_matrix, gaussian_correlation, mixed_correlation};
pub use likelihood::{neg_log_profile_likelihood, neg_log_profile_likelihood_with_basis};
pub use linalg::{profile_beta, profile_sigma2, Sigma2};
pub use model::{FittedModel, PredictivePoint, Standardization};

/// Diagonal jitter added before every Cholesky factorization. It repairs
/// conditioning only and is not part of the statistical nugget δ.
pub const CHOLESKY_JITTER: f64 = 1e-12;

/// Which categorical treatment a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Plain Gaussian process; categorical level indices become numeric inputs.
    Gp,
    /// Latent map from a prior encoding of the whole level combination.
    Lmgp,
    /// Independent constrained latent space per categorical variable.
    Lvgp,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Gp => "gp",
            Self::Lmgp => "lmgp",
            Self::Lvgp => "lvgp",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gp" => Ok(Self::Gp),
            "lmgp" => Ok(Self::Lmgp),
            "lvgp" => Ok(Self::Lvgp),
            other => Err(crate::Error::InvalidArgument(format!("unknown model kind '{other}'"))),
        }
    }
}

/// Kernel hyperparameters. `omega` holds log10 roughness values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub omega: Vec<f64>,
    pub map: Option<LatentMap>,
    pub delta: f64,
}

impl Hyperparameters {
    pub fn numeric(omega: Vec<f64>, delta: f64) -> Self {
        Self {
            omega,
            map: None,
            delta,
        }
    }
}

/// Mean basis as a list of monomials; each term is a product of
/// `x[dim]^power` factors and the empty product is the constant 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanBasis {
    pub terms: Vec<Vec<(usize, u32)>>,
}

impl Default for MeanBasis {
    fn default() -> Self {
        Self::constant()
    }
}

impl MeanBasis {
    /// Ordinary kriging.
    pub fn constant() -> Self {
        Self {
            terms: vec![Vec::new()],
        }
    }

    /// Constant plus one linear term per input.
    pub fn linear(dim: usize) -> Self {
        let mut terms = vec![Vec::new()];
        terms.extend((0..dim).map(|d| vec![(d, 1)]));
        Self { terms }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn has_constant(&self) -> bool {
        self.terms.iter().any(|t| t.is_empty())
    }

    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        self.terms
            .iter()
            .map(|t| t.iter().map(|&(d, p)| x[d].powi(p as i32)).product())
            .collect()
    }

    pub(crate) fn check(&self, dim: usize) -> crate::Result<()> {
        if self.terms.is_empty() {
            return Err(crate::Error::InvalidArgument("mean basis is empty".into()));
        }
        if self.terms.iter().flatten().any(|&(d, _)| d >= dim) {
            return Err(crate::Error::InvalidArgument(format!(
                "mean basis refers to an input beyond the {dim} model inputs"
            )));
        }
        Ok(())
    }
}
