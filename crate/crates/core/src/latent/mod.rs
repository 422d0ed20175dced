//! Categorical encodings, latent maps and exported latent positions.

pub mod map;
pub mod prior;

use serde::{Deserialize, Serialize};

pub use map::{canonicalize_latent, lvgp_correlation, lvgp_free_count, map_to_latent, LatentMap};
pub use prior::{encode_prior, encode_variable_length, NanFill, PriorEncoder, PriorEncoding, PriorStrategy};

use crate::error::{Error, Result};
use crate::gp::FittedModel;
use crate::schema::Level;

/// One exported latent point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentPosition {
    pub label: String,
    /// The level combination for LMGP rows; empty for LVGP rows, which
    /// describe a single level of a single variable.
    pub combo: Vec<Level>,
    pub z: [f64; 2],
}

/// Canonicalized 2D latent coordinates of a fitted model. LMGP yields one
/// row per level combination in schema order. LVGP yields one row per
/// level of each variable, labelled `variable=level`, canonicalized within
/// each variable's own space.
pub fn latent_positions(model: &FittedModel) -> Result<Vec<LatentPosition>> {
    let Some(map) = &model.hyperparameters().map else {
        return Err(Error::Unsupported("model has no latent map".into()));
    };
    if map.latent_dim() != 2 {
        return Err(Error::Unsupported("latent export requires a 2D latent space".into()));
    }
    match map {
        LatentMap::Lmgp { .. } => {
            let schema = map.schema();
            let combos = schema.combinations();
            let raw = combos
                .iter()
                .map(|c| map.position(c).map(|z| [z[0], z[1]]))
                .collect::<Result<Vec<_>>>()?;
            Ok(canonicalize_latent(&raw)
                .into_iter()
                .zip(combos)
                .map(|(z, combo)| LatentPosition {
                    label: schema.combination_label(&combo),
                    combo,
                    z,
                })
                .collect())
        }
        LatentMap::Lvgp { schema, points, .. } => {
            let mut out = Vec::new();
            for (var, p) in schema.variables().iter().zip(points) {
                let raw: Vec<[f64; 2]> = p.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
                for (z, level) in canonicalize_latent(&raw).into_iter().zip(&var.levels) {
                    out.push(LatentPosition {
                        label: format!("{}={}", var.name, level),
                        combo: Vec::new(),
                        z,
                    });
                }
            }
            Ok(out)
        }
    }
}
