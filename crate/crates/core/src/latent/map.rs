use serde::{Deserialize, Serialize};

use super::prior::PriorEncoder;
use crate::error::{invalid, Result};
use crate::schema::{CategoricalSchema, Level};

/// Learned categorical parameterization of a mixed-input kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LatentMap {
    /// z(t) = ζ(t)·A with A stored row-major as p × d_z.
    Lmgp {
        encoder: PriorEncoder,
        a: Vec<f64>,
        latent_dim: usize,
    },
    /// One latent space per variable; `points[i]` is m_i × d_z row-major.
    Lvgp {
        schema: CategoricalSchema,
        points: Vec<Vec<f64>>,
        latent_dim: usize,
    },
}

impl LatentMap {
    pub fn lmgp(encoder: PriorEncoder, a: Vec<f64>, latent_dim: usize) -> Result<Self> {
        if a.len() != encoder.width() * latent_dim {
            return invalid(format!(
                "mapping matrix has {} entries, expected {}x{}",
                a.len(),
                encoder.width(),
                latent_dim
            ));
        }
        Ok(Self::Lmgp {
            encoder,
            a,
            latent_dim,
        })
    }

    pub fn lvgp(schema: CategoricalSchema, points: Vec<Vec<f64>>, latent_dim: usize) -> Result<Self> {
        if points.len() != schema.len() {
            return invalid("one point table per categorical variable is required");
        }
        for (v, p) in schema.variables().iter().zip(&points) {
            if p.len() != v.level_count() * latent_dim {
                return invalid(format!("latent table for '{}' has the wrong size", v.name));
            }
        }
        Ok(Self::Lvgp {
            schema,
            points,
            latent_dim,
        })
    }

    pub fn schema(&self) -> &CategoricalSchema {
        match self {
            Self::Lmgp { encoder, .. } => encoder.schema(),
            Self::Lvgp { schema, .. } => schema,
        }
    }

    pub fn latent_dim(&self) -> usize {
        match self {
            Self::Lmgp { latent_dim, .. } | Self::Lvgp { latent_dim, .. } => *latent_dim,
        }
    }

    /// Length of the vector returned by [`position`](Self::position). LVGP
    /// concatenates its per-variable spaces, so squared distances add up.
    pub fn position_len(&self) -> usize {
        match self {
            Self::Lmgp { latent_dim, .. } => *latent_dim,
            Self::Lvgp {
                schema, latent_dim, ..
            } => schema.len() * latent_dim,
        }
    }

    pub fn position(&self, combo: &[Level]) -> Result<Vec<f64>> {
        match self {
            Self::Lmgp {
                encoder,
                a,
                latent_dim,
            } => {
                let zeta = encoder.row(combo)?;
                map_to_latent(&zeta, a, *latent_dim)
            }
            Self::Lvgp {
                schema,
                points,
                latent_dim,
            } => {
                schema.validate(combo)?;
                let mut z = Vec::with_capacity(self.position_len());
                for (p, l) in points.iter().zip(combo) {
                    let Some(l) = l else {
                        return invalid("LVGP cannot encode NaN levels");
                    };
                    z.extend_from_slice(&p[(l - 1) * latent_dim..l * latent_dim]);
                }
                Ok(z)
            }
        }
    }
}

/// Row-vector times matrix: `zeta` (length p) times `a` (p × d_z, row-major).
pub fn map_to_latent(zeta: &[f64], a: &[f64], latent_dim: usize) -> Result<Vec<f64>> {
    if latent_dim == 0 || a.len() != zeta.len() * latent_dim {
        return invalid(format!(
            "cannot multiply a length-{} prior by a {}-entry map with {} columns",
            zeta.len(),
            a.len(),
            latent_dim
        ));
    }
    let mut z = vec![0.0; latent_dim];
    for (zi, row) in zeta.iter().zip(a.chunks_exact(latent_dim)) {
        if *zi != 0.0 {
            for (acc, v) in z.iter_mut().zip(row) {
                *acc += zi * v;
            }
        }
    }
    Ok(z)
}

/// Which coordinates of LVGP point `j` are free, and whether each must be
/// nonnegative. Point 0 sits at the origin; point `j ≤ d_z` lives in the
/// first `j` axes with its last one nonnegative.
pub(crate) fn lvgp_free_coords(point: usize, latent_dim: usize) -> impl Iterator<Item = (usize, bool)> {
    let free = point.min(latent_dim);
    (0..free).map(move |c| (c, point <= latent_dim && c + 1 == point))
}

/// Free-parameter count for a variable with `m` levels; 2m − 3 when d_z = 2.
pub fn lvgp_free_count(m: usize, latent_dim: usize) -> usize {
    (0..m).map(|j| j.min(latent_dim)).sum()
}

/// Expand free LVGP coordinates into the full m × d_z table.
pub fn lvgp_points_from_free(free: &[f64], m: usize, latent_dim: usize) -> Result<Vec<f64>> {
    if free.len() != lvgp_free_count(m, latent_dim) {
        return invalid("wrong number of free LVGP coordinates");
    }
    let mut pts = vec![0.0; m * latent_dim];
    let mut k = 0;
    for j in 0..m {
        for (c, _) in lvgp_free_coords(j, latent_dim) {
            pts[j * latent_dim + c] = free[k];
            k += 1;
        }
    }
    Ok(pts)
}

/// Correlation of the LVGP kernel with explicit per-variable level points
/// (`points[i][level - 1]` is a coordinate vector).
pub fn lvgp_correlation(
    x: &[f64],
    t: &[Level],
    x2: &[f64],
    t2: &[Level],
    omega: &[f64],
    points: &[Vec<Vec<f64>>],
) -> Result<f64> {
    if t.len() != points.len() || t2.len() != points.len() {
        return invalid("level vectors must match the number of latent tables");
    }
    let mut exponent = 0.0;
    for ((a, b), p) in t.iter().zip(t2).zip(points) {
        let (Some(a), Some(b)) = (a, b) else {
            return invalid("LVGP cannot encode NaN levels");
        };
        let (Some(za), Some(zb)) = (p.get(a.wrapping_sub(1)), p.get(b.wrapping_sub(1))) else {
            return invalid("level index out of range");
        };
        exponent += za.iter().zip(zb).map(|(u, v)| (u - v) * (u - v)).sum::<f64>();
    }
    exponent += crate::gp::kernel::weighted_sq_distance(x, x2, omega)?;
    Ok((-exponent).exp())
}

/// Rigid transform of a 2D point set so that row 0 is the origin, the first
/// row away from it lies on the positive z₁ axis and the next off-axis row
/// has z₂ ≥ 0. All-coincident inputs map to zeros.
pub fn canonicalize_latent(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    if points.is_empty() {
        return Vec::new();
    }
    let origin = points[0];
    let shifted: Vec<[f64; 2]> = points
        .iter()
        .map(|p| [p[0] - origin[0], p[1] - origin[1]])
        .collect();
    let scale = shifted
        .iter()
        .map(|p| p[0].hypot(p[1]))
        .fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return vec![[0.0, 0.0]; points.len()];
    }
    let eps = 1e-12 * scale;
    let Some(anchor) = shifted.iter().position(|p| p[0].hypot(p[1]) > eps) else {
        return vec![[0.0, 0.0]; points.len()];
    };
    let r = shifted[anchor][0].hypot(shifted[anchor][1]);
    let (c, s) = (shifted[anchor][0] / r, shifted[anchor][1] / r);
    let mut rotated: Vec<[f64; 2]> = shifted
        .iter()
        .map(|p| [c * p[0] + s * p[1], -s * p[0] + c * p[1]])
        .collect();
    rotated[0] = [0.0, 0.0];
    rotated[anchor] = [r, 0.0];
    let flip = rotated[anchor + 1..]
        .iter()
        .find(|p| p[1].abs() > eps)
        .is_some_and(|p| p[1] < 0.0);
    if flip {
        for p in &mut rotated {
            p[1] = -p[1];
        }
    }
    rotated
}
