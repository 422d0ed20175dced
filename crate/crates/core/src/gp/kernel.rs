use faer::Mat;

use super::Hyperparameters;
use crate::data::{MixedDataset, MixedSample};
use crate::error::{invalid, Result};

/// Σ 10^ω_i (x_i − x2_i)².
pub fn weighted_sq_distance(x: &[f64], x2: &[f64], omega: &[f64]) -> Result<f64> {
    if x.len() != x2.len() || x.len() != omega.len() {
        return invalid(format!(
            "dimension mismatch: {} vs {} inputs with {} roughness values",
            x.len(),
            x2.len(),
            omega.len()
        ));
    }
    Ok(x.iter()
        .zip(x2)
        .zip(omega)
        .map(|((a, b), w)| 10f64.powf(*w) * (a - b) * (a - b))
        .sum())
}

/// Gaussian correlation exp{−Σ 10^ω_i (x_i − x2_i)²}.
pub fn gaussian_correlation(x: &[f64], x2: &[f64], omega: &[f64]) -> Result<f64> {
    Ok((-weighted_sq_distance(x, x2, omega)?).exp())
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Mixed correlation exp{−‖z(t) − z(t')‖² − Σ 10^ω_i (x_i − x2_i)²}. Inputs
/// are used as given; models apply their own scaling before calling in.
pub fn mixed_correlation(w: &MixedSample, w2: &MixedSample, hypers: &Hyperparameters) -> Result<f64> {
    let numeric = weighted_sq_distance(&w.x, &w2.x, &hypers.omega)?;
    let latent = match &hypers.map {
        Some(map) => sq_dist(&map.position(&w.t)?, &map.position(&w2.t)?),
        None if w.t.is_empty() && w2.t.is_empty() => 0.0,
        None => return invalid("categorical inputs need a latent map"),
    };
    Ok((-(numeric + latent)).exp())
}

/// R_δ = R + δI over a dataset, without the Cholesky jitter.
pub fn build_correlation_matrix(data: &MixedDataset, hypers: &Hyperparameters) -> Result<Mat<f64>> {
    let s = data.samples();
    let n = s.len();
    let mut r = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        r[(i, i)] = 1.0 + hypers.delta;
        for j in 0..i {
            let v = mixed_correlation(&s[i], &s[j], hypers)?;
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    Ok(r)
}
