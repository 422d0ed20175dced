use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::functions::BenchmarkFunction;
use super::sobol::SobolSampler;
use crate::data::MixedSample;
use crate::error::{invalid, Result};

/// Maps a unit-cube point to a mixed sample: numeric coordinates affinely
/// onto their ranges, categorical coordinate u onto level ⌊u·m⌋ + 1.
pub fn unit_to_sample(f: &BenchmarkFunction, u: &[f64]) -> MixedSample {
    let x = f
        .numeric
        .iter()
        .zip(u)
        .map(|(v, u)| v.lower + u * (v.upper - v.lower))
        .collect();
    let t = f
        .categorical
        .iter()
        .zip(&u[f.dx()..])
        .map(|(c, u)| {
            let m = c.values.len();
            Some(((u * m as f64).floor() as usize + 1).min(m))
        })
        .collect();
    MixedSample::new(x, t)
}

/// `n` Sobol design points after skipping `skip`.
pub fn sample_mixed_design(f: &BenchmarkFunction, n: usize, skip: usize) -> Result<Vec<MixedSample>> {
    sample_mixed_design_with(f, &SobolSampler::new(f.dx() + f.dt())?, n, skip)
}

pub fn sample_mixed_design_with(
    f: &BenchmarkFunction,
    sampler: &SobolSampler,
    n: usize,
    skip: usize,
) -> Result<Vec<MixedSample>> {
    if sampler.dim() != f.dx() + f.dt() {
        return invalid("sampler dimension does not match the function inputs");
    }
    Ok(sampler.points(n, skip).iter().map(|u| unit_to_sample(f, u)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub variance: f64,
    pub seed: u64,
}

/// Adds IID Normal(0, variance) draws.
pub fn add_noise(y: &[f64], spec: NoiseSpec) -> Result<Vec<f64>> {
    if !(spec.variance >= 0.0) || !spec.variance.is_finite() {
        return invalid("noise variance must be finite and nonnegative");
    }
    if spec.variance == 0.0 {
        return Ok(y.to_vec());
    }
    let normal = Normal::new(0.0, spec.variance.sqrt()).expect("positive standard deviation");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok(y.iter().map(|v| v + normal.sample(&mut rng)).collect())
}

pub fn mse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return invalid(format!("{} predictions for {} responses", pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return invalid("mean square error of an empty set");
    }
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64)
}

/// Spread max − min of the function over 2^14 Sobol points.
pub fn function_range(f: &BenchmarkFunction) -> Result<f64> {
    let ys = sample_mixed_design(f, 1 << 14, 1)?
        .iter()
        .map(|w| f.eval(w))
        .collect::<Result<Vec<_>>>()?;
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(hi - lo)
}

/// Noise-variance presets per function: 0, (range/50)² and (range/20)².
pub fn noise_presets(f: &BenchmarkFunction) -> Result<[f64; 3]> {
    let r = function_range(f)?;
    Ok([0.0, (r / 50.0).powi(2), (r / 20.0).powi(2)])
}
