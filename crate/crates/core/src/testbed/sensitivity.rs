use serde::{Deserialize, Serialize};

use super::functions::BenchmarkFunction;
use super::sobol::SobolSampler;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalEffect {
    pub input: String,
    pub index: f64,
}

/// Total-effect indices of `g` over the box `ranges` from two Sobol sample
/// matrices A and B of `n_base` rows each:
/// E_T(i) = Σ(g(A) − g(A with column i from B))² / (2N·Var).
pub fn total_effects_of(
    g: impl Fn(&[f64]) -> f64,
    ranges: &[(f64, f64)],
    n_base: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let d = ranges.len();
    if d == 0 || n_base < 2 {
        return invalid("need at least one input and two base samples");
    }
    let pts = SobolSampler::new(2 * d)?.with_digital_shift(seed).points(n_base, 1);
    let scale = |u: &[f64]| -> Vec<f64> {
        u.iter()
            .zip(ranges)
            .map(|(u, (lo, hi))| lo + u * (hi - lo))
            .collect()
    };
    let a: Vec<Vec<f64>> = pts.iter().map(|p| scale(&p[..d])).collect();
    let b: Vec<Vec<f64>> = pts.iter().map(|p| scale(&p[d..])).collect();
    let fa: Vec<f64> = a.iter().map(|x| g(x)).collect();
    let fb: Vec<f64> = b.iter().map(|x| g(x)).collect();
    let all = fa.iter().chain(&fb);
    let n2 = 2.0 * n_base as f64;
    let mean = all.clone().sum::<f64>() / n2;
    let var = all.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n2;
    if !(var > 0.0) {
        return Ok(vec![0.0; d]);
    }
    let mut out = Vec::with_capacity(d);
    let mut row = vec![0.0; d];
    for i in 0..d {
        let mut acc = 0.0;
        for j in 0..n_base {
            row.copy_from_slice(&a[j]);
            row[i] = b[j][i];
            let diff = fa[j] - g(&row);
            acc += diff * diff;
        }
        out.push(acc / n2 / var);
    }
    Ok(out)
}

/// Total-effect index of every benchmark input, categorical inputs varying
/// continuously between their smallest and largest underlying values.
pub fn total_effect_indices(f: &BenchmarkFunction, n_base: usize, seed: u64) -> Result<Vec<TotalEffect>> {
    let dx = f.dx();
    let idx = total_effects_of(|v| f.eval_values(&v[..dx], &v[dx..]), &f.value_ranges(), n_base, seed)?;
    Ok(f.input_names()
        .into_iter()
        .zip(idx)
        .map(|(input, index)| TotalEffect { input, index })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_function_splits_evenly() {
        let idx = total_effects_of(|x| x[0] + x[1], &[(0.0, 1.0), (0.0, 1.0)], 1 << 12, 0).unwrap();
        for v in idx {
            assert!((v - 0.5).abs() < 0.02, "{v}");
        }
    }

    #[test]
    fn inert_input_has_zero_index() {
        let idx = total_effects_of(|x| x[0].powi(2), &[(0.0, 1.0), (0.0, 1.0)], 1 << 10, 1).unwrap();
        assert!(idx[1].abs() < 1e-15 && (idx[0] - 1.0).abs() < 0.05);
    }
}
