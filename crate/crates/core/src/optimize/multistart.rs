use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lbfgsb::{minimize_bounded, LbfgsOptions, Termination};
use super::{Bounds, Objective};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultistartOptions {
    pub n_starts: usize,
    /// Redraws allowed when a start point is infeasible.
    pub max_resamples: usize,
    pub lbfgs: LbfgsOptions,
    /// Objectives closer than this count as tied.
    pub tie_tolerance: f64,
    /// Among tied results prefer the smaller value of this coordinate.
    pub tie_break_coordinate: Option<usize>,
}

impl Default for MultistartOptions {
    fn default() -> Self {
        Self {
            n_starts: 12,
            max_resamples: 10,
            lbfgs: LbfgsOptions::default(),
            tie_tolerance: 1e-9,
            tie_break_coordinate: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub start: Vec<f64>,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub resamples: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub best_params: Vec<f64>,
    pub best_objective: f64,
    pub per_start: Vec<StartRecord>,
    pub seed: u64,
}

/// RNG for start `index`: one independent ChaCha stream per start.
pub(crate) fn start_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// True when `a` should replace the incumbent `b`.
pub(crate) fn better(a: (&[f64], f64), b: (&[f64], f64), tol: f64, coord: Option<usize>) -> bool {
    if !a.1.is_finite() {
        return false;
    }
    if !b.1.is_finite() {
        return true;
    }
    if (a.1 - b.1).abs() < tol {
        return coord.is_some_and(|c| a.0[c] < b.0[c]);
    }
    a.1 < b.1
}

/// Multi-start search from uniform random points of the box.
pub fn minimize_multistart<O: Objective + ?Sized>(
    obj: &O,
    bounds: &Bounds,
    opts: &MultistartOptions,
    seed: u64,
) -> Result<OptimizationReport> {
    minimize_from_starts(obj, bounds, opts, seed, |_, rng| bounds.sample(rng))
}

/// Multi-start search where `start(index, rng)` proposes each start point.
/// Infeasible starts are redrawn uniformly from the box.
pub fn minimize_from_starts<O: Objective + ?Sized>(
    obj: &O,
    bounds: &Bounds,
    opts: &MultistartOptions,
    seed: u64,
    mut start: impl FnMut(usize, &mut ChaCha8Rng) -> Vec<f64>,
) -> Result<OptimizationReport> {
    if opts.n_starts == 0 {
        return Err(Error::InvalidArgument("at least one start is required".into()));
    }
    let mut per_start = Vec::with_capacity(opts.n_starts);
    for k in 0..opts.n_starts {
        let mut rng = start_rng(seed, k);
        let mut x0 = start(k, &mut rng);
        bounds.project(&mut x0);
        let mut resamples = 0;
        while !obj.value(&x0).is_finite() && resamples < opts.max_resamples {
            x0 = bounds.sample(&mut rng);
            resamples += 1;
        }
        let r = minimize_bounded(obj, bounds, &x0, &opts.lbfgs);
        per_start.push(StartRecord {
            start: x0,
            x: r.x,
            objective: r.objective,
            iterations: r.iterations,
            evaluations: r.evaluations,
            resamples,
            termination: r.termination,
        });
    }
    let mut best: Option<usize> = None;
    for (k, s) in per_start.iter().enumerate() {
        let replace = match best {
            None => s.objective.is_finite(),
            Some(b) => better(
                (&s.x, s.objective),
                (&per_start[b].x, per_start[b].objective),
                opts.tie_tolerance,
                opts.tie_break_coordinate,
            ),
        };
        if replace {
            best = Some(k);
        }
    }
    let Some(b) = best else {
        let detail: Vec<String> = per_start
            .iter()
            .enumerate()
            .map(|(k, s)| format!("start {k}: {} after {} resamples", s.termination, s.resamples))
            .collect();
        return Err(Error::FitFailure(format!("every start was infeasible ({})", detail.join("; "))));
    };
    Ok(OptimizationReport {
        best_params: per_start[b].x.clone(),
        best_objective: per_start[b].objective,
        per_start,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimize::Differentiable;

    fn rosenbrock() -> Differentiable<impl Fn(&[f64]) -> f64, impl Fn(&[f64]) -> Vec<f64>> {
        Differentiable(
            |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            |x: &[f64]| {
                vec![
                    -400.0 * x[0] * (x[1] - x[0] * x[0]) - 2.0 * (1.0 - x[0]),
                    200.0 * (x[1] - x[0] * x[0]),
                ]
            },
        )
    }

    #[test]
    fn rosenbrock_with_twelve_starts() {
        let b = Bounds::new(vec![-2.0; 2], vec![2.0; 2]).unwrap();
        let opts = MultistartOptions {
            lbfgs: LbfgsOptions {
                f_tol: 1e-16,
                grad_tol: 1e-9,
                ..LbfgsOptions::default()
            },
            ..MultistartOptions::default()
        };
        let r = minimize_multistart(&rosenbrock(), &b, &opts, 5).unwrap();
        assert!((r.best_params[0] - 1.0).abs() < 1e-4 && (r.best_params[1] - 1.0).abs() < 1e-4, "{r:?}");
        assert_eq!(r.per_start.len(), 12);
        let min = r.per_start.iter().map(|s| s.objective).fold(f64::INFINITY, f64::min);
        assert!(r.best_objective <= min + opts.tie_tolerance);
    }

    #[test]
    fn same_seed_same_report() {
        let b = Bounds::new(vec![-2.0; 2], vec![2.0; 2]).unwrap();
        let opts = MultistartOptions::default();
        let a = minimize_multistart(&rosenbrock(), &b, &opts, 9).unwrap();
        let c = minimize_multistart(&rosenbrock(), &b, &opts, 9).unwrap();
        assert_eq!(a, c);
        let d = minimize_multistart(&rosenbrock(), &b, &opts, 10).unwrap();
        assert_ne!(a.per_start[0].start, d.per_start[0].start);
    }

    #[test]
    fn infeasible_everywhere_is_a_fit_failure() {
        let b = Bounds::new(vec![0.0], vec![1.0]).unwrap();
        let err = minimize_multistart(&|_: &[f64]| f64::INFINITY, &b, &MultistartOptions::default(), 1);
        assert!(matches!(err, Err(Error::FitFailure(_))));
    }

    #[test]
    fn infeasible_start_is_resampled() {
        let b = Bounds::new(vec![0.0], vec![1.0]).unwrap();
        let obj = |x: &[f64]| if x[0] < 0.5 { f64::INFINITY } else { (x[0] - 0.7).powi(2) };
        let opts = MultistartOptions {
            n_starts: 1,
            ..MultistartOptions::default()
        };
        let r = minimize_from_starts(&obj, &b, &opts, 3, |_, _| vec![0.1]).unwrap();
        assert!(r.per_start[0].resamples >= 1);
        assert!((r.best_params[0] - 0.7).abs() < 1e-5);
    }

    #[test]
    fn ties_prefer_smaller_coordinate() {
        assert!(better((&[0.0, -5.0], 1.0), (&[0.0, -2.0], 1.0 + 1e-12), 1e-9, Some(1)));
        assert!(!better((&[0.0, -1.0], 1.0), (&[0.0, -2.0], 1.0 + 1e-12), 1e-9, Some(1)));
        assert!(better((&[0.0, -1.0], 0.5), (&[0.0, -2.0], 1.0), 1e-9, Some(1)));
    }
}
