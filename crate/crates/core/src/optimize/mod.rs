//! Bounded quasi-Newton minimization, multi-start search and maximum
//! likelihood fitting with nugget continuation.

mod bounds;
mod fit;
mod lbfgsb;
mod multistart;

pub use crate::gp::likelihood::{LikelihoodProblem, ModelSpec, ParamBounds};
pub use bounds::Bounds;
pub use fit::{fit_with_continuation, likelihood_gradient, FitConfig, FitReport, Refinement};
pub use lbfgsb::{finite_difference_gradient, minimize_bounded, LbfgsOptions, LocalResult, Termination};
pub use multistart::{minimize_from_starts, minimize_multistart, MultistartOptions, OptimizationReport, StartRecord};

/// A function to be minimized. `+∞` marks an infeasible point.
pub trait Objective {
    fn value(&self, x: &[f64]) -> f64;

    /// Value and gradient. A `None` gradient makes the optimizer fall back
    /// to central finite differences at that point.
    fn value_and_gradient(&self, x: &[f64]) -> (f64, Option<Vec<f64>>) {
        (self.value(x), None)
    }
}

impl<F: Fn(&[f64]) -> f64> Objective for F {
    fn value(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Pairs a value closure with an analytic gradient closure.
pub struct Differentiable<F, G>(pub F, pub G);

impl<F, G> Objective for Differentiable<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Option<Vec<f64>>) {
        let f = (self.0)(x);
        if f.is_finite() {
            (f, Some((self.1)(x)))
        } else {
            (f, None)
        }
    }
}

impl Objective for LikelihoodProblem {
    fn value(&self, x: &[f64]) -> f64 {
        self.objective(x)
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Option<Vec<f64>>) {
        self.objective_and_gradient(x)
    }
}
