use serde::{Deserialize, Serialize};

use super::lbfgsb::{minimize_bounded, LbfgsOptions, Termination};
use super::multistart::{better, minimize_from_starts, MultistartOptions, OptimizationReport};
use crate::data::MixedDataset;
use crate::error::Result;
use crate::gp::likelihood::{LikelihoodProblem, ModelSpec, ParamBounds};
use crate::gp::{FittedModel, Hyperparameters, ModelKind};

/// Settings for maximum likelihood fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub model: ModelSpec,
    pub n_starts: usize,
    pub lbfgs: LbfgsOptions,
    pub bounds: ParamBounds,
    /// Run the two nugget refinement passes after the multi-start search.
    pub continuation: bool,
    pub seed: u64,
    /// Hyperparameters reused as the second start, e.g. from a previous fit
    /// on a smaller dataset.
    pub warm_start: Option<Hyperparameters>,
}

impl FitConfig {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        Self {
            model: ModelSpec::new(kind),
            n_starts: 12,
            lbfgs: LbfgsOptions::default(),
            bounds: ParamBounds::default(),
            continuation: true,
            seed,
            warm_start: None,
        }
    }
}

/// One warm-started nugget refinement pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub start: Vec<f64>,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub multistart: OptimizationReport,
    pub refinements: Vec<Refinement>,
    pub best_params: Vec<f64>,
    pub best_objective: f64,
}

/// Analytic gradient of the profile objective at a packed parameter vector.
/// `None` means the correlation matrix could not be factorized there.
pub fn likelihood_gradient(theta: &[f64], data: &MixedDataset, spec: &ModelSpec) -> Result<Option<Vec<f64>>> {
    let p = LikelihoodProblem::new(data, spec)?;
    Ok(p.objective_and_gradient(theta).1)
}

/// Multi-start MLE over (ω, map, log10 δ) followed by nugget continuation:
/// two refinements from the incumbent with log10 δ reset to the upper bound
/// and to one decade below the incumbent. The lowest objective wins, ties
/// going to the smaller nugget.
pub fn fit_with_continuation(data: &MixedDataset, config: &FitConfig) -> Result<FittedModel> {
    let problem = LikelihoodProblem::new(data, &config.model)?;
    let bounds = problem.bounds(&config.bounds);
    let last = problem.len() - 1;
    let warm = match &config.warm_start {
        Some(h) => Some(problem.pack(h)?),
        None => None,
    };
    let opts = MultistartOptions {
        n_starts: config.n_starts,
        lbfgs: config.lbfgs,
        tie_break_coordinate: Some(last),
        ..MultistartOptions::default()
    };
    let multistart = minimize_from_starts(&problem, &bounds, &opts, config.seed, |k, rng| match (k, &warm) {
        (0, _) => problem.center_start(&bounds, rng),
        (1, Some(w)) => w.clone(),
        _ => bounds.sample(rng),
    })?;

    let mut best_params = multistart.best_params.clone();
    let mut best_objective = multistart.best_objective;
    let mut refinements = Vec::new();
    if config.continuation {
        let incumbent = best_params.clone();
        for log_delta in [bounds.upper()[last], incumbent[last] - 1.0] {
            let mut start = incumbent.clone();
            start[last] = log_delta;
            bounds.project(&mut start);
            let r = minimize_bounded(&problem, &bounds, &start, &config.lbfgs);
            if better((&r.x, r.objective), (&best_params, best_objective), opts.tie_tolerance, Some(last)) {
                best_params = r.x.clone();
                best_objective = r.objective;
            }
            refinements.push(Refinement {
                start,
                x: r.x,
                objective: r.objective,
                iterations: r.iterations,
                termination: r.termination,
            });
        }
    }

    let hypers = problem.unpack(&best_params)?;
    let report = FitReport {
        multistart,
        refinements,
        best_params,
        best_objective,
    };
    Ok(FittedModel::condition(data.clone(), &config.model, hypers)?.with_report(report))
}
