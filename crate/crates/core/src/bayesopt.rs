//! Expected-improvement Bayesian optimization over a finite candidate pool.

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::data::{MixedDataset, MixedSample};
use crate::error::{invalid, Error, Result};
use crate::gp::FittedModel;
use crate::optimize::{fit_with_continuation, FitConfig};
use crate::schema::InputSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Maximize,
    Minimize,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Self::Maximize => 1.0,
            Self::Minimize => -1.0,
        }
    }

    /// True when `a` improves on `b`.
    pub fn improves(self, a: f64, b: f64) -> bool {
        self.sign() * (a - b) > 0.0
    }
}

/// E[max(s·(Y − y_best), 0)] for Y ~ N(μ, σ²), with s = +1 when maximizing.
pub fn expected_improvement(mu: f64, sigma: f64, y_best: f64, direction: Direction) -> f64 {
    let gain = direction.sign() * (mu - y_best);
    if !(sigma > 0.0) {
        return gain.max(0.0);
    }
    let u = gain / sigma;
    let n = Normal::standard();
    (gain * n.cdf(u) + sigma * n.pdf(u)).max(0.0)
}

/// Finite set of candidate designs, optionally with known responses.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePool {
    space: InputSpace,
    samples: Vec<MixedSample>,
    responses: Option<Vec<f64>>,
    evaluated: Vec<bool>,
}

impl CandidatePool {
    pub fn new(space: InputSpace, samples: Vec<MixedSample>, responses: Option<Vec<f64>>) -> Result<Self> {
        for s in &samples {
            s.validate(&space)?;
        }
        if let Some(r) = &responses {
            if r.len() != samples.len() {
                return invalid("one response per candidate is required");
            }
            if r.iter().any(|v| !v.is_finite()) {
                return invalid("candidate responses must be finite");
            }
        }
        let evaluated = vec![false; samples.len()];
        Ok(Self {
            space,
            samples,
            responses,
            evaluated,
        })
    }

    pub fn space(&self) -> &InputSpace {
        &self.space
    }

    pub fn samples(&self) -> &[MixedSample] {
        &self.samples
    }

    pub fn responses(&self) -> Option<&[f64]> {
        self.responses.as_deref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_evaluated(&self, i: usize) -> bool {
        self.evaluated[i]
    }

    pub fn unevaluated(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.evaluated[i]).collect()
    }

    /// Flags a candidate as evaluated. Each candidate is suggested once.
    pub fn mark_evaluated(&mut self, i: usize) -> Result<()> {
        match self.evaluated.get_mut(i) {
            None => invalid(format!("candidate {i} does not exist")),
            Some(true) => invalid(format!("candidate {i} was already evaluated")),
            Some(flag) => {
                *flag = true;
                Ok(())
            }
        }
    }

    /// Index of the best known response, lowest index on ties.
    pub fn optimum_index(&self, direction: Direction) -> Option<usize> {
        let r = self.responses.as_ref()?;
        let mut best = 0;
        for (i, v) in r.iter().enumerate() {
            if direction.improves(*v, r[best]) {
                best = i;
            }
        }
        (!r.is_empty()).then_some(best)
    }

    fn reset(&mut self) {
        self.evaluated.iter_mut().for_each(|e| *e = false);
    }
}

/// Unevaluated candidate of largest EI under `model`; ties go to the
/// lowest index. `y_best` is the best observed response.
pub fn bo_step(model: &FittedModel, pool: &CandidatePool, y_best: f64, direction: Direction) -> Result<usize> {
    let open = pool.unevaluated();
    if open.is_empty() {
        return Err(Error::PoolExhausted);
    }
    let samples: Vec<MixedSample> = open.iter().map(|&i| pool.samples[i].clone()).collect();
    let preds = model.predict_many(&samples)?;
    let ei: Vec<f64> = preds
        .iter()
        .map(|p| expected_improvement(p.mean, p.std_dev(), y_best, direction))
        .collect();
    Ok(open[argmax_first(&ei)])
}

/// Position of the largest value, first one on ties.
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum StopRule {
    /// Stop once the pool's best known candidate has been selected.
    TargetFound,
    /// Stop after this many additional evaluations.
    Budget(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoConfig {
    pub init_size: usize,
    pub direction: Direction,
    pub stop: StopRule,
    pub seed: u64,
    pub fit: FitConfig,
    /// Reuse the previous iteration's hyperparameters as one start.
    pub warm_start: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoStep {
    pub iteration: usize,
    pub index: usize,
    pub y: f64,
    pub incumbent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoTrajectory {
    pub init_indices: Vec<usize>,
    pub steps: Vec<BoStep>,
    /// Evaluations after the initial design up to the stopping point.
    pub additional_evaluations: usize,
    pub found_target: bool,
    /// Set when the run ended early on a repeated fit failure.
    pub aborted: Option<String>,
}

impl BoTrajectory {
    pub fn init_size(&self) -> usize {
        self.init_indices.len()
    }
}

fn initial_draw(n: usize, init_size: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = index::sample(&mut rng, n, init_size).into_vec();
    idx.sort_unstable();
    idx
}

fn check_run(pool: &CandidatePool, init_size: usize, direction: Direction) -> Result<(Vec<f64>, Option<usize>)> {
    let Some(r) = pool.responses() else {
        return invalid("pool-based optimization needs known candidate responses");
    };
    if init_size == 0 || init_size >= pool.len() {
        return invalid(format!("initial size must be in 1..{}", pool.len()));
    }
    Ok((r.to_vec(), pool.optimum_index(direction)))
}

struct Run {
    trajectory: BoTrajectory,
    incumbent: f64,
}

impl Run {
    fn start(pool: &mut CandidatePool, init: Vec<usize>, responses: &[f64], direction: Direction) -> Result<Self> {
        pool.reset();
        let mut incumbent = responses[init[0]];
        for &i in &init {
            pool.mark_evaluated(i)?;
            if direction.improves(responses[i], incumbent) {
                incumbent = responses[i];
            }
        }
        Ok(Self {
            trajectory: BoTrajectory {
                init_indices: init,
                steps: Vec::new(),
                additional_evaluations: 0,
                found_target: false,
                aborted: None,
            },
            incumbent,
        })
    }

    /// Records a selection; returns true when the run should stop.
    fn record(&mut self, pool: &mut CandidatePool, i: usize, y: f64, direction: Direction, stop: StopRule, target: Option<usize>) -> Result<bool> {
        pool.mark_evaluated(i)?;
        if direction.improves(y, self.incumbent) {
            self.incumbent = y;
        }
        let t = &mut self.trajectory;
        t.steps.push(BoStep {
            iteration: t.steps.len() + 1,
            index: i,
            y,
            incumbent: self.incumbent,
        });
        t.additional_evaluations = t.steps.len();
        if Some(i) == target {
            t.found_target = true;
        }
        Ok(match stop {
            StopRule::TargetFound => t.found_target,
            StopRule::Budget(k) => t.steps.len() >= k,
        } || pool.unevaluated().is_empty())
    }

    fn initially_done(&mut self, stop: StopRule, target: Option<usize>) -> bool {
        let t = &mut self.trajectory;
        t.found_target = target.is_some_and(|o| t.init_indices.contains(&o));
        match stop {
            StopRule::TargetFound => t.found_target,
            StopRule::Budget(k) => k == 0,
        }
    }
}

/// Pool-based BO: seeded initial draw, then fit → EI selection → reveal
/// until the stopping rule holds. A failed fit is retried once with fresh
/// starts; a second failure ends the run with a partial trajectory.
pub fn bo_run(pool: &mut CandidatePool, config: &BoConfig) -> Result<BoTrajectory> {
    let (responses, target) = check_run(pool, config.init_size, config.direction)?;
    let init = initial_draw(pool.len(), config.init_size, config.seed);
    let mut run = Run::start(pool, init, &responses, config.direction)?;
    if run.initially_done(config.stop, target) {
        return Ok(run.trajectory);
    }
    let mut previous: Option<FittedModel> = None;
    for iteration in 1.. {
        let observed: Vec<usize> = (0..pool.len()).filter(|&i| pool.is_evaluated(i)).collect();
        let data = MixedDataset::new(
            pool.space.clone(),
            observed.iter().map(|&i| pool.samples[i].clone()).collect(),
            observed.iter().map(|&i| responses[i]).collect(),
        )?;
        let mut fit = config.fit.clone();
        fit.seed = config.fit.seed.wrapping_add((iteration as u64) << 32).wrapping_add(config.seed);
        if config.warm_start {
            fit.warm_start = previous.as_ref().map(|m| m.hyperparameters().clone());
        }
        let model = match fit_with_continuation(&data, &fit) {
            Ok(m) => m,
            Err(_) => {
                fit.seed = fit.seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
                fit.warm_start = None;
                match fit_with_continuation(&data, &fit) {
                    Ok(m) => m,
                    Err(e) => {
                        run.trajectory.aborted = Some(format!("iteration {iteration}: {e}"));
                        return Ok(run.trajectory);
                    }
                }
            }
        };
        let i = bo_step(&model, pool, run.incumbent, config.direction)?;
        if run.record(pool, i, responses[i], config.direction, config.stop, target)? {
            break;
        }
        previous = Some(model);
    }
    Ok(run.trajectory)
}

/// Baseline with the same initial draw as [`bo_run`] for the same seed,
/// then candidates in uniformly random order.
pub fn random_search(
    pool: &mut CandidatePool,
    init_size: usize,
    direction: Direction,
    seed: u64,
    stop: StopRule,
) -> Result<BoTrajectory> {
    let (responses, target) = check_run(pool, init_size, direction)?;
    let init = initial_draw(pool.len(), init_size, seed);
    let mut run = Run::start(pool, init, &responses, direction)?;
    if run.initially_done(stop, target) {
        return Ok(run.trajectory);
    }
    let mut order = pool.unevaluated();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    order.shuffle(&mut rng);
    for i in order {
        if run.record(pool, i, responses[i], direction, stop, target)? {
            break;
        }
    }
    Ok(run.trajectory)
}
