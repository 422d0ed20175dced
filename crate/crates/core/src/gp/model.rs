use faer::Mat;
use serde::{Deserialize, Serialize};

use super::likelihood::{combo_key, raw_features, Conditioned, LikelihoodProblem, ModelSpec};
use super::{Hyperparameters, ModelKind};
use crate::data::{MixedDataset, MixedSample};
use crate::error::Result;
use crate::optimize::FitReport;

/// Affine maps between problem units and the scale the kernel sees: inputs
/// to [0, 1] from their declared ranges, responses to zero mean and unit
/// variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub x_offset: Vec<f64>,
    pub x_scale: Vec<f64>,
    pub y_offset: f64,
    pub y_scale: f64,
}

impl Standardization {
    pub fn identity(dim: usize) -> Self {
        Self {
            x_offset: vec![0.0; dim],
            x_scale: vec![1.0; dim],
            y_offset: 0.0,
            y_scale: 1.0,
        }
    }

    pub fn fit(data: &MixedDataset, spec: &ModelSpec) -> Self {
        let space = data.space();
        let mut ranges: Vec<(f64, f64)> = space.numeric.iter().map(|v| (v.lower, v.upper)).collect();
        if spec.kind == ModelKind::Gp {
            ranges.extend(space.categorical.level_counts().iter().map(|&m| (1.0, m as f64)));
        }
        if !spec.standardize {
            return Self::identity(ranges.len());
        }
        let (x_offset, x_scale) = ranges
            .iter()
            .map(|&(lo, hi)| (lo, if hi > lo { hi - lo } else { 1.0 }))
            .unzip();
        let y = data.y();
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        Self {
            x_offset,
            x_scale,
            y_offset: mean,
            y_scale: if var > 0.0 { var.sqrt() } else { 1.0 },
        }
    }

    pub fn scale_x(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(self.x_offset.iter().zip(&self.x_scale))
            .map(|(v, (o, s))| (v - o) / s)
            .collect()
    }

    pub fn scale_y(&self, y: f64) -> f64 {
        (y - self.y_offset) / self.y_scale
    }

    pub fn unscale_y(&self, y: f64) -> f64 {
        self.y_offset + self.y_scale * y
    }
}

/// Predictive mean and variance in response units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictivePoint {
    pub mean: f64,
    pub variance: f64,
}

impl PredictivePoint {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// A conditioned GP. Hyperparameters refer to standardized inputs; means
/// and variances come back in the units of the training responses.
#[derive(Debug, Clone)]
pub struct FittedModel {
    train: MixedDataset,
    problem: LikelihoodProblem,
    hypers: Hyperparameters,
    positions: Vec<Vec<f64>>,
    cond: Conditioned,
    report: Option<FitReport>,
}

/// Cross-correlations of a batch of query points with the training set.
struct Cross {
    /// n × m
    r: Mat<f64>,
    /// Mean basis rows, m × h.
    basis: Vec<Vec<f64>>,
    features: Vec<Vec<f64>>,
    positions: Vec<Vec<f64>>,
}

impl FittedModel {
    /// Factorizes R_δ for fixed hyperparameters.
    pub fn condition(train: MixedDataset, spec: &ModelSpec, hypers: Hyperparameters) -> Result<Self> {
        let problem = LikelihoodProblem::new(&train, spec)?;
        problem.pack(&hypers)?;
        let positions = problem.positions(&hypers)?;
        let (_, cond) = problem.condition(&hypers)?;
        Ok(Self {
            train,
            problem,
            hypers,
            positions,
            cond,
            report: None,
        })
    }

    pub fn with_report(mut self, report: FitReport) -> Self {
        self.report = Some(report);
        self
    }

    pub fn report(&self) -> Option<&FitReport> {
        self.report.as_ref()
    }

    pub fn spec(&self) -> &ModelSpec {
        self.problem.spec()
    }

    pub fn kind(&self) -> ModelKind {
        self.problem.spec().kind
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hypers
    }

    pub fn train(&self) -> &MixedDataset {
        &self.train
    }

    pub fn standardization(&self) -> &Standardization {
        self.problem.standardization()
    }

    /// β̂ on the standardized response scale.
    pub fn beta(&self) -> &[f64] {
        &self.cond.gls.beta
    }

    /// σ̂² on the standardized response scale.
    pub fn sigma2(&self) -> f64 {
        self.cond.sigma2.value
    }

    pub fn sigma2_degenerate(&self) -> bool {
        self.cond.sigma2.degenerate
    }

    /// σ̂² in squared response units.
    pub fn process_variance(&self) -> f64 {
        self.sigma2() * self.standardization().y_scale.powi(2)
    }

    /// Estimated noise variance δσ̂² in squared response units.
    pub fn noise_variance(&self) -> f64 {
        self.hypers.delta * self.process_variance()
    }

    /// Profile objective at the fitted hyperparameters.
    pub fn objective(&self) -> f64 {
        self.cond.objective
    }

    /// Packed parameter vector of the fitted hyperparameters.
    pub fn packed(&self) -> Vec<f64> {
        self.problem.pack(&self.hypers).expect("fitted hyperparameters match their layout")
    }

    /// Lower Cholesky factor of R_δ (plus the conditioning jitter).
    pub fn cholesky_factor(&self) -> Mat<f64> {
        self.cond.factor.lower().to_owned()
    }

    /// R_δ on the training set.
    pub fn correlation_matrix(&self) -> Mat<f64> {
        let mut k = self.problem.kernel_matrix(&self.hypers.omega, &self.positions);
        for i in 0..k.nrows() {
            k[(i, i)] += self.hypers.delta;
        }
        k
    }

    /// The regression trend f(w)β̂ in response units.
    pub fn prior_mean(&self, w: &MixedSample) -> Result<f64> {
        let c = self.cross(std::slice::from_ref(w))?;
        let trend: f64 = c.basis[0].iter().zip(self.beta()).map(|(f, b)| f * b).sum();
        Ok(self.standardization().unscale_y(trend))
    }

    fn cross(&self, ws: &[MixedSample]) -> Result<Cross> {
        let space = self.train.space();
        let spec = self.problem.spec();
        let uses_map = spec.uses_map(&space.categorical);
        let design = self.problem.design();
        let weights: Vec<f64> = self.hypers.omega.iter().map(|o| 10f64.powf(*o)).collect();
        let mut features = Vec::with_capacity(ws.len());
        let mut positions = Vec::with_capacity(ws.len());
        let mut basis = Vec::with_capacity(ws.len());
        let mut r = Mat::<f64>::zeros(design.n, ws.len());
        for (j, w) in ws.iter().enumerate() {
            w.validate(space)?;
            let f = self.standardization().scale_x(&raw_features(w, spec.kind));
            let z = match (&self.hypers.map, uses_map) {
                (Some(map), true) => map.position(&combo_key(w, true))?,
                _ => Vec::new(),
            };
            let latent: Vec<f64> = self.positions.iter().map(|p| super::kernel::sq_dist(&z, p)).collect();
            let col = r.col_as_slice_mut(j);
            for (i, out) in col.iter_mut().enumerate() {
                let mut e = latent[design.combo_of[i]];
                for ((a, b), wk) in f.iter().zip(design.row(i)).zip(&weights) {
                    e += wk * (a - b) * (a - b);
                }
                *out = (-e).exp();
            }
            basis.push(spec.basis.evaluate(&f));
            features.push(f);
            positions.push(z);
        }
        Ok(Cross {
            r,
            basis,
            features,
            positions,
        })
    }

    fn prior_correlation(&self, c: &Cross, a: usize, b: usize) -> f64 {
        let e = super::kernel::sq_dist(&c.positions[a], &c.positions[b])
            + c.features[a]
                .iter()
                .zip(&c.features[b])
                .zip(&self.hypers.omega)
                .map(|((u, v), o)| 10f64.powf(*o) * (u - v) * (u - v))
                .sum::<f64>();
        (-e).exp()
    }

    /// Whitened cross terms: v = L⁻¹r and G⁻¹u with u = f − F̃ᵀv.
    fn whiten(&self, c: &Cross) -> (Mat<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut v = c.r.clone();
        self.cond.factor.solve_lower_in_place(v.as_mut());
        let fw = &self.cond.gls.f_white;
        let h = fw.ncols();
        let mut us = Vec::with_capacity(v.ncols());
        let mut gus = Vec::with_capacity(v.ncols());
        for j in 0..v.ncols() {
            let vj = v.col_as_slice(j);
            let u: Vec<f64> = (0..h)
                .map(|k| c.basis[j][k] - fw.col_as_slice(k).iter().zip(vj).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            let gu = self.cond.gram_solve(&u);
            us.push(u);
            gus.push(gu);
        }
        (v, us, gus)
    }

    pub fn predict(&self, w: &MixedSample) -> Result<PredictivePoint> {
        Ok(self.predict_many(std::slice::from_ref(w))?[0])
    }

    pub fn predict_many(&self, ws: &[MixedSample]) -> Result<Vec<PredictivePoint>> {
        if ws.is_empty() {
            return Ok(Vec::new());
        }
        let c = self.cross(ws)?;
        let (v, us, gus) = self.whiten(&c);
        let s2 = self.sigma2();
        let scaling = self.standardization();
        let mut out = Vec::with_capacity(ws.len());
        for j in 0..ws.len() {
            let trend: f64 = c.basis[j].iter().zip(self.beta()).map(|(f, b)| f * b).sum();
            let corr: f64 = c.r.col_as_slice(j).iter().zip(&self.cond.alpha).map(|(a, b)| a * b).sum();
            let vv: f64 = v.col_as_slice(j).iter().map(|a| a * a).sum();
            let ugu: f64 = us[j].iter().zip(&gus[j]).map(|(a, b)| a * b).sum();
            let mut var = s2 * (1.0 - vv + ugu);
            if var < 1e-12 * s2 {
                var = 0.0;
            }
            out.push(PredictivePoint {
                mean: scaling.unscale_y(trend + corr),
                variance: var * scaling.y_scale * scaling.y_scale,
            });
        }
        Ok(out)
    }

    /// Posterior covariance between the responses at `a` and `b`.
    pub fn predict_cov(&self, a: &MixedSample, b: &MixedSample) -> Result<f64> {
        let c = self.cross(&[a.clone(), b.clone()])?;
        let (v, us, gus) = self.whiten(&c);
        let vab: f64 = v.col_as_slice(0).iter().zip(v.col_as_slice(1)).map(|(p, q)| p * q).sum();
        // symmetrized so that swapping the arguments is exact
        let uab = 0.5
            * (us[0].iter().zip(&gus[1]).map(|(p, q)| p * q).sum::<f64>()
                + us[1].iter().zip(&gus[0]).map(|(p, q)| p * q).sum::<f64>());
        let cov = self.sigma2() * (self.prior_correlation(&c, 0, 1) - vab + uab);
        Ok(cov * self.standardization().y_scale.powi(2))
    }
}

impl Conditioned {
    /// (FᵀR⁻¹F)⁻¹u
    pub(crate) fn gram_solve(&self, u: &[f64]) -> Vec<f64> {
        let s = self.gls.gram.solve(super::linalg::column(u).as_ref());
        (0..u.len()).map(|k| s[(k, 0)]).collect()
    }
}
