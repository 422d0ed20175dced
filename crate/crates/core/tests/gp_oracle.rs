//! Conditioned-model quantities checked against a dense nalgebra
//! implementation of universal kriging written independently of the crate.

use lmgp::optimize::{LikelihoodProblem, ParamBounds};
use lmgp::testbed::{sample_mixed_design, BenchmarkFunction, FunctionId};
use lmgp::{FittedModel, MeanBasis, MixedDataset, MixedSample, ModelKind, ModelSpec};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn borehole_data(n: usize, skip: usize) -> MixedDataset {
    let f = BenchmarkFunction::new(FunctionId::Borehole);
    let xs = sample_mixed_design(&f, n, skip).unwrap();
    let y = xs.iter().map(|w| f.eval(w).unwrap()).collect();
    MixedDataset::new(f.space(), xs, y).unwrap()
}

fn random_theta(p: &LikelihoodProblem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let b = p.bounds(&ParamBounds::default());
    let mut th: Vec<f64> = (0..p.len()).map(|i| rng.random_range(b.lower()[i]..b.upper()[i])).collect();
    // keep roughness moderate so R_δ stays well conditioned
    let dx = 5;
    for v in th.iter_mut().take(dx) {
        *v = rng.random_range(-1.0..0.5);
    }
    let last = th.len() - 1;
    th[last] = rng.random_range(-6.0..-3.0);
    th
}

struct Oracle {
    r: DMatrix<f64>,
    f: DMatrix<f64>,
    y: DVector<f64>,
    feats: Vec<Vec<f64>>,
    pos: Vec<Vec<f64>>,
    model: FittedModel,
}

impl Oracle {
    fn features(&self, w: &MixedSample) -> (Vec<f64>, Vec<f64>) {
        let spec = self.model.spec();
        let mut raw = w.x.clone();
        if spec.kind == ModelKind::Gp {
            raw.extend(w.t.iter().map(|l| l.unwrap() as f64));
        }
        let s = self.model.standardization();
        let x = raw
            .iter()
            .enumerate()
            .map(|(k, v)| (v - s.x_offset[k]) / s.x_scale[k])
            .collect();
        let z = match &self.model.hyperparameters().map {
            Some(m) if spec.kind != ModelKind::Gp => m.position(&w.t).unwrap(),
            _ => Vec::new(),
        };
        (x, z)
    }

    fn corr(&self, a: (&[f64], &[f64]), b: (&[f64], &[f64])) -> f64 {
        let h = self.model.hyperparameters();
        let mut e = 0.0;
        for k in 0..a.0.len() {
            e += 10f64.powf(h.omega[k]) * (a.0[k] - b.0[k]).powi(2);
        }
        for k in 0..a.1.len() {
            e += (a.1[k] - b.1[k]).powi(2);
        }
        (-e).exp()
    }

    fn new(data: MixedDataset, spec: &ModelSpec, theta: &[f64]) -> Self {
        let p = LikelihoodProblem::new(&data, spec).unwrap();
        let hypers = p.unpack(theta).unwrap();
        let delta = hypers.delta;
        let model = FittedModel::condition(data.clone(), spec, hypers).unwrap();
        let mut o = Oracle {
            r: DMatrix::zeros(0, 0),
            f: DMatrix::zeros(0, 0),
            y: DVector::zeros(0),
            feats: Vec::new(),
            pos: Vec::new(),
            model,
        };
        let n = data.len();
        for w in data.samples() {
            let (x, z) = o.features(w);
            o.feats.push(x);
            o.pos.push(z);
        }
        o.r = DMatrix::from_fn(n, n, |i, j| {
            let c = o.corr((&o.feats[i], &o.pos[i]), (&o.feats[j], &o.pos[j]));
            if i == j {
                c + delta + 1e-12
            } else {
                c
            }
        });
        let s = o.model.standardization();
        o.y = DVector::from_iterator(n, data.y().iter().map(|v| (v - s.y_offset) / s.y_scale));
        let basis = &spec.basis;
        let h = basis.len();
        o.f = DMatrix::from_fn(n, h, |i, k| basis.evaluate(&o.feats[i])[k]);
        o
    }

    fn beta(&self) -> DVector<f64> {
        let ri = self.r.clone().try_inverse().unwrap();
        let g = self.f.transpose() * &ri * &self.f;
        g.try_inverse().unwrap() * self.f.transpose() * &ri * &self.y
    }

    fn sigma2(&self) -> f64 {
        let ri = self.r.clone().try_inverse().unwrap();
        let res = &self.y - &self.f * self.beta();
        (res.transpose() * ri * &res)[(0, 0)] / self.y.len() as f64
    }

    fn objective(&self) -> f64 {
        self.y.len() as f64 * self.sigma2().ln() + self.r.determinant().ln()
    }

    /// Mean and covariance in standardized units at two query points.
    fn predict(&self, a: &MixedSample, b: &MixedSample) -> (f64, f64, f64) {
        let ri = self.r.clone().try_inverse().unwrap();
        let qa = self.features(a);
        let qb = self.features(b);
        let n = self.y.len();
        let ra = DVector::from_fn(n, |i, _| self.corr((&self.feats[i], &self.pos[i]), (&qa.0, &qa.1)));
        let rb = DVector::from_fn(n, |i, _| self.corr((&self.feats[i], &self.pos[i]), (&qb.0, &qb.1)));
        let basis = &self.model.spec().basis;
        let fa = DVector::from_vec(basis.evaluate(&qa.0));
        let fb = DVector::from_vec(basis.evaluate(&qb.0));
        let beta = self.beta();
        let mean = fa.dot(&beta) + (ra.transpose() * &ri * (&self.y - &self.f * &beta))[(0, 0)];
        let g = (self.f.transpose() * &ri * &self.f).try_inverse().unwrap();
        let ua = &fa - self.f.transpose() * &ri * &ra;
        let ub = &fb - self.f.transpose() * &ri * &rb;
        let s2 = self.sigma2();
        let var = s2 * (1.0 - (ra.transpose() * &ri * &ra)[(0, 0)] + (ua.transpose() * &g * &ua)[(0, 0)]);
        let prior_ab = self.corr((&qa.0, &qa.1), (&qb.0, &qb.1));
        let cov = s2 * (prior_ab - (ra.transpose() * &ri * &rb)[(0, 0)] + (ua.transpose() * &g * &ub)[(0, 0)]);
        (mean, var, cov)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

fn check(kind: ModelKind, basis: MeanBasis, seed: u64) {
    let data = borehole_data(30, 1);
    let mut spec = ModelSpec::new(kind);
    spec.basis = basis;
    let p = LikelihoodProblem::new(&data, &spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = random_theta(&p, &mut rng);
    let o = Oracle::new(data, &spec, &theta);
    let m = &o.model;

    let beta = o.beta();
    for (k, b) in m.beta().iter().enumerate() {
        assert!((b - beta[k]).abs() < 1e-7 * (1.0 + beta[k].abs()), "{kind} beta[{k}]");
    }
    assert!(rel(m.sigma2(), o.sigma2()) < 1e-7, "{kind} sigma2");
    assert!((m.objective() - o.objective()).abs() < 1e-6 * (1.0 + o.objective().abs()), "{kind} objective");
    assert!((p.objective(&theta) - m.objective()).abs() < 1e-9 * (1.0 + m.objective().abs()));

    let f = BenchmarkFunction::new(FunctionId::Borehole);
    let queries = sample_mixed_design(&f, 6, 500).unwrap();
    let s = m.standardization();
    for pair in queries.chunks(2) {
        let (mean, var, cov) = o.predict(&pair[0], &pair[1]);
        let got = m.predict(&pair[0]).unwrap();
        let scale = s.y_scale;
        assert!((got.mean - s.unscale_y(mean)).abs() < 1e-6 * scale, "{kind} mean");
        assert!((got.variance - var * scale * scale).abs() < 1e-6 * scale * scale, "{kind} variance");
        let c = m.predict_cov(&pair[0], &pair[1]).unwrap();
        assert!((c - cov * scale * scale).abs() < 1e-6 * scale * scale, "{kind} covariance");
        assert!((m.predict_cov(&pair[1], &pair[0]).unwrap() - c).abs() <= 1e-12 * c.abs().max(1.0));
    }
}

#[test]
fn gp_matches_dense_oracle() {
    check(ModelKind::Gp, MeanBasis::constant(), 1);
}

#[test]
fn lmgp_matches_dense_oracle() {
    check(ModelKind::Lmgp, MeanBasis::constant(), 2);
    check(ModelKind::Lmgp, MeanBasis::constant(), 3);
}

#[test]
fn lvgp_matches_dense_oracle() {
    check(ModelKind::Lvgp, MeanBasis::constant(), 4);
}

#[test]
fn linear_basis_matches_dense_oracle() {
    check(ModelKind::Lmgp, MeanBasis::linear(5), 5);
}

#[test]
fn predictive_variance_of_a_point_with_itself_is_its_covariance() {
    let data = borehole_data(25, 1);
    let spec = ModelSpec::new(ModelKind::Lmgp);
    let p = LikelihoodProblem::new(&data, &spec).unwrap();
    let theta = random_theta(&p, &mut ChaCha8Rng::seed_from_u64(9));
    let m = FittedModel::condition(data, &spec, p.unpack(&theta).unwrap()).unwrap();
    let f = BenchmarkFunction::new(FunctionId::Borehole);
    for q in sample_mixed_design(&f, 5, 100).unwrap() {
        let v = m.predict(&q).unwrap().variance;
        let c = m.predict_cov(&q, &q).unwrap();
        assert!((v - c).abs() <= 1e-9 * v.max(1e-9));
    }
}
