use lmgp::latent::{canonicalize_latent, LatentMap};
use lmgp::optimize::{LikelihoodProblem, ParamBounds};
use lmgp::testbed::{add_noise, sample_mixed_design, BenchmarkFunction, FunctionId, NoiseSpec};
use lmgp::{
    expected_improvement, fit_with_continuation, Direction, FitConfig, FittedModel, Hyperparameters,
    InputSpace, MixedDataset, MixedSample, ModelKind, ModelSpec, NumericVariable,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn borehole_data(n: usize) -> MixedDataset {
    let f = BenchmarkFunction::new(FunctionId::Borehole);
    let xs = sample_mixed_design(&f, n, 1).unwrap();
    let y = xs.iter().map(|w| f.eval(w).unwrap()).collect();
    MixedDataset::new(f.space(), xs, y).unwrap()
}

fn interior_theta(p: &LikelihoodProblem, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = p.bounds(&ParamBounds::default());
    let mut th: Vec<f64> = (0..p.len())
        .map(|i| rng.random_range(b.lower()[i] * 0.5..b.upper()[i] * 0.5))
        .collect();
    for v in th.iter_mut().take(5) {
        *v = rng.random_range(-1.0..0.5);
    }
    let last = th.len() - 1;
    th[last] = -5.0;
    th
}

#[test]
fn standardized_objective_ignores_affine_response_changes() {
    let data = borehole_data(40);
    let moved = data
        .with_responses(data.y().iter().map(|v| -3.5 * v + 1e4).collect())
        .unwrap();
    let spec = ModelSpec::new(ModelKind::Lmgp);
    let p = LikelihoodProblem::new(&data, &spec).unwrap();
    let q = LikelihoodProblem::new(&moved, &spec).unwrap();
    for seed in 0..5 {
        let th = interior_theta(&p, seed);
        let (a, b) = (p.objective(&th), q.objective(&th));
        assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn raw_objective_shift_and_scale() {
    let space = InputSpace::numeric_only(vec![NumericVariable::new("x", 0.0, 1.0)]);
    let xs: Vec<MixedSample> = (0..12).map(|i| MixedSample::numeric(vec![i as f64 / 11.0])).collect();
    let y: Vec<f64> = xs.iter().map(|w| (6.0 * w.x[0]).sin()).collect();
    let data = MixedDataset::new(space, xs, y.clone()).unwrap();
    let h = Hyperparameters::numeric(vec![0.7], 1e-6);
    let base = lmgp::gp::neg_log_profile_likelihood(&h, &data).unwrap();
    let shifted = data.with_responses(y.iter().map(|v| v + 42.0).collect()).unwrap();
    let l_shift = lmgp::gp::neg_log_profile_likelihood(&h, &shifted).unwrap();
    assert!((base - l_shift).abs() < 1e-8);
    let a: f64 = 7.0;
    let scaled = data.with_responses(y.iter().map(|v| a * v).collect()).unwrap();
    let l_scale = lmgp::gp::neg_log_profile_likelihood(&h, &scaled).unwrap();
    assert!((l_scale - base - 2.0 * 12.0 * a.ln()).abs() < 1e-8);
}

fn rotated(map: &LatentMap, angle: f64, reflect: bool) -> LatentMap {
    let LatentMap::Lmgp { encoder, a, latent_dim } = map else {
        panic!("expected an LMGP map");
    };
    let (c, s) = (angle.cos(), angle.sin());
    let f = if reflect { -1.0 } else { 1.0 };
    let q = [[c, -s * f], [s, c * f]];
    let a2: Vec<f64> = a
        .chunks_exact(2)
        .flat_map(|r| [r[0] * q[0][0] + r[1] * q[1][0], r[0] * q[0][1] + r[1] * q[1][1]])
        .collect();
    LatentMap::lmgp(encoder.clone(), a2, *latent_dim).unwrap()
}

#[test]
fn objective_invariant_under_latent_rotation() {
    let data = borehole_data(40);
    let spec = ModelSpec::new(ModelKind::Lmgp);
    let p = LikelihoodProblem::new(&data, &spec).unwrap();
    let th = interior_theta(&p, 11);
    let h = p.unpack(&th).unwrap();
    let l0 = p.objective(&th);
    for (k, reflect) in [(1, false), (2, true), (3, false)] {
        let mut h2 = h.clone();
        h2.map = Some(rotated(h.map.as_ref().unwrap(), 0.7 * k as f64, reflect));
        let th2 = p.pack(&h2).unwrap();
        assert!((p.objective(&th2) - l0).abs() < 1e-9, "rotation {k}");
    }
}

#[test]
fn small_nugget_interpolates_training_data() {
    let data = borehole_data(30);
    let spec = ModelSpec::new(ModelKind::Lmgp);
    let p = LikelihoodProblem::new(&data, &spec).unwrap();
    let mut th = interior_theta(&p, 3);
    let last = th.len() - 1;
    th[last] = -9.0;
    let m = FittedModel::condition(data.clone(), &spec, p.unpack(&th).unwrap()).unwrap();
    for (w, y) in data.samples().iter().zip(data.y()) {
        let got = m.predict(w).unwrap();
        assert!((got.mean - y).abs() <= 1e-4 * y.abs());
        assert!(got.variance <= 1e-4 * m.process_variance());
    }
}

#[test]
fn uncorrelated_query_reverts_to_trend() {
    let data = borehole_data(30);
    let spec = ModelSpec::new(ModelKind::Lmgp);
    let p = LikelihoodProblem::new(&data, &spec).unwrap();
    let mut th = interior_theta(&p, 4);
    for v in th.iter_mut().take(5) {
        *v = 3.0;
    }
    let m = FittedModel::condition(data, &spec, p.unpack(&th).unwrap()).unwrap();
    let f = BenchmarkFunction::new(FunctionId::Borehole);
    let q = &sample_mixed_design(&f, 1, 777).unwrap()[0];
    let got = m.predict(q).unwrap();
    let trend = m.prior_mean(q).unwrap();
    assert!((got.mean - trend).abs() < 1e-6 * m.standardization().y_scale);
    assert!(got.variance >= m.process_variance() * (1.0 - 1e-6));
}

#[test]
fn noise_variance_is_recovered() {
    let space = InputSpace::numeric_only(vec![
        NumericVariable::new("a", 0.0, 1.0),
        NumericVariable::new("b", 0.0, 1.0),
    ]);
    let pts = lmgp::testbed::sobol_points(2, 120, 1).unwrap();
    let xs: Vec<MixedSample> = pts.into_iter().map(MixedSample::numeric).collect();
    let clean: Vec<f64> = xs.iter().map(|w| (4.0 * w.x[0]).sin() + w.x[1] * w.x[1]).collect();
    let v = 0.01;
    let y = add_noise(&clean, NoiseSpec { variance: v, seed: 5 }).unwrap();
    let data = MixedDataset::new(space, xs, y).unwrap();
    let mut cfg = FitConfig::new(ModelKind::Gp, 1);
    cfg.n_starts = 4;
    let m = fit_with_continuation(&data, &cfg).unwrap();
    let est = m.noise_variance();
    assert!(est > v / 2.0 && est < 2.0 * v, "estimated {est}");
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

proptest! {
    #[test]
    fn canonicalization_keeps_distances(pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..12)) {
        let pts: Vec<[f64; 2]> = pts.into_iter().map(|(a, b)| [a, b]).collect();
        let c = canonicalize_latent(&pts);
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                prop_assert!((dist(pts[i], pts[j]) - dist(c[i], c[j])).abs() < 1e-9);
            }
        }
        prop_assert_eq!(c[0], [0.0, 0.0]);
        let again = canonicalize_latent(&c);
        for (a, b) in again.iter().zip(&c) {
            prop_assert!(dist(*a, *b) < 1e-9);
        }
    }

    #[test]
    fn ei_nonnegative_and_grows_with_sigma(mu in -10.0f64..10.0, yb in -10.0f64..10.0, s in 0.0f64..5.0, ds in 0.0f64..5.0) {
        for dir in [Direction::Maximize, Direction::Minimize] {
            let e = expected_improvement(mu, s, yb, dir);
            prop_assert!(e >= 0.0);
            prop_assert!(expected_improvement(mu, s + ds, yb, dir) >= e - 1e-12);
        }
        let a = expected_improvement(mu, s, yb, Direction::Minimize);
        let b = expected_improvement(-mu, s, -yb, Direction::Maximize);
        prop_assert!((a - b).abs() < 1e-12);
    }
}
