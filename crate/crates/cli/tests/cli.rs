use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lmgp::testbed::{sample_mixed_design, BenchmarkFunction, FunctionId};
use lmgp::{fit_with_continuation, FitConfig, MixedDataset, ModelKind};
use lmgp_cli::artifact::ModelArtifact;

fn lmgp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmgp")).args(args).output().unwrap()
}

fn run(sub: &str, config: &Path, out: &Path) -> Output {
    lmgp(&[sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Comment line and data rows of a result CSV.
fn rows(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let comment = text.lines().next().unwrap().to_string();
    let r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    (comment, r)
}

fn borehole_data(n: usize, skip: usize) -> MixedDataset {
    let f = BenchmarkFunction::new(FunctionId::Borehole);
    let xs = sample_mixed_design(&f, n, skip).unwrap();
    let y = xs.iter().map(|w| f.eval(w).unwrap()).collect();
    MixedDataset::new(f.space(), xs, y).unwrap()
}

#[test]
fn artifact_round_trip_predicts_identically() {
    let data = borehole_data(40, 1);
    let mut cfg = FitConfig::new(ModelKind::Lmgp, 3);
    cfg.n_starts = 1;
    let model = fit_with_continuation(&data, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    ModelArtifact::from_model(&model).save(&path).unwrap();
    let loaded = ModelArtifact::load(&path).unwrap().to_model().unwrap();
    let queries = sample_mixed_design(&BenchmarkFunction::new(FunctionId::Borehole), 50, 300).unwrap();
    let a = model.predict_many(&queries).unwrap();
    let b = loaded.predict_many(&queries).unwrap();
    for (p, q) in a.iter().zip(&b) {
        assert!((p.mean - q.mean).abs() <= 1e-12 * p.mean.abs().max(1.0));
        assert!((p.variance - q.variance).abs() <= 1e-12 * p.variance.abs().max(1.0));
    }
}

#[test]
fn tampered_artifact_is_rejected() {
    let data = borehole_data(20, 1);
    let mut cfg = FitConfig::new(ModelKind::Lmgp, 1);
    cfg.n_starts = 1;
    let model = fit_with_continuation(&data, &cfg).unwrap();
    let mut art = ModelArtifact::from_model(&model);
    art.format_version += 1;
    assert!(art.to_model().is_err());
    let mut art = ModelArtifact::from_model(&model);
    art.sigma2 *= 1.5;
    assert!(art.to_model().is_err());
}

#[test]
fn fit_then_predict_reproduces_training_responses() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let mut train = String::from("x1,t1,y\n");
    let mut inputs = String::from("x1,t1\n");
    let mut ys = Vec::new();
    for i in 0..24 {
        let x = i as f64 / 23.0;
        let t = 1 + i % 2;
        let y = 2.0 + (3.0 * x).sin() + 0.5 * t as f64 * x;
        train.push_str(&format!("{x:?},{t},{y:?}\n"));
        inputs.push_str(&format!("{x:?},{t}\n"));
        ys.push(y);
    }
    write(root, "train.csv", &train);
    write(root, "inputs.csv", &inputs);
    let fit_cfg = write(
        root,
        "fit.toml",
        "[data]\ndataset = \"train.csv\"\nartifact = \"model.json\"\n[optimizer]\nn_starts = 2\n",
    );
    let out = run("fit", &fit_cfg, &root.join("out"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, fit_rows) = rows(&root.join("out/fit.csv"));
    assert_eq!(fit_rows.len(), 1);
    assert_eq!(fit_rows[0][6], "ok");

    let pred_cfg = write(
        root,
        "predict.toml",
        "[data]\ninputs = \"inputs.csv\"\nartifact = \"model.json\"\n",
    );
    let out = run("predict", &pred_cfg, &root.join("out"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, pred) = rows(&root.join("out/predictions.csv"));
    assert_eq!(pred.len(), 24);
    for (row, y) in pred.iter().zip(&ys) {
        let mean: f64 = row[0].parse().unwrap();
        assert!((mean - y).abs() <= 1e-4 * y.abs(), "{mean} vs {y}");
    }
}

#[test]
fn latent_export_has_one_row_per_combination() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "latent.toml",
        "[data]\nfunction = \"borehole\"\n[sweep]\ntrain_sizes = [60]\nnoise = [\"zero\"]\n[optimizer]\nn_starts = 1\n",
    );
    let out = run("latent", &cfg, &dir.path().join("out"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (comment, r) = rows(&dir.path().join("out/latent.csv"));
    assert!(comment.starts_with("# config_hash="));
    assert_eq!(r.len(), 45);
    assert_eq!(r[0][1..], ["0.0", "0.0"]);
}

#[test]
fn sensitivity_reports_every_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", "[data]\nfunction = \"borehole\"\n");
    let out = run("sensitivity", &cfg, &dir.path().join("out"));
    assert!(out.status.success());
    let (_, r) = rows(&dir.path().join("out/sensitivity.csv"));
    assert_eq!(r.len(), 8);
    for row in &r {
        let v: f64 = row[1].parse().unwrap();
        assert!((0.0..=1.05).contains(&v));
    }
    let rw: f64 = r.iter().find(|x| x[0] == "r_w").unwrap()[1].parse().unwrap();
    assert!((rw - 0.7445).abs() <= 0.02);
}

#[test]
fn sweep_writes_one_record_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.toml",
        "[data]\nfunction = \"olt\"\n[sweep]\ntrain_sizes = [15, 20]\nnoise = [\"zero\", 0.01]\nreplicates = 2\ntest_size = 50\n[optimizer]\nn_starts = 1\nmax_iter = 50\n",
    );
    let out = run("sweep", &cfg, &dir.path().join("out"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (comment, r) = rows(&dir.path().join("out/sweep.csv"));
    assert!(comment.starts_with("# config_hash="));
    assert_eq!(r.len(), 8);
    assert!(r.iter().all(|x| x[10] == "ok"));
    assert!(dir.path().join("out/sweep.timing.csv").exists());

    // a different seed changes the hash line
    let out2 = lmgp(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out2").to_str().unwrap(),
        "--seed",
        "5",
    ]);
    assert!(out2.status.success());
    let (comment2, _) = rows(&dir.path().join("out2/sweep.csv"));
    assert_ne!(comment, comment2);
}

#[test]
fn bo_race_summarizes_every_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bo.toml",
        "[data]\nfunction = \"borehole\"\n[bo]\nseeds = 3\ninit_size = 15\npool_size = 40\n[optimizer]\nn_starts = 1\nmax_iter = 50\n",
    );
    let out = run("bo", &cfg, &dir.path().join("out"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, summary) = rows(&dir.path().join("out/bo_summary.csv"));
    assert_eq!(summary.len(), 2);
    let (_, hist) = rows(&dir.path().join("out/bo_histogram.csv"));
    for s in &summary {
        assert_eq!(s[1], "3");
        let total: usize = hist.iter().filter(|h| h[0] == s[0]).map(|h| h[2].parse::<usize>().unwrap()).sum();
        assert_eq!(total.to_string(), s[2]);
        let sum: usize = hist
            .iter()
            .filter(|h| h[0] == s[0])
            .map(|h| h[1].parse::<usize>().unwrap() * h[2].parse::<usize>().unwrap())
            .sum();
        let mean: f64 = s[4].parse().unwrap();
        assert!((mean - sum as f64 / 3.0).abs() < 1e-12);
    }
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let no_config = lmgp(&["sweep"]);
    assert_eq!(no_config.status.code(), Some(1));

    let cases = [
        ("unknown.toml", "[data]\nfunction = \"borehole\"\nbogus = 1\n", "sweep"),
        ("zero.toml", "[data]\nfunction = \"borehole\"\n[sweep]\nreplicates = 0\n", "sweep"),
        ("missing.toml", "[data]\ndataset = \"nope.csv\"\n", "fit"),
        ("noartifact.toml", "[data]\nfunction = \"borehole\"\n", "predict"),
        ("badfn.toml", "[data]\nfunction = \"rosenbrock\"\n", "sensitivity"),
        ("varlen.toml", "[data]\nfunction = \"piston\"\n", "varlen"),
    ];
    for (name, text, sub) in cases {
        let cfg = write(root, name, text);
        let out = run(sub, &cfg, &root.join("out"));
        assert_eq!(out.status.code(), Some(1), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}
