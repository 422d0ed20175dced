use lmgp::bayesopt::random_search;
use lmgp::testbed::{sample_mixed_design, BenchmarkFunction, FunctionId};
use lmgp::{bo_run, BoConfig, CandidatePool, Direction, FitConfig, ModelKind, StopRule};

fn pool(n: usize) -> CandidatePool {
    let f = BenchmarkFunction::new(FunctionId::Borehole);
    let xs = sample_mixed_design(&f, n, 1).unwrap();
    let y = xs.iter().map(|w| f.eval(w).unwrap()).collect();
    CandidatePool::new(f.space(), xs, Some(y)).unwrap()
}

fn config(seed: u64, direction: Direction) -> BoConfig {
    let mut fit = FitConfig::new(ModelKind::Lmgp, 1);
    fit.n_starts = 1;
    fit.lbfgs.max_iter = 100;
    BoConfig {
        init_size: 12,
        direction,
        stop: StopRule::TargetFound,
        seed,
        fit,
        warm_start: false,
    }
}

#[test]
fn bo_reaches_the_pool_optimum_with_a_monotone_incumbent() {
    for direction in [Direction::Maximize, Direction::Minimize] {
        let mut p = pool(40);
        let target = p.optimum_index(direction).unwrap();
        let t = bo_run(&mut p, &config(3, direction)).unwrap();
        assert!(t.found_target);
        assert!(t.aborted.is_none());
        assert_eq!(t.init_size(), 12);
        assert_eq!(t.additional_evaluations, t.steps.len());
        if let Some(last) = t.steps.last() {
            assert_eq!(last.index, target);
        } else {
            assert!(t.init_indices.contains(&target));
        }
        for w in t.steps.windows(2) {
            assert!(!direction.improves(w[0].incumbent, w[1].incumbent));
        }
        let mut seen: Vec<usize> = t.init_indices.clone();
        seen.extend(t.steps.iter().map(|s| s.index));
        let n = seen.len();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), n, "a candidate was evaluated twice");
    }
}

#[test]
fn bo_is_deterministic_and_shares_the_random_baseline_draw() {
    let mut a = pool(40);
    let mut b = pool(40);
    let ta = bo_run(&mut a, &config(5, Direction::Maximize)).unwrap();
    let tb = bo_run(&mut b, &config(5, Direction::Maximize)).unwrap();
    assert_eq!(ta.init_indices, tb.init_indices);
    assert_eq!(
        ta.steps.iter().map(|s| s.index).collect::<Vec<_>>(),
        tb.steps.iter().map(|s| s.index).collect::<Vec<_>>()
    );
    let mut c = pool(40);
    let r = random_search(&mut c, 12, Direction::Maximize, 5, StopRule::TargetFound).unwrap();
    assert_eq!(r.init_indices, ta.init_indices);
}

#[test]
fn budget_stops_early() {
    let mut p = pool(40);
    let mut cfg = config(8, Direction::Minimize);
    cfg.stop = StopRule::Budget(2);
    let t = bo_run(&mut p, &cfg).unwrap();
    assert!(t.additional_evaluations <= 2);
}
