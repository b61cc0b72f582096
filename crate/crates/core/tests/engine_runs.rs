use std::sync::Arc;

use semirandom::engine::{run_ensemble, run_once, run_with_target, write_sweep_csv, write_trajectory_csv};
use semirandom::strategy::TreeSampling;
use semirandom::{Phase, Process, RoundMode, RunConfig, TargetGraph, TargetSpec};

#[test]
fn edgeless_target_needs_no_edges() {
    for p in [Process::Star, Process::Tree] {
        let h = Arc::new(TargetGraph::from_edges(50, &[]).unwrap());
        let cfg = RunConfig::new(p, TargetSpec::Matching, 50, 1);
        let r = run_with_target(&cfg, h).unwrap();
        assert!(r.success);
        assert_eq!(r.delta, 0);
        assert_eq!(r.normalized_cost, 0.0);
        assert!(r.phases.iter().all(|ph| ph.claims == 0));
    }
}

#[test]
fn matching_star_run_succeeds() {
    let r = run_once(&RunConfig::new(Process::Star, TargetSpec::Matching, 10_000, 3)).unwrap();
    assert!(r.success);
    assert!(r.total_rounds > 0);
    assert_eq!(r.failures.failed_edges.len(), 0);
}

#[test]
fn families_succeed_under_both_processes() {
    let specs = [
        TargetSpec::Cycle,
        TargetSpec::Grid,
        TargetSpec::CliqueFactor { delta: 3 },
        TargetSpec::Regular { delta: 5 },
    ];
    for spec in specs {
        for p in [Process::Star, Process::Tree] {
            let r = run_once(&RunConfig::new(p, spec.clone(), 2000, 11)).unwrap();
            assert!(r.success, "{:?} {:?}: {:?}", spec, p, r.diagnostics());
        }
    }
}

#[test]
fn full_tree_sampling_agrees_in_outcome() {
    let mut cfg = RunConfig::new(Process::Tree, TargetSpec::Regular { delta: 3 }, 300, 5);
    cfg.tree_sampling = TreeSampling::FullTree;
    let full = run_once(&cfg).unwrap();
    cfg.tree_sampling = TreeSampling::Intersection;
    let trace = run_once(&cfg).unwrap();
    assert!(full.success && trace.success);
}

#[test]
fn ensemble_is_worker_independent() {
    let cfg = RunConfig::new(Process::Tree, TargetSpec::Regular { delta: 4 }, 500, 77);
    let a = run_ensemble(&cfg, 6, 1).unwrap();
    let b = run_ensemble(&cfg, 6, 8).unwrap();
    assert_eq!(a, b);
    let one = run_ensemble(&cfg, 1, 1).unwrap();
    let single = run_once(&cfg).unwrap();
    assert_eq!(one.mean_cost, single.normalized_cost);
    assert_eq!(one.success_rate, if single.success { 1.0 } else { 0.0 });
}

#[test]
fn fixed_and_poisson_success_rates_agree() {
    let runs = 200;
    let mut rates = Vec::new();
    for mode in [RoundMode::Fixed, RoundMode::Poisson] {
        let mut cfg = RunConfig::new(Process::Star, TargetSpec::Regular { delta: 8 }, 10_000, 1000);
        cfg.round_mode = mode;
        rates.push(run_ensemble(&cfg, runs, 1).unwrap().success_rate);
    }
    let pooled = (rates[0] + rates[1]) / 2.0;
    let se = (pooled * (1.0 - pooled) * 2.0 / runs as f64).sqrt();
    assert!((rates[0] - rates[1]).abs() <= 3.0 * se + 1e-12, "{rates:?}");
}

#[test]
fn star_cost_does_not_increase_with_delta() {
    let mut means = Vec::new();
    for delta in [8usize, 16, 32] {
        let cfg = RunConfig::new(Process::Star, TargetSpec::Regular { delta }, 100_000, 40);
        means.push(run_ensemble(&cfg, 2, 1).unwrap().mean_cost);
    }
    assert!(means.windows(2).all(|w| w[1] <= w[0]), "{means:?}");
}

#[test]
fn round_conservation_and_exports() {
    let mut cfg = RunConfig::new(Process::Tree, TargetSpec::Regular { delta: 4 }, 1000, 9);
    cfg.snapshot_every = Some(500);
    let r = run_once(&cfg).unwrap();
    let by_phase: u64 = r.rounds_by_phase.iter().map(|p| p.rounds).sum();
    assert_eq!(by_phase, r.total_rounds);
    assert_eq!(r.rounds_by_phase.iter().find(|p| p.phase == Phase::OutGreedy).unwrap().rounds, 0);
    assert!(r.trajectory.windows(2).all(|w| w[0].round <= w[1].round));

    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, cfg.seed, &r.trajectory).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("round,failed_edges,failed_vertices,hubs,phase,seed\n"));
    assert_eq!(text.lines().count(), r.trajectory.len() + 1);

    let e = run_ensemble(&cfg, 2, 1).unwrap();
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &[e.clone()]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "tree");
    let mean: f64 = row[10].parse().unwrap();
    assert_eq!(mean, e.mean_cost);
}
