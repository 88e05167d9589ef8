//! Ensemble behaviour of the simulation harness.

use ramsey_sched::bayes::FieldGrid;
use ramsey_sched::policy::{PolicyConfig, PolicyKind};
use ramsey_sched::sim::{run_ensemble, run_trials, SimConfig};

/// Default ensemble settings on a coarser field grid and a 32 x 32 search grid.
fn reduced(kind: PolicyKind) -> SimConfig {
    SimConfig {
        grid: FieldGrid::new(-20.0, 20.0, 1 << 12).unwrap(),
        policy: PolicyConfig { kind, tau_grid_size: 32, theta_grid_size: 32, ..PolicyConfig::default() },
        ..SimConfig::default()
    }
}

#[test]
fn myopic_posteriors_concentrate_on_the_true_field() {
    let cfg = SimConfig { n_realizations: 50, master_seed: 17, ..reduced(PolicyKind::MyopicEntropy) };
    let trials = run_trials(&cfg).unwrap();
    let hits = trials
        .iter()
        .filter(|t| (t.records[29].posterior_mean - t.b_true).abs() < t.records[0].posterior_std)
        .count();
    assert!(hits >= 45, "{hits} of 50 trials");
}

#[test]
fn ensembles_are_reproducible() {
    let cfg = SimConfig { n_measurements: 8, n_realizations: 4, ..reduced(PolicyKind::VarianceMin) };
    assert_eq!(run_ensemble(&cfg).unwrap(), run_ensemble(&cfg).unwrap());
}

#[test]
fn entropy_falls_under_adaptive_policies() {
    for kind in [PolicyKind::MyopicEntropy, PolicyKind::VarianceMin] {
        let s = run_ensemble(&SimConfig { n_measurements: 12, ..reduced(kind) }).unwrap();
        assert!(s.steps[11].mean_entropy < s.steps[0].mean_entropy - 1.0, "{kind}");
    }
}
