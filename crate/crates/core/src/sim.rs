//! Seeded simulation loop: draw a true field, run a policy for a number of
//! measurements with sampled outcomes, and aggregate ensembles of trials.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{likelihood, CoherenceTime, FieldDistribution, FieldGrid, Outcome, RamseyParams};
use crate::error::{Error, Result};
use crate::policy::{next_params, PolicyConfig, PolicyState};
use crate::report::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrueField {
    /// Drawn from the prior for every trial.
    Sampled,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub prior_mean: f64,
    pub prior_std: f64,
    pub coherence_time: CoherenceTime,
    pub n_measurements: usize,
    pub n_realizations: usize,
    pub master_seed: u64,
    pub policy: PolicyConfig,
    pub grid: FieldGrid,
    pub true_field: TrueField,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            prior_mean: 0.0,
            prior_std: 3.0 / 2f64.sqrt(),
            coherence_time: CoherenceTime::Finite(10.0),
            n_measurements: 30,
            n_realizations: 8,
            master_seed: 0,
            policy: PolicyConfig::default(),
            grid: FieldGrid::default(),
            true_field: TrueField::Sampled,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.prior_mean.is_finite() {
            return Err(Error::invalid("prior_mean", "must be finite"));
        }
        if !(self.prior_std > 0.0 && self.prior_std.is_finite()) {
            return Err(Error::invalid("prior_std", format!("must be finite and > 0, got {}", self.prior_std)));
        }
        if let CoherenceTime::Finite(t) = self.coherence_time {
            CoherenceTime::finite(t)?;
        }
        if self.n_measurements == 0 {
            return Err(Error::invalid("n_measurements", "must be positive"));
        }
        if self.n_realizations == 0 {
            return Err(Error::invalid("n_realizations", "must be positive"));
        }
        let (lo, hi) = (self.prior_mean - 6.0 * self.prior_std, self.prior_mean + 6.0 * self.prior_std);
        if lo < self.grid.b_min() || hi > self.grid.b_max() {
            return Err(Error::invalid(
                "grid",
                format!("[{}, {}] does not cover prior mean +- 6 std = [{lo}, {hi}]", self.grid.b_min(), self.grid.b_max()),
            ));
        }
        if let TrueField::Fixed(b) = self.true_field {
            if !self.grid.contains(b) {
                return Err(Error::invalid("true_field", format!("{b} lies outside the grid")));
            }
        }
        self.policy.validate()
    }

    /// Gaussian prior with the configured mean and standard deviation.
    pub fn prior(&self) -> Result<FieldDistribution> {
        FieldDistribution::gaussian(self.grid, self.prior_mean, self.prior_std)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// One-based measurement index.
    pub step: usize,
    pub tau: f64,
    pub theta: f64,
    pub outcome: Outcome,
    pub posterior_entropy: f64,
    pub posterior_std: f64,
    pub posterior_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub trial_index: u64,
    pub seed: u64,
    pub b_true: f64,
    pub records: Vec<StepRecord>,
}

impl Trajectory {
    /// CSV with one row per measurement; `total_tau` is the running sum of exposure times.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "step,tau,theta,outcome,posterior_entropy,posterior_std,posterior_mean,total_tau")?;
        let mut total = 0.0;
        for r in &self.records {
            total += r.tau;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.step,
                fmt_f64(r.tau),
                fmt_f64(r.theta),
                r.outcome,
                fmt_f64(r.posterior_entropy),
                fmt_f64(r.posterior_std),
                fmt_f64(r.posterior_mean),
                fmt_f64(total)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub step: usize,
    pub mean_entropy: f64,
    pub std_entropy: f64,
    pub mean_posterior_std: f64,
    pub std_posterior_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n_trials: usize,
    pub steps: Vec<StepSummary>,
}

impl EnsembleSummary {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "step,mean_entropy,std_entropy,mean_posterior_std,std_posterior_std")?;
        for s in &self.steps {
            writeln!(
                out,
                "{},{},{},{},{}",
                s.step,
                fmt_f64(s.mean_entropy),
                fmt_f64(s.std_entropy),
                fmt_f64(s.mean_posterior_std),
                fmt_f64(s.std_posterior_std)
            )?;
        }
        Ok(())
    }
}

/// Random stream of one trial: the master seed selects the key and the trial
/// index selects an independent ChaCha stream.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// Draw an outcome at `b_true` using exactly one uniform variate.
pub fn sample_outcome<R: Rng + ?Sized>(rng: &mut R, b_true: f64, p: &RamseyParams) -> Outcome {
    let u: f64 = rng.gen();
    if u < likelihood(Outcome::Zero, b_true, p) {
        Outcome::Zero
    } else {
        Outcome::One
    }
}

/// Inverse-CDF draw from a grid density, linear within each grid interval.
pub fn sample_field<R: Rng + ?Sized>(rng: &mut R, d: &FieldDistribution) -> f64 {
    let u: f64 = rng.gen::<f64>() * d.mass();
    let g = d.grid();
    let p = d.density();
    let dx = g.spacing();
    let mut acc = 0.0;
    for i in 0..p.len() - 1 {
        let cell = 0.5 * dx * (p[i] + p[i + 1]);
        if acc + cell >= u && cell > 0.0 {
            return g.point(i) + dx * (u - acc) / cell;
        }
        acc += cell;
    }
    g.b_max()
}

/// Run one trial from the configured Gaussian prior.
pub fn run_trial(cfg: &SimConfig, trial_index: u64) -> Result<Trajectory> {
    run_trial_from(cfg, trial_index, cfg.prior()?)
}

/// Run one trial starting from an explicit prior on `cfg.grid`.
pub fn run_trial_from(cfg: &SimConfig, trial_index: u64, prior: FieldDistribution) -> Result<Trajectory> {
    let mut rng = trial_rng(cfg.master_seed, trial_index);
    let b_true = match cfg.true_field {
        TrueField::Sampled => sample_field(&mut rng, &prior),
        TrueField::Fixed(b) => b,
    };
    let mut state = PolicyState::new(prior, cfg.coherence_time);
    let mut records = Vec::with_capacity(cfg.n_measurements);
    for step in 1..=cfg.n_measurements {
        let p = next_params(&state, &cfg.policy, &mut rng)?;
        let x = sample_outcome(&mut rng, b_true, &p);
        state.record(p, x)?;
        let post = state.posterior();
        records.push(StepRecord {
            step,
            tau: p.tau(),
            theta: p.theta(),
            outcome: x,
            posterior_entropy: post.entropy(),
            posterior_std: post.std_dev(),
            posterior_mean: post.mean(),
        });
    }
    Ok(Trajectory { trial_index, seed: cfg.master_seed, b_true, records })
}

/// All trials of the ensemble, in trial order. Trials run concurrently.
pub fn run_trials(cfg: &SimConfig) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    (0..cfg.n_realizations as u64).into_par_iter().map(|i| run_trial(cfg, i)).collect()
}

fn mean_and_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-step mean and population standard deviation across trajectories.
pub fn summarize(trials: &[Trajectory]) -> EnsembleSummary {
    let n_steps = trials.iter().map(|t| t.records.len()).min().unwrap_or(0);
    let steps = (0..n_steps)
        .map(|k| {
            let (mean_entropy, std_entropy) = mean_and_std(trials.iter().map(|t| t.records[k].posterior_entropy));
            let (mean_posterior_std, std_posterior_std) = mean_and_std(trials.iter().map(|t| t.records[k].posterior_std));
            StepSummary { step: k + 1, mean_entropy, std_entropy, mean_posterior_std, std_posterior_std }
        })
        .collect();
    EnsembleSummary { n_trials: trials.len(), steps }
}

pub fn run_ensemble(cfg: &SimConfig) -> Result<EnsembleSummary> {
    Ok(summarize(&run_trials(cfg)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PolicyKind;
    use std::f64::consts::PI;

    fn quick(kind: PolicyKind) -> SimConfig {
        SimConfig {
            n_measurements: 4,
            n_realizations: 3,
            master_seed: 42,
            grid: FieldGrid::new(-20.0, 20.0, 1 << 11).unwrap(),
            policy: PolicyConfig { kind, tau_grid_size: 8, theta_grid_size: 8, ..PolicyConfig::default() },
            ..SimConfig::default()
        }
    }

    #[test]
    fn deterministic_outcomes() {
        let mut rng = trial_rng(1, 0);
        let zero = RamseyParams::new(0.0, 0.0, CoherenceTime::Infinite).unwrap();
        let one = RamseyParams::new(1.0, PI, CoherenceTime::Infinite).unwrap();
        for _ in 0..1000 {
            assert_eq!(sample_outcome(&mut rng, 0.7, &zero), Outcome::Zero);
            assert_eq!(sample_outcome(&mut rng, 0.0, &one), Outcome::One);
        }
    }

    #[test]
    fn unbiased_outcome_rate() {
        let mut rng = trial_rng(5, 2);
        let p = RamseyParams::new(1.0, PI / 2.0, CoherenceTime::Infinite).unwrap();
        let n = 10_000;
        let zeros = (0..n).filter(|_| sample_outcome(&mut rng, 0.0, &p) == Outcome::Zero).count();
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((zeros as f64 - n as f64 / 2.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn one_draw_per_outcome() {
        let p = RamseyParams::new(0.4, 0.1, CoherenceTime::Infinite).unwrap();
        let mut a = trial_rng(9, 0);
        let mut b = trial_rng(9, 0);
        sample_outcome(&mut a, 0.3, &p);
        let _: f64 = b.gen();
        assert_eq!(a.gen::<u64>(), b.gen::<u64>());
    }

    #[test]
    fn trial_streams_differ() {
        assert_ne!(trial_rng(3, 0).gen::<u64>(), trial_rng(3, 1).gen::<u64>());
        assert_ne!(trial_rng(3, 0).gen::<u64>(), trial_rng(4, 0).gen::<u64>());
    }

    #[test]
    fn field_samples_follow_prior() {
        let d = FieldDistribution::gaussian(FieldGrid::default(), 1.0, 2.0).unwrap();
        let mut rng = trial_rng(0, 0);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_field(&mut rng, &d)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 3.0 * 2.0 / (n as f64).sqrt());
        assert!((var.sqrt() - 2.0).abs() < 0.05);
        let spike = FieldDistribution::spike(FieldGrid::default(), 3.0);
        let b = sample_field(&mut rng, &spike);
        assert!((b - 3.0).abs() < 2.0 * FieldGrid::default().spacing());
    }

    #[test]
    fn trials_are_reproducible() {
        for kind in PolicyKind::ALL {
            let cfg = quick(kind);
            let a = run_trial(&cfg, 1).unwrap();
            assert_eq!(a, run_trial(&cfg, 1).unwrap());
            assert_eq!(a.records.len(), 4);
            assert!(a.records.iter().all(|r| r.posterior_entropy.is_finite()));
        }
    }

    #[test]
    fn zero_measurements_leave_prior() {
        let cfg = SimConfig { n_measurements: 0, ..quick(PolicyKind::Kpe) };
        let t = run_trial(&cfg, 0).unwrap();
        assert!(t.records.is_empty());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn fixed_true_field() {
        let cfg = SimConfig { true_field: TrueField::Fixed(1.25), ..quick(PolicyKind::Random) };
        assert_eq!(run_trial(&cfg, 0).unwrap().b_true, 1.25);
    }

    #[test]
    fn single_trial_summary() {
        let cfg = SimConfig { n_realizations: 1, ..quick(PolicyKind::Kpe) };
        let t = run_trial(&cfg, 0).unwrap();
        let s = run_ensemble(&cfg).unwrap();
        assert_eq!(s.n_trials, 1);
        for (r, st) in t.records.iter().zip(&s.steps) {
            assert_eq!(st.mean_entropy, r.posterior_entropy);
            assert_eq!(st.mean_posterior_std, r.posterior_std);
            assert_eq!(st.std_entropy, 0.0);
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let cfg = quick(PolicyKind::MyopicEntropy);
        let seq: Vec<_> = (0..3).map(|i| run_trial(&cfg, i).unwrap()).collect();
        assert_eq!(run_trials(&cfg).unwrap(), seq);
        let mut rev = seq.clone();
        rev.reverse();
        let (a, b) = (summarize(&seq), summarize(&rev));
        for (x, y) in a.steps.iter().zip(&b.steps) {
            assert!((x.mean_entropy - y.mean_entropy).abs() < 1e-12);
            assert!((x.std_posterior_std - y.std_posterior_std).abs() < 1e-12);
        }
    }

    #[test]
    fn validation() {
        assert!(SimConfig::default().validate().is_ok());
        assert!(SimConfig { prior_std: 4.0, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { n_realizations: 0, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { true_field: TrueField::Fixed(30.0), ..SimConfig::default() }.validate().is_err());
    }

    #[test]
    fn csv_layouts() {
        let cfg = quick(PolicyKind::Kpe);
        let t = run_trial(&cfg, 0).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("step,tau,theta,outcome,posterior_entropy,posterior_std,posterior_mean,total_tau\n"));
        assert_eq!(text.lines().count(), 5);
        let mut buf = Vec::new();
        summarize(&[t]).write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("step,mean_entropy,std_entropy,mean_posterior_std,std_posterior_std\n"));
    }
}
