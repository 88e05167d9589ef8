//! Experiment commands behind the CLI. Each command computes its results in
//! full before writing any artifact.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::bayes::{mutual_information, CoherenceTime, FieldDistribution, FieldGrid, Outcome, RamseyParams};
use crate::error::{Error, Result};
use crate::fourier::{alpha_series_quadrature, closed_series_term_sum, DEFAULT_TERM_CAP};
use crate::policy::{
    next_params_kpe, score_table, Objective, PolicyConfig, PolicyKind, PolicyState, SearchGrid,
};
use crate::sim::{run_trials, summarize, EnsembleSummary, SimConfig, Trajectory};

use super::config::{as_config, parse_coherence, ConfigFile, SIM_KEYS};
use super::csv::fmt_f64;
use super::manifest::RunManifest;

/// Whether a command's own checks passed. Configuration and I/O problems are
/// reported as errors instead.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutcome {
    pub passed: bool,
    pub messages: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

fn write_artifact(out_dir: &Path, name: &str, body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<PathBuf> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = out_dir.join(name);
    let mut buf = Vec::new();
    body(&mut buf).map_err(|e| Error::io(&path, e))?;
    fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

// ---------------------------------------------------------------- mi-surface

pub const MI_SURFACE_KEYS: &[&str] =
    &["prior_mean", "prior_std", "theta", "tau_min", "tau_max", "tau_points", "coherence_times", "b_min", "b_max", "n_points"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiSurfaceSpec {
    pub prior_mean: f64,
    pub prior_std: f64,
    pub theta: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_points: usize,
    pub coherence_times: Vec<CoherenceTime>,
    pub grid: FieldGrid,
}

impl Default for MiSurfaceSpec {
    fn default() -> Self {
        Self {
            prior_mean: 0.0,
            prior_std: 3.0 / 2f64.sqrt(),
            theta: 0.0,
            tau_min: 0.0,
            tau_max: 10.0,
            tau_points: 401,
            coherence_times: vec![
                CoherenceTime::Finite(2.0),
                CoherenceTime::Finite(5.0),
                CoherenceTime::Finite(10.0),
                CoherenceTime::Infinite,
            ],
            grid: FieldGrid::default(),
        }
    }
}

impl MiSurfaceSpec {
    pub fn from_config(c: &ConfigFile) -> Result<Self> {
        c.check_keys(&[MI_SURFACE_KEYS])?;
        let d = Self::default();
        let spec = Self {
            prior_mean: c.get_or("prior_mean", d.prior_mean)?,
            prior_std: c.get_or("prior_std", d.prior_std)?,
            theta: c.get_or("theta", d.theta)?,
            tau_min: c.get_or("tau_min", d.tau_min)?,
            tau_max: c.get_or("tau_max", d.tau_max)?,
            tau_points: c.get_or("tau_points", d.tau_points)?,
            coherence_times: c.list_or("coherence_times", d.coherence_times, parse_coherence)?,
            grid: FieldGrid::new(
                c.get_or("b_min", d.grid.b_min())?,
                c.get_or("b_max", d.grid.b_max())?,
                c.get_or("n_points", d.grid.n_points())?,
            )
            .map_err(as_config)?,
        };
        if !(spec.tau_min >= 0.0 && spec.tau_max > spec.tau_min && spec.tau_max.is_finite()) {
            return Err(Error::config("tau_max", "need 0 <= tau_min < tau_max < inf"));
        }
        if spec.tau_points < 2 {
            return Err(Error::config("tau_points", "need at least 2 points"));
        }
        if !spec.theta.is_finite() {
            return Err(Error::config("theta", "must be finite"));
        }
        Ok(spec)
    }

    pub fn taus(&self) -> Vec<f64> {
        let n = self.tau_points - 1;
        (0..=n).map(|i| self.tau_min + (self.tau_max - self.tau_min) * i as f64 / n as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MiRow {
    pub coherence: CoherenceTime,
    pub tau: f64,
    pub theta: f64,
    pub mutual_information: f64,
}

/// Mutual information of a Gaussian prior over a line of exposure times, one
/// block of rows per coherence time.
pub fn mi_surface(spec: &MiSurfaceSpec) -> Result<Vec<MiRow>> {
    let prior = FieldDistribution::gaussian(spec.grid, spec.prior_mean, spec.prior_std).map_err(as_config)?;
    let taus = spec.taus();
    let mut rows = Vec::with_capacity(taus.len() * spec.coherence_times.len());
    for &coherence in &spec.coherence_times {
        let block: Vec<MiRow> = taus
            .par_iter()
            .map(|&tau| {
                let p = RamseyParams::new(tau, spec.theta, coherence)?;
                Ok(MiRow { coherence, tau, theta: p.theta(), mutual_information: mutual_information(&prior, &p) })
            })
            .collect::<Result<_>>()?;
        rows.extend(block);
    }
    Ok(rows)
}

pub fn write_mi_csv<W: Write>(rows: &[MiRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "T,tau,theta,mutual_information_nats")?;
    for r in rows {
        let t = match r.coherence {
            CoherenceTime::Finite(t) => fmt_f64(t),
            CoherenceTime::Infinite => "inf".into(),
        };
        writeln!(out, "{t},{},{},{}", fmt_f64(r.tau), fmt_f64(r.theta), fmt_f64(r.mutual_information))?;
    }
    Ok(())
}

/// Location and height of the largest value in a block of rows.
pub fn mi_peak(rows: &[MiRow]) -> Option<(f64, f64)> {
    rows.iter()
        .fold(None, |best: Option<&MiRow>, r| match best {
            Some(b) if b.mutual_information >= r.mutual_information => Some(b),
            _ => Some(r),
        })
        .map(|r| (r.tau, r.mutual_information))
}

/// Qualitative checks of the surface: finite-T blocks peak strictly inside
/// the range, the peak moves out and up with T, and MI stays in `[0, ln 2]`.
pub fn check_mi_surface(rows: &[MiRow]) -> Vec<String> {
    let mut failures = Vec::new();
    for r in rows {
        if !(0.0..=std::f64::consts::LN_2 + 1e-12).contains(&r.mutual_information) {
            failures.push(format!("MI {} at tau {} lies outside [0, ln 2]", r.mutual_information, r.tau));
        }
    }
    let mut finite: Vec<(f64, Vec<MiRow>)> = Vec::new();
    for r in rows {
        if let CoherenceTime::Finite(t) = r.coherence {
            match finite.iter_mut().find(|(tt, _)| *tt == t) {
                Some((_, block)) => block.push(*r),
                None => finite.push((t, vec![*r])),
            }
        }
    }
    finite.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut prev: Option<(f64, f64, f64)> = None;
    for (t, block) in &finite {
        let Some((tau_peak, height)) = mi_peak(block) else { continue };
        let first = block.first().map(|r| r.tau).unwrap_or(f64::NAN);
        let last = block.last().map(|r| r.tau).unwrap_or(f64::NAN);
        if !(tau_peak > first && tau_peak < last) {
            failures.push(format!("T = {t}: maximum at tau = {tau_peak} is not interior"));
        }
        if let Some((pt, ptau, ph)) = prev {
            if tau_peak < ptau || height < ph {
                failures.push(format!("T = {t}: peak ({tau_peak}, {height}) is below the T = {pt} peak ({ptau}, {ph})"));
            }
        }
        prev = Some((*t, tau_peak, height));
    }
    failures
}

pub fn cmd_mi_surface(config: Option<&Path>, out_dir: &Path) -> Result<CommandOutcome> {
    let start = Instant::now();
    let spec = MiSurfaceSpec::from_config(&ConfigFile::load_optional(config)?)?;
    let rows = mi_surface(&spec)?;
    let failures = check_mi_surface(&rows);
    let csv = write_artifact(out_dir, "mi_surface.csv", |b| write_mi_csv(&rows, b))?;
    let mut artifacts = vec![csv];
    let manifest = RunManifest::new("mi-surface", serde_json::json!({ "mi_surface": spec }), &artifacts, start.elapsed());
    artifacts.push(manifest.write(out_dir)?);
    Ok(CommandOutcome { passed: failures.is_empty(), messages: failures, artifacts })
}

// ---------------------------------------------------------------- compare

pub const COMPARE_KEYS: &[&str] = &["policies"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSpec {
    pub sim: SimConfig,
    pub policies: Vec<PolicyKind>,
}

impl Default for CompareSpec {
    fn default() -> Self {
        Self { sim: SimConfig::default(), policies: PolicyKind::ALL.to_vec() }
    }
}

impl CompareSpec {
    pub fn from_config(c: &ConfigFile, seed: Option<u64>) -> Result<Self> {
        c.check_keys(&[SIM_KEYS, COMPARE_KEYS])?;
        let mut sim = c.sim_config(SimConfig::default())?;
        if let Some(s) = seed {
            sim.master_seed = s;
        }
        let policies = c.list_or("policies", PolicyKind::ALL.to_vec(), |s| s.parse().map_err(|e: Error| e.to_string()))?;
        Ok(Self { sim, policies })
    }

    pub fn sim_for(&self, kind: PolicyKind) -> SimConfig {
        SimConfig { policy: PolicyConfig { kind, ..self.sim.policy }, ..self.sim }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRun {
    pub kind: PolicyKind,
    pub trajectories: Vec<Trajectory>,
    pub summary: EnsembleSummary,
}

/// Run every listed policy with the same seed, so each trial index sees the
/// same true field under every policy.
pub fn compare(spec: &CompareSpec) -> Result<Vec<PolicyRun>> {
    spec.policies
        .iter()
        .map(|&kind| {
            let trajectories = run_trials(&spec.sim_for(kind))?;
            let summary = summarize(&trajectories);
            Ok(PolicyRun { kind, trajectories, summary })
        })
        .collect()
}

pub fn cmd_compare(config: Option<&Path>, out_dir: &Path, seed: Option<u64>) -> Result<CommandOutcome> {
    let start = Instant::now();
    let spec = CompareSpec::from_config(&ConfigFile::load_optional(config)?, seed)?;
    let runs = compare(&spec)?;
    let mut artifacts = Vec::new();
    for run in &runs {
        artifacts.push(write_artifact(out_dir, &format!("{}.csv", run.kind.short_name()), |b| run.summary.write_csv(b))?);
    }
    let messages = runs
        .iter()
        .filter_map(|r| r.summary.steps.last().map(|s| format!("{}: final mean entropy {:.4} nats", r.kind, s.mean_entropy)))
        .collect();
    let manifest = RunManifest::new("compare", serde_json::json!({ "compare": spec }), &artifacts, start.elapsed());
    artifacts.push(manifest.write(out_dir)?);
    Ok(CommandOutcome { passed: true, messages, artifacts })
}

/// Single-policy run that also writes every trajectory.
pub fn cmd_simulate(config: Option<&Path>, out_dir: &Path, seed: Option<u64>) -> Result<CommandOutcome> {
    let start = Instant::now();
    let c = ConfigFile::load_optional(config)?;
    c.check_keys(&[SIM_KEYS])?;
    let mut sim = c.sim_config(SimConfig::default())?;
    if let Some(s) = seed {
        sim.master_seed = s;
    }
    let trajectories = run_trials(&sim)?;
    let summary = summarize(&trajectories);
    let mut artifacts = Vec::new();
    for t in &trajectories {
        artifacts.push(write_artifact(out_dir, &format!("trial_{:04}.csv", t.trial_index), |b| t.write_csv(b))?);
    }
    artifacts.push(write_artifact(out_dir, "summary.csv", |b| summary.write_csv(b))?);
    let manifest = RunManifest::new("simulate", serde_json::json!({ "sim": sim }), &artifacts, start.elapsed());
    artifacts.push(manifest.write(out_dir)?);
    Ok(CommandOutcome { passed: true, messages: Vec::new(), artifacts })
}

// ---------------------------------------------------------------- validate-alpha

/// Agreement required between the binomial series and quadrature.
pub const ALPHA_AGREEMENT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaRow {
    pub j: usize,
    pub closed: Result<f64>,
    pub quadrature: f64,
}

impl AlphaRow {
    pub fn abs_diff(&self) -> f64 {
        self.closed.as_ref().map_or(f64::NAN, |c| (c - self.quadrature).abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaValidation {
    pub rows: Vec<AlphaRow>,
    pub failures: Vec<String>,
}

impl AlphaValidation {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "j,closed_value,quadrature_value,abs_diff")?;
        for r in &self.rows {
            let closed = r.closed.as_ref().map_or_else(|_| "NaN".to_string(), |v| fmt_f64(*v));
            let diff = if r.abs_diff().is_nan() { "NaN".to_string() } else { fmt_f64(r.abs_diff()) };
            writeln!(out, "{},{closed},{},{diff}", r.j, fmt_f64(r.quadrature))?;
        }
        Ok(())
    }
}

/// Compare both evaluations for `j = 1..=j_max` and check sign, monotonicity
/// and agreement.
pub fn validate_alpha(j_max: usize, term_cap: usize) -> Result<AlphaValidation> {
    if j_max < 1 {
        return Err(Error::config("j-max", "must be >= 1"));
    }
    let quad = alpha_series_quadrature(j_max);
    let rows: Vec<AlphaRow> = (1..=j_max)
        .into_par_iter()
        .map(|j| AlphaRow { j, closed: closed_series_term_sum(j, term_cap).map(|(v, _)| v), quadrature: quad.coefficients()[j] })
        .collect();
    let mut failures = Vec::new();
    let mut prev: Option<f64> = None;
    for r in &rows {
        match &r.closed {
            Err(e) => failures.push(format!("j = {}: {e}", r.j)),
            Ok(v) => {
                if !(*v < 0.0) {
                    failures.push(format!("j = {}: closed value {v} is not negative", r.j));
                }
                if let Some(p) = prev {
                    if !(*v > p) {
                        failures.push(format!("j = {}: closed value {v} does not exceed {p}", r.j));
                    }
                }
                if !(r.abs_diff() < ALPHA_AGREEMENT) {
                    failures.push(format!("j = {}: |closed - quadrature| = {:e}", r.j, r.abs_diff()));
                }
                prev = Some(*v);
            }
        }
    }
    Ok(AlphaValidation { rows, failures })
}

pub fn cmd_validate_alpha(j_max: usize, out_dir: &Path) -> Result<CommandOutcome> {
    let start = Instant::now();
    let v = validate_alpha(j_max, DEFAULT_TERM_CAP)?;
    let mut artifacts = vec![write_artifact(out_dir, "alpha_validation.csv", |b| v.write_csv(b))?];
    let params = serde_json::json!({ "j_max": j_max, "term_cap": DEFAULT_TERM_CAP });
    let manifest = RunManifest::new("validate-alpha", params, &artifacts, start.elapsed());
    artifacts.push(manifest.write(out_dir)?);
    Ok(CommandOutcome { passed: v.passed(), messages: v.failures, artifacts })
}

// ---------------------------------------------------------------- kpe-check

pub const KPE_CHECK_KEYS: &[&str] = &[
    "coherence_time",
    "tau_min",
    "tau_max",
    "tau_grid_size",
    "theta_grid_size",
    "kpe_tau0",
    "kpe_theta0",
    "b_min",
    "b_max",
    "n_points",
    "outcomes",
];

/// Steps (one-based) at which the myopic choice must follow the KPE schedule.
pub const KPE_CHECKED_STEPS: std::ops::RangeInclusive<usize> = 2..=6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KpeCheckSpec {
    pub policy: PolicyConfig,
    pub coherence: CoherenceTime,
    pub grid: FieldGrid,
    pub outcomes: Vec<Outcome>,
}

impl Default for KpeCheckSpec {
    /// Uniform prior over `[-20, 20]`; `tau_0 = 0.8 pi` is the second-largest
    /// dyadic anchor of a 64-point geometric axis spanning a factor 128.
    fn default() -> Self {
        let tau_max = 1.6 * PI;
        Self {
            policy: PolicyConfig {
                kind: PolicyKind::MyopicEntropy,
                tau_min: tau_max / 128.0,
                tau_max,
                kpe_tau0: 0.8 * PI,
                ..PolicyConfig::default()
            },
            coherence: CoherenceTime::Infinite,
            grid: FieldGrid::default(),
            outcomes: vec![Outcome::Zero; 6],
        }
    }
}

impl KpeCheckSpec {
    pub fn from_config(c: &ConfigFile) -> Result<Self> {
        c.check_keys(&[KPE_CHECK_KEYS])?;
        let d = Self::default();
        let p = d.policy;
        let policy = PolicyConfig {
            tau_min: c.get_or("tau_min", p.tau_min)?,
            tau_max: c.get_or("tau_max", p.tau_max)?,
            tau_grid_size: c.get_or("tau_grid_size", p.tau_grid_size)?,
            theta_grid_size: c.get_or("theta_grid_size", p.theta_grid_size)?,
            kpe_tau0: c.get_or("kpe_tau0", p.kpe_tau0)?,
            kpe_theta0: c.get_or("kpe_theta0", p.kpe_theta0)?,
            ..p
        };
        policy.validate().map_err(as_config)?;
        let grid = FieldGrid::new(
            c.get_or("b_min", d.grid.b_min())?,
            c.get_or("b_max", d.grid.b_max())?,
            c.get_or("n_points", d.grid.n_points())?,
        )
        .map_err(as_config)?;
        let outcomes = c.list_or("outcomes", d.outcomes, |s| {
            s.parse::<u8>().map_err(|e| e.to_string()).and_then(|v| Outcome::from_value(v).map_err(|e| e.to_string()))
        })?;
        Ok(Self { policy, coherence: c.coherence_or("coherence_time", d.coherence)?, grid, outcomes })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KpeCheckRow {
    pub step: usize,
    pub kpe_tau: f64,
    pub kpe_theta: f64,
    pub myopic_tau: f64,
    pub myopic_theta: f64,
    pub tau_cell_delta: f64,
    pub theta_cell_delta: f64,
}

impl KpeCheckRow {
    pub fn within_one_cell(&self) -> bool {
        self.tau_cell_delta <= 1.0 + 1e-9 && self.theta_cell_delta <= 1.0 + 1e-9
    }
}

/// Follow the KPE schedule through the scripted outcomes on a uniform prior
/// and record the myopic choice on the same posterior at every step.
pub fn kpe_check(spec: &KpeCheckSpec) -> Result<Vec<KpeCheckRow>> {
    let grid: SearchGrid = spec.policy.search_grid();
    let mut state = PolicyState::new(FieldDistribution::uniform(spec.grid), spec.coherence);
    let mut rows = Vec::with_capacity(spec.outcomes.len());
    for (i, &x) in spec.outcomes.iter().enumerate() {
        let kpe = next_params_kpe(&state, &spec.policy)?;
        let table = score_table(state.posterior(), spec.coherence, &grid, Objective::MutualInformation);
        let (it, ik) = table.best_cell(spec.policy.tie_tolerance);
        let (mt, mk) = (grid.taus()[it], grid.thetas()[ik]);
        rows.push(KpeCheckRow {
            step: i + 1,
            kpe_tau: kpe.tau(),
            kpe_theta: kpe.theta(),
            myopic_tau: mt,
            myopic_theta: mk,
            tau_cell_delta: grid.tau_cell_delta(kpe.tau(), mt),
            theta_cell_delta: grid.theta_cell_delta(kpe.theta(), mk),
        });
        state.record(kpe, x)?;
    }
    Ok(rows)
}

/// Rows within the checked steps whose myopic choice strays more than one cell.
pub fn kpe_divergences(rows: &[KpeCheckRow]) -> Vec<String> {
    rows.iter()
        .filter(|r| KPE_CHECKED_STEPS.contains(&r.step) && !r.within_one_cell())
        .map(|r| {
            format!(
                "step {}: myopic ({:.6}, {:.6}) vs KPE ({:.6}, {:.6}), {:.2} tau cells, {:.2} theta cells",
                r.step, r.myopic_tau, r.myopic_theta, r.kpe_tau, r.kpe_theta, r.tau_cell_delta, r.theta_cell_delta
            )
        })
        .collect()
}

pub fn write_kpe_csv<W: Write>(rows: &[KpeCheckRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "step,kpe_tau,kpe_theta,myopic_tau,myopic_theta,tau_cell_delta,theta_cell_delta")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.step,
            fmt_f64(r.kpe_tau),
            fmt_f64(r.kpe_theta),
            fmt_f64(r.myopic_tau),
            fmt_f64(r.myopic_theta),
            fmt_f64(r.tau_cell_delta),
            fmt_f64(r.theta_cell_delta)
        )?;
    }
    Ok(())
}

pub fn cmd_kpe_check(config: Option<&Path>, out_dir: &Path) -> Result<CommandOutcome> {
    let start = Instant::now();
    let spec = KpeCheckSpec::from_config(&ConfigFile::load_optional(config)?)?;
    let rows = kpe_check(&spec)?;
    let divergences = kpe_divergences(&rows);
    let mut artifacts = vec![write_artifact(out_dir, "kpe_check.csv", |b| write_kpe_csv(&rows, b))?];
    let manifest = RunManifest::new("kpe-check", serde_json::json!({ "kpe_check": spec }), &artifacts, start.elapsed());
    artifacts.push(manifest.write(out_dir)?);
    Ok(CommandOutcome { passed: divergences.is_empty(), messages: divergences, artifacts })
}
