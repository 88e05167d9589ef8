//! Measurement-scheduling policies: map the current posterior and history to
//! the next `(tau, theta)`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{
    bayes_update, binary_entropy_of_masses, outcome_pair, wrap_phase, xlogx, CoherenceTime, FieldDistribution,
    Outcome, RamseyParams, MIN_EVIDENCE,
};
use crate::error::{Error, Result};

/// Default tolerance (nats) within which two mutual-information scores tie.
pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-9;

/// Grid points whose probability weight falls below this fraction of the
/// largest weight are left out of the search objective.
pub const SUPPORT_CUTOFF: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Random,
    Kpe,
    MyopicEntropy,
    VarianceMin,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [PolicyKind::Random, PolicyKind::Kpe, PolicyKind::VarianceMin, PolicyKind::MyopicEntropy];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Random => "random",
            PolicyKind::Kpe => "kpe",
            PolicyKind::MyopicEntropy => "myopic_entropy",
            PolicyKind::VarianceMin => "variance_min",
        }
    }

    /// Short label used for artifact file names.
    pub fn short_name(self) -> &'static str {
        match self {
            PolicyKind::Random => "random",
            PolicyKind::Kpe => "kpe",
            PolicyKind::MyopicEntropy => "myopic",
            PolicyKind::VarianceMin => "variance",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "random" => Ok(PolicyKind::Random),
            "kpe" => Ok(PolicyKind::Kpe),
            "myopic" | "myopic_entropy" => Ok(PolicyKind::MyopicEntropy),
            "variance" | "variance_min" => Ok(PolicyKind::VarianceMin),
            other => Err(Error::config("policy", format!("unknown policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_grid_size: usize,
    pub theta_grid_size: usize,
    pub kpe_tau0: f64,
    pub kpe_theta0: f64,
    pub tie_tolerance: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            kind: PolicyKind::MyopicEntropy,
            tau_min: 5.0 / 128.0,
            tau_max: 5.0,
            tau_grid_size: 64,
            theta_grid_size: 64,
            kpe_tau0: 5.0,
            kpe_theta0: 0.0,
            tie_tolerance: DEFAULT_TIE_TOLERANCE,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_min > 0.0 && self.tau_min.is_finite()) {
            return Err(Error::invalid("tau_min", format!("must be finite and > 0, got {}", self.tau_min)));
        }
        if !(self.tau_max > self.tau_min && self.tau_max.is_finite()) {
            return Err(Error::invalid("tau_max", format!("must be finite and > tau_min, got {}", self.tau_max)));
        }
        if self.tau_grid_size < 2 {
            return Err(Error::invalid("tau_grid_size", "must be at least 2"));
        }
        if self.theta_grid_size < 1 {
            return Err(Error::invalid("theta_grid_size", "must be at least 1"));
        }
        if !(self.kpe_tau0 > 0.0 && self.kpe_tau0.is_finite()) {
            return Err(Error::invalid("kpe_tau0", format!("must be finite and > 0, got {}", self.kpe_tau0)));
        }
        if !(0.0..TAU).contains(&self.kpe_theta0) {
            return Err(Error::invalid("kpe_theta0", format!("must lie in [0, 2pi), got {}", self.kpe_theta0)));
        }
        if !(self.tie_tolerance >= 0.0 && self.tie_tolerance.is_finite()) {
            return Err(Error::invalid("tie_tolerance", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn search_grid(&self) -> SearchGrid {
        SearchGrid::new(self.tau_min, self.tau_max, self.tau_grid_size, self.theta_grid_size)
    }
}

/// Product grid searched by the myopic and variance policies: geometric in
/// `tau`, uniform in `theta` on `[0, 2pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    taus: Vec<f64>,
    thetas: Vec<f64>,
}

impl SearchGrid {
    pub fn new(tau_min: f64, tau_max: f64, n_tau: usize, n_theta: usize) -> Self {
        let log_ratio = (tau_max / tau_min).ln();
        let last = (n_tau.max(2) - 1) as f64;
        let taus = (0..n_tau)
            .map(|i| match i {
                0 => tau_min,
                i if i + 1 == n_tau => tau_max,
                i => tau_min * (log_ratio * i as f64 / last).exp(),
            })
            .collect();
        let thetas = (0..n_theta).map(|k| TAU * k as f64 / n_theta as f64).collect();
        Self { taus, thetas }
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn len(&self) -> usize {
        self.taus.len() * self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fractional index of `tau` on the geometric axis.
    pub fn tau_position(&self, tau: f64) -> f64 {
        let (lo, hi) = (self.taus[0], self.taus[self.taus.len() - 1]);
        (tau / lo).ln() / (hi / lo).ln() * (self.taus.len() - 1) as f64
    }

    /// Fractional index of `theta` on the uniform axis, in `[0, n_theta)`.
    pub fn theta_position(&self, theta: f64) -> f64 {
        wrap_phase(theta) / TAU * self.thetas.len() as f64
    }

    /// Distance between two exposure times in `tau` grid cells.
    pub fn tau_cell_delta(&self, a: f64, b: f64) -> f64 {
        (self.tau_position(a) - self.tau_position(b)).abs()
    }

    /// Circular distance between two phases in `theta` grid cells.
    pub fn theta_cell_delta(&self, a: f64, b: f64) -> f64 {
        let n = self.thetas.len() as f64;
        let d = (self.theta_position(a) - self.theta_position(b)).rem_euclid(n);
        d.min(n - d)
    }
}

/// Posterior and measurement record seen by a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    posterior: FieldDistribution,
    history: Vec<(RamseyParams, Outcome)>,
    coherence: CoherenceTime,
}

impl PolicyState {
    pub fn new(prior: FieldDistribution, coherence: CoherenceTime) -> Self {
        Self { posterior: prior, history: Vec::new(), coherence }
    }

    pub fn posterior(&self) -> &FieldDistribution {
        &self.posterior
    }

    pub fn history(&self) -> &[(RamseyParams, Outcome)] {
        &self.history
    }

    pub fn step_index(&self) -> usize {
        self.history.len()
    }

    pub fn coherence(&self) -> CoherenceTime {
        self.coherence
    }

    /// Condition on an observed outcome and append it to the history.
    pub fn record(&mut self, p: RamseyParams, x: Outcome) -> Result<()> {
        self.posterior = bayes_update(&self.posterior, &p, x)?;
        self.history.push((p, x));
        Ok(())
    }
}

/// Quantity scored on every search-grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MutualInformation,
    ExpectedVariance,
}

/// Objective values over a [`SearchGrid`], row-major in `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    grid: SearchGrid,
    objective: Objective,
    values: Vec<f64>,
}

impl ScoreTable {
    pub fn grid(&self) -> &SearchGrid {
        &self.grid
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i_tau: usize, i_theta: usize) -> f64 {
        self.values[i_tau * self.grid.thetas.len() + i_theta]
    }

    /// Best cell: maximal MI or minimal expected variance. Every cell within
    /// `tol` of the optimum ties, and ties go to the smallest `tau`, then the
    /// smallest `theta`.
    pub fn best_cell(&self, tol: f64) -> (usize, usize) {
        let n_theta = self.grid.thetas.len();
        let idx = match self.objective {
            Objective::MutualInformation => {
                let best = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                self.values.iter().position(|&v| v >= best - tol)
            }
            Objective::ExpectedVariance => {
                let best = self.values.iter().copied().fold(f64::INFINITY, f64::min);
                self.values.iter().position(|&v| v <= best + tol)
            }
        }
        .unwrap_or(0);
        (idx / n_theta, idx % n_theta)
    }
}

/// Probability weights of the grid points that carry non-negligible mass.
struct Support {
    b: Vec<f64>,
    w: Vec<f64>,
}

impl Support {
    fn of(d: &FieldDistribution) -> Self {
        let max = d.weighted().map(|(_, w)| w).fold(0.0, f64::max);
        let cut = max * SUPPORT_CUTOFF;
        let (b, w) = d.weighted().filter(|&(_, w)| w > cut).unzip();
        Self { b, w }
    }
}

fn mi_row(s: &Support, decay: f64, tau: f64, thetas: &[f64]) -> Vec<f64> {
    let (sb, cb): (Vec<f64>, Vec<f64>) = s.b.iter().map(|&b| (2.0 * tau * b).sin_cos()).unzip();
    let n = thetas.len();
    // shifting theta by pi swaps the outcomes and leaves MI unchanged
    let mirrored = n.is_multiple_of(2);
    let computed = if mirrored { n / 2 } else { n };
    let mut row = vec![0.0; n];
    for k in 0..computed {
        let (st, ct) = thetas[k].sin_cos();
        let (a, bq) = (decay * ct, decay * st);
        let (mut m0, mut m1, mut cond) = (0.0, 0.0, 0.0);
        for ((&w, &c1), &s1) in s.w.iter().zip(&cb).zip(&sb) {
            let (l0, l1) = outcome_pair(a * c1 - bq * s1);
            m0 += w * l0;
            m1 += w * l1;
            cond -= w * (xlogx(l0) + xlogx(l1));
        }
        row[k] = binary_entropy_of_masses(m0, m1) - cond / (m0 + m1);
    }
    if mirrored {
        for k in 0..computed {
            row[k + computed] = row[k];
        }
    }
    row
}

fn variance_row(s: &Support, decay: f64, tau: f64, thetas: &[f64]) -> Vec<f64> {
    let total: f64 = s.w.iter().sum();
    let centre = s.w.iter().zip(&s.b).map(|(w, b)| w * b).sum::<f64>() / total;
    let (sb, cb): (Vec<f64>, Vec<f64>) = s.b.iter().map(|&b| (2.0 * tau * b).sin_cos()).unzip();
    thetas
        .iter()
        .map(|&theta| {
            let (st, ct) = theta.sin_cos();
            let (a, bq) = (decay * ct, decay * st);
            let mut m = [[0.0f64; 3]; 2];
            for (((&w, &b), &c1), &s1) in s.w.iter().zip(&s.b).zip(&cb).zip(&sb) {
                let (l0, l1) = outcome_pair(a * c1 - bq * s1);
                let db = b - centre;
                for (row, l) in m.iter_mut().zip([l0, l1]) {
                    let wl = w * l;
                    row[0] += wl;
                    row[1] += wl * db;
                    row[2] += wl * db * db;
                }
            }
            let sum = m[0][0] + m[1][0];
            m.iter()
                .filter(|row| row[0] / sum > MIN_EVIDENCE)
                .map(|row| {
                    let mean = row[1] / row[0];
                    row[0] / sum * (row[2] / row[0] - mean * mean).max(0.0)
                })
                .sum()
        })
        .collect()
}

/// Score every cell of `grid` for the given posterior. Cells are evaluated in
/// parallel; the result does not depend on scheduling.
pub fn score_table(
    posterior: &FieldDistribution,
    coherence: CoherenceTime,
    grid: &SearchGrid,
    objective: Objective,
) -> ScoreTable {
    let support = Support::of(posterior);
    let rows: Vec<Vec<f64>> = grid
        .taus
        .par_iter()
        .map(|&tau| {
            let decay = coherence.decay(tau);
            match objective {
                Objective::MutualInformation => mi_row(&support, decay, tau, &grid.thetas),
                Objective::ExpectedVariance => variance_row(&support, decay, tau, &grid.thetas),
            }
        })
        .collect();
    ScoreTable { grid: grid.clone(), objective, values: rows.concat() }
}

fn cell_params(table: &ScoreTable, cell: (usize, usize), coherence: CoherenceTime) -> Result<RamseyParams> {
    RamseyParams::new(table.grid.taus[cell.0], table.grid.thetas[cell.1], coherence)
}

/// `tau` uniform on `[tau_min, tau_max)`, `theta` uniform on `[0, 2pi)`.
pub fn next_params_random<R: Rng + ?Sized>(state: &PolicyState, cfg: &PolicyConfig, rng: &mut R) -> Result<RamseyParams> {
    let tau = rng.gen_range(cfg.tau_min..cfg.tau_max);
    let theta = rng.gen_range(0.0..TAU);
    RamseyParams::new(tau, theta, state.coherence)
}

/// Iterative Kitaev schedule: halve `tau` and average the phase with the
/// last outcome. The first call returns the hyperparameters.
pub fn next_params_kpe(state: &PolicyState, cfg: &PolicyConfig) -> Result<RamseyParams> {
    match state.history.last() {
        None => RamseyParams::new(cfg.kpe_tau0, cfg.kpe_theta0, state.coherence),
        Some((prev, x)) => kpe_successor(prev, *x, state.coherence),
    }
}

/// KPE parameters that follow `prev` after observing `x`.
pub fn kpe_successor(prev: &RamseyParams, x: Outcome, coherence: CoherenceTime) -> Result<RamseyParams> {
    RamseyParams::new(prev.tau() / 2.0, wrap_phase((prev.theta() + PI * x.value() as f64) / 2.0), coherence)
}

/// Grid cell maximising the mutual information with the next outcome.
pub fn next_params_myopic_entropy(state: &PolicyState, cfg: &PolicyConfig) -> Result<RamseyParams> {
    let table = score_table(&state.posterior, state.coherence, &cfg.search_grid(), Objective::MutualInformation);
    cell_params(&table, table.best_cell(cfg.tie_tolerance), state.coherence)
}

/// Grid cell minimising the expected posterior variance. The tie tolerance
/// is taken relative to the current variance.
pub fn next_params_variance_min(state: &PolicyState, cfg: &PolicyConfig) -> Result<RamseyParams> {
    let table = score_table(&state.posterior, state.coherence, &cfg.search_grid(), Objective::ExpectedVariance);
    let tol = cfg.tie_tolerance * state.posterior.variance();
    cell_params(&table, table.best_cell(tol), state.coherence)
}

/// Dispatch on `cfg.kind`. Only the random policy draws from `rng`.
pub fn next_params<R: Rng + ?Sized>(state: &PolicyState, cfg: &PolicyConfig, rng: &mut R) -> Result<RamseyParams> {
    match cfg.kind {
        PolicyKind::Random => next_params_random(state, cfg, rng),
        PolicyKind::Kpe => next_params_kpe(state, cfg),
        PolicyKind::MyopicEntropy => next_params_myopic_entropy(state, cfg),
        PolicyKind::VarianceMin => next_params_variance_min(state, cfg),
    }
}
