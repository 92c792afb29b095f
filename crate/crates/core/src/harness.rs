//! Monte Carlo runner: many independent windows per configuration, and
//! Cartesian sweeps over load, replica count and iteration limit.

use serde::{Deserialize, Serialize};

use crate::decoder::{run_engine, Termination};
use crate::error::{Error, Result};
use crate::framegen::{derive_seed, generate_access_map, superpose, window_rng};
use crate::metrics::{AccessStat, Counters};
use crate::model::{Alpha, ChannelParams, EngineLimits, PowerPool, PowerSelection, SystemConfig};

/// How windows of one point are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Rayon's current pool; falls back to `Sequential` without the
    /// `parallel` feature.
    #[default]
    Parallel,
    Sequential,
}

/// Per-window result kept for bound checks and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSummary {
    pub decoded: usize,
    pub counters: Counters,
    pub iterations_run: u32,
    pub terminated_by: Termination,
    pub budget_exhausted: bool,
    pub safety_cap_hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub n: usize,
    pub r: usize,
    pub k: usize,
    pub alpha: Alpha,
    pub windows: usize,
    pub access_prob: f64,
    pub ci95: f64,
    pub mean_wr: f64,
    pub mean_dec: f64,
    pub mean_peak_storage: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub row: SweepRow,
    pub stat: AccessStat,
    pub windows: Vec<WindowSummary>,
}

impl PointResult {
    pub fn budget_exhausted_windows(&self) -> usize {
        self.windows.iter().filter(|w| w.budget_exhausted).count()
    }

    pub fn safety_cap_windows(&self) -> usize {
        self.windows.iter().filter(|w| w.safety_cap_hit).count()
    }
}

fn simulate_window(config: &SystemConfig, window: u64) -> Result<WindowSummary> {
    let mut rng = window_rng(config.seed, window);
    let map = generate_access_map(config, &mut rng)?;
    let m0 = superpose(&map, config.n_rbs);
    let outcome = run_engine(&m0, config, &map)?;
    Ok(WindowSummary {
        decoded: outcome.decoded.len(),
        counters: outcome.counters,
        iterations_run: outcome.iterations_run,
        terminated_by: outcome.terminated_by,
        budget_exhausted: outcome.budget_exhausted,
        safety_cap_hit: outcome.safety_cap_hit,
    })
}

#[cfg(feature = "parallel")]
fn simulate_windows(config: &SystemConfig, execution: Execution) -> Result<Vec<WindowSummary>> {
    use rayon::prelude::*;
    let windows = 0..config.windows as u64;
    match execution {
        Execution::Parallel => windows.into_par_iter().map(|w| simulate_window(config, w)).collect(),
        Execution::Sequential => windows.map(|w| simulate_window(config, w)).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn simulate_windows(config: &SystemConfig, _execution: Execution) -> Result<Vec<WindowSummary>> {
    (0..config.windows as u64).map(|w| simulate_window(config, w)).collect()
}

fn mean(values: impl Iterator<Item = u64>, count: usize) -> f64 {
    let total: u128 = values.map(u128::from).sum();
    total as f64 / count as f64
}

/// Runs `config.windows` frames; window `w` draws from stream `w` of `config.seed`.
pub fn run_point_with(config: &SystemConfig, execution: Execution) -> Result<PointResult> {
    config.validate()?;
    let windows = simulate_windows(config, execution)?;
    let counts: Vec<usize> = windows.iter().map(|w| w.decoded).collect();
    let stat = AccessStat::from_counts(&counts, config.n_devices);
    let count = windows.len();
    let row = SweepRow {
        gamma: config.gamma(),
        n: config.n_devices,
        r: config.n_rbs,
        k: config.k_repetitions,
        alpha: config.alpha,
        windows: count,
        access_prob: stat.mean_access_prob,
        ci95: stat.ci95_halfwidth,
        mean_wr: mean(windows.iter().map(|w| w.counters.wr_ops), count),
        mean_dec: mean(windows.iter().map(|w| w.counters.dec_ops), count),
        mean_peak_storage: mean(windows.iter().map(|w| w.counters.peak_storage), count),
        seed: config.seed,
    };
    Ok(PointResult { row, stat, windows })
}

pub fn run_point(config: &SystemConfig) -> Result<SweepRow> {
    Ok(run_point_with(config, Execution::default())?.row)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadAxis {
    /// N = round(gamma * r) for each value.
    Gamma { values: Vec<f64>, r: usize },
    /// Explicit (N, R) pairs.
    Pairs(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub load: LoadAxis,
    pub k_values: Vec<usize>,
    pub alpha_values: Vec<Alpha>,
    pub windows: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub pool: PowerPool,
    #[serde(default)]
    pub power_selection: PowerSelection,
    #[serde(default)]
    pub limits: EngineLimits,
}

impl SweepSpec {
    pub fn gamma_grid(values: Vec<f64>, r: usize, k_values: Vec<usize>, alpha_values: Vec<Alpha>) -> Self {
        SweepSpec {
            load: LoadAxis::Gamma { values, r },
            k_values,
            alpha_values,
            windows: 10_000,
            base_seed: 0,
            channel: ChannelParams::default(),
            pool: PowerPool::default(),
            power_selection: PowerSelection::Uniform,
            limits: EngineLimits::default(),
        }
    }

    pub fn with_windows(mut self, windows: usize) -> Self {
        self.windows = windows;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self
    }

    fn load_points(&self) -> Result<Vec<(usize, usize)>> {
        match &self.load {
            LoadAxis::Gamma { values, r } => {
                if values.is_empty() {
                    return Err(Error::invalid("gamma", "at least one value is required"));
                }
                values
                    .iter()
                    .map(|&g| {
                        if !(g.is_finite() && g > 0.0) {
                            return Err(Error::invalid("gamma", format!("{g} is not a positive number")));
                        }
                        let n = (g * *r as f64).round() as usize;
                        if n == 0 {
                            return Err(Error::invalid("gamma", format!("{g} * {r} rounds to zero devices")));
                        }
                        Ok((n, *r))
                    })
                    .collect()
            }
            LoadAxis::Pairs(pairs) if pairs.is_empty() => Err(Error::invalid("n", "at least one (N, R) pair is required")),
            LoadAxis::Pairs(pairs) => Ok(pairs.clone()),
        }
    }

    /// Every grid point in output order (load, then K, then alpha), each
    /// with its own derived seed. Fails on the first invalid point.
    pub fn configs(&self) -> Result<Vec<SystemConfig>> {
        if self.k_values.is_empty() {
            return Err(Error::invalid("k", "at least one value is required"));
        }
        if self.alpha_values.is_empty() {
            return Err(Error::invalid("alpha", "at least one value is required"));
        }
        let mut configs = Vec::new();
        for (n, r) in self.load_points()? {
            for &k in &self.k_values {
                for &alpha in &self.alpha_values {
                    let config = SystemConfig {
                        n_devices: n,
                        n_rbs: r,
                        k_repetitions: k,
                        alpha,
                        channel: self.channel,
                        pool: self.pool.clone(),
                        windows: self.windows,
                        seed: derive_seed(self.base_seed, configs.len() as u64),
                        power_selection: self.power_selection.clone(),
                        limits: self.limits,
                    };
                    config.validate()?;
                    configs.push(config);
                }
            }
        }
        Ok(configs)
    }
}

pub fn run_sweep_with(spec: &SweepSpec, execution: Execution) -> Result<Vec<PointResult>> {
    spec.configs()?.iter().map(|c| run_point_with(c, execution)).collect()
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    Ok(run_sweep_with(spec, Execution::default())?.into_iter().map(|p| p.row).collect())
}
