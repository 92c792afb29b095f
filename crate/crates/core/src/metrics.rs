//! Complexity counters, access-probability statistics and worst-case
//! complexity bounds for the blind IC process.
//!
//! Counter units: one write-read op is one RB-cell read or write, one decode
//! op is one per-RB SIC pass, one storage item is one buffered RB cell or one
//! buffered MAI signal.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::decoder::EngineOutcome;
use crate::error::{Error, Result};
use crate::model::Alpha;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counters {
    pub wr_ops: u64,
    pub dec_ops: u64,
    pub peak_storage: u64,
}

impl Counters {
    /// Componentwise `<=` against a bound.
    pub fn within(&self, bound: &ComplexityBound) -> bool {
        (self.wr_ops as u128) <= bound.wr
            && (self.dec_ops as u128) <= bound.dec
            && (self.peak_storage as u128) <= bound.sto
    }
}

impl Add for Counters {
    type Output = Counters;
    fn add(self, rhs: Counters) -> Counters {
        Counters {
            wr_ops: self.wr_ops + rhs.wr_ops,
            dec_ops: self.dec_ops + rhs.dec_ops,
            peak_storage: self.peak_storage + rhs.peak_storage,
        }
    }
}

impl AddAssign for Counters {
    fn add_assign(&mut self, rhs: Counters) {
        *self = *self + rhs;
    }
}

/// Worst-case operation counts (write-read, decode, storage).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityBound {
    pub wr: u128,
    pub dec: u128,
    pub sto: u128,
}

impl ComplexityBound {
    /// Counts for a run that scans M(0) once and then materializes
    /// `generated` IC matrices, of which `held` (plus M(0)) stay buffered
    /// next to `mai` MAI signals.
    fn from_matrices(r: u128, generated: u128, held: u128, mai: u128) -> Self {
        ComplexityBound {
            wr: (2 * r).saturating_mul(generated),
            dec: r.saturating_mul(generated.saturating_add(1)),
            sto: r.saturating_mul(held.saturating_add(1)).saturating_add(mai),
        }
    }

    pub fn max(self, other: ComplexityBound) -> ComplexityBound {
        ComplexityBound {
            wr: self.wr.max(other.wr),
            dec: self.dec.max(other.dec),
            sto: self.sto.max(other.sto),
        }
    }

    pub fn dominates(&self, other: &ComplexityBound) -> bool {
        self.wr >= other.wr && self.dec >= other.dec && self.sto >= other.sto
    }
}

pub(crate) fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i + 1) as u128,
            None => return u128::MAX,
        };
    }
    acc
}

fn binomial_sum(n: u64, ks: impl Iterator<Item = u64>) -> u128 {
    ks.fold(0u128, |acc, k| acc.saturating_add(binomial(n, k)))
}

/// Worst case for alpha = 2: N-1 MAI signals from the first scan, each
/// applied once to M(0); only M(0) and the MAI signals stay buffered.
pub fn bound_alpha2(n: usize, r: usize) -> ComplexityBound {
    let mai = n.saturating_sub(1) as u128;
    ComplexityBound::from_matrices(r as u128, mai, 0, mai)
}

/// Worst case for a general finite alpha.
///
/// Matrices born in iteration `i` are distinct `(i-1)`-subsets of a pool
/// that holds at most N-1 signals whenever another iteration runs, so at
/// most `C(N-1, i-1)` of them exist. Matrices of iterations `1..alpha-1`
/// stay buffered; those of the last iteration are scanned and dropped.
/// alpha = 2 coincides with [`bound_alpha2`] and alpha = 1 buffers M(0)
/// plus every decoded signal. For alpha >= 3 the regime requires
/// `n >= 2 * alpha + 2`.
pub fn bound_general(alpha: u32, n: usize, r: usize) -> Result<ComplexityBound> {
    match alpha {
        0 => Err(Error::BoundPrecondition("alpha must be at least 1".into())),
        1 => Ok(ComplexityBound {
            wr: 0,
            dec: r as u128,
            sto: (r + n) as u128,
        }),
        2 => Ok(bound_alpha2(n, r)),
        _ if n < 2 * alpha as usize + 2 => Err(Error::BoundPrecondition(format!(
            "N = {n} is too small for alpha = {alpha} (need N >= {})",
            2 * alpha + 2
        ))),
        _ => {
            let pool = n.saturating_sub(1) as u64;
            let generated = binomial_sum(pool, 1..alpha as u64);
            let held = binomial_sum(pool, 1..(alpha as u64 - 1));
            Ok(ComplexityBound::from_matrices(r as u128, generated, held, pool as u128))
        }
    }
}

/// Counts of the textbook worst-case profile for `N/2 >> alpha`: N-2
/// exclusive devices in the first scan, then `C(N-2, i-1)` matrices and no
/// new device in every later iteration, with N buffered MAI slots.
///
/// This profile is not an upper bound (a first scan that leaves a single
/// device undecoded yields N-1 MAI signals); use [`bound_general`] for checks.
pub fn nominal_general(alpha: u32, n: usize, r: usize) -> ComplexityBound {
    let pool = n.saturating_sub(2) as u64;
    let alpha = alpha.max(1) as u64;
    let generated = binomial_sum(pool, 1..alpha);
    let held = binomial_sum(pool, 1..alpha.saturating_sub(1));
    ComplexityBound::from_matrices(r as u128, generated, held, n as u128)
}

/// The alpha >= N worst-case profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphaNBound {
    /// N-1 iterations: one exclusive device first, then `2^(i-1)` matrices
    /// and one new device per iteration, `2^(N-2)` matrices in the last one.
    pub chain: ComplexityBound,
    /// Matrices generated in the last iteration of the chain profile.
    pub chain_last_iteration_matrices: u128,
    /// N-2 iterations: N-2 exclusive devices, then `C(N-2, i-1)` matrices.
    pub stalled: ComplexityBound,
    /// Every subset of an N-1 signal pool materialized once.
    pub lattice: ComplexityBound,
}

impl AlphaNBound {
    pub fn envelope(&self) -> ComplexityBound {
        self.chain.max(self.stalled).max(self.lattice)
    }
}

fn pow2(e: u64) -> u128 {
    if e >= 127 {
        u128::MAX
    } else {
        1u128 << e
    }
}

/// Worst-case profiles for alpha >= N; with unbounded alpha every matrix
/// stays buffered.
pub fn bound_alpha_n(n: usize, r: usize) -> AlphaNBound {
    let r = r as u128;
    let n64 = n as u64;
    let (chain, last) = if n64 >= 3 {
        // iterations 2..=N-1 generate 2^(i-1) matrices each
        let generated = pow2(n64 - 1).saturating_sub(2);
        (ComplexityBound::from_matrices(r, generated, generated, (n64 - 1) as u128), pow2(n64 - 2))
    } else {
        (ComplexityBound::from_matrices(r, 0, 0, n64.saturating_sub(1) as u128), 0)
    };
    let stalled_pool = n64.saturating_sub(2);
    let stalled_generated = if n64 >= 4 {
        binomial_sum(stalled_pool, 1..stalled_pool)
    } else {
        0
    };
    let stalled = ComplexityBound::from_matrices(r, stalled_generated, stalled_generated, stalled_pool as u128);
    let lattice_pool = n64.saturating_sub(1);
    let lattice_generated = pow2(lattice_pool).saturating_sub(1);
    let lattice = ComplexityBound::from_matrices(r, lattice_generated, lattice_generated, lattice_pool as u128);
    AlphaNBound {
        chain,
        chain_last_iteration_matrices: last,
        stalled,
        lattice,
    }
}

/// The bound that applies to a run with the given alpha, if its regime is
/// covered: alpha = 2, `N >= 2 alpha + 2`, or alpha >= N (including unbounded).
pub fn applicable_bound(alpha: Alpha, n: usize, r: usize) -> Option<ComplexityBound> {
    match alpha {
        Alpha::Finite(a) if a as usize >= n => Some(bound_alpha_n(n, r).envelope()),
        Alpha::Unbounded => Some(bound_alpha_n(n, r).envelope()),
        Alpha::Finite(a) => bound_general(a, n, r).ok(),
    }
}

/// Access-probability estimate over simulated windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccessStat {
    pub mean_access_prob: f64,
    /// 95% half-width from the normal approximation over the N * windows
    /// per-device Bernoulli outcomes.
    pub ci95_halfwidth: f64,
    pub windows: usize,
    /// Standard error of the mean of per-window decoded fractions; accounts
    /// for correlation between devices of the same window.
    pub window_std_error: f64,
}

impl AccessStat {
    /// From per-window decoded-device counts.
    pub fn from_counts(decoded_counts: &[usize], n: usize) -> AccessStat {
        let windows = decoded_counts.len();
        assert!(windows > 0, "at least one window is required");
        assert!(n > 0, "at least one device is required");
        let total: usize = decoded_counts.iter().sum();
        let trials = (n * windows) as f64;
        let mean = total as f64 / trials;
        let ci95 = 1.96 * (mean * (1.0 - mean) / trials).max(0.0).sqrt();
        let window_std_error = if windows > 1 {
            let ss: f64 = decoded_counts
                .iter()
                .map(|&c| {
                    let d = c as f64 / n as f64 - mean;
                    d * d
                })
                .sum();
            (ss / (windows - 1) as f64 / windows as f64).sqrt()
        } else {
            0.0
        };
        AccessStat {
            mean_access_prob: mean,
            ci95_halfwidth: ci95,
            windows,
            window_std_error,
        }
    }
}

pub fn estimate_access(outcomes: &[EngineOutcome], n: usize) -> AccessStat {
    let counts: Vec<usize> = outcomes.iter().map(|o| o.decoded.len()).collect();
    AccessStat::from_counts(&counts, n)
}
