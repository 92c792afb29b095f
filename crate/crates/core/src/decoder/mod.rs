//! Blind iterative interference cancellation decoder.
//!
//! Three building blocks work on materialized [`SignalMatrix`] values:
//! [`sic_decode_rb`] (power-domain SIC inside one RB), [`dec_crc`] (SIC on
//! every RB plus CRC validation) and [`ic`] (blind subtraction of one MAI
//! signal from every RB). [`run_engine`] drives the iterations over an
//! indexed view of the raw matrix and produces the same decoded sets and
//! counters as chaining those blocks.

mod engine;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use engine::run_engine;

use crate::error::{Error, Result};
use crate::framegen::{AccessMap, RbSignal, SignalMatrix};
use crate::metrics::Counters;
use crate::model::{ChannelParams, DecodedSignal, Rational};

/// Why the iteration loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    AlphaReached,
    AllRecovered,
    Exhausted,
}

/// Cumulative MAI signals in join order, with the iteration each one was
/// first decoded in.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MaiPool {
    pub signals: Vec<DecodedSignal>,
    pub joined: Vec<u32>,
}

impl MaiPool {
    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    /// Signals first decoded in `iteration` (the x^(i) partition).
    pub fn decoded_in(&self, iteration: u32) -> impl Iterator<Item = &DecodedSignal> {
        self.signals
            .iter()
            .zip(&self.joined)
            .filter(move |(_, &it)| it == iteration)
            .map(|(s, _)| s)
    }
}

/// One line of the optional per-iteration trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: u32,
    pub new_matrices: u64,
    pub new_decoded: Vec<u32>,
    pub pool_size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineOutcome {
    /// Sorted device ids.
    pub decoded: Vec<u32>,
    pub iterations_run: u32,
    pub counters: Counters,
    pub terminated_by: Termination,
    pub pool: MaiPool,
    /// The storage budget stopped the expansion.
    pub budget_exhausted: bool,
    /// The safety iteration cap stopped an unbounded run.
    pub safety_cap_hit: bool,
    pub trace: Vec<IterationRecord>,
}

impl EngineOutcome {
    pub fn is_decoded(&self, device: u32) -> bool {
        self.decoded.binary_search(&device).is_ok()
    }

    /// Trace as JSON lines, one record per iteration.
    pub fn trace_json_lines(&self) -> String {
        let mut out = String::new();
        for record in &self.trace {
            out.push_str(&serde_json::to_string(record).expect("trace record serializes"));
            out.push('\n');
        }
        out
    }
}

/// Power-domain SIC inside one RB.
///
/// Strongest real component first (ties go to the lowest device id); a
/// component decodes when its power over everything else left in the RB
/// plus noise reaches tau. Ghost components are never decoded. Returns the
/// decoded signals in decoding order and the residual RB.
pub fn sic_decode_rb(rb: &RbSignal, channel: &ChannelParams) -> (Vec<DecodedSignal>, RbSignal) {
    let mut remaining = rb.real_components.clone();
    remaining.sort_by(|a, b| b.power.cmp(&a.power).then(a.device_id.cmp(&b.device_id)));
    let ghost = rb.ghost_power();
    let mut rest: Rational = remaining.iter().map(|c| c.power).sum::<Rational>() + ghost;
    let mut decoded = Vec::new();
    let mut taken = 0;
    for component in &remaining {
        rest -= component.power;
        if !channel.meets_threshold(component.power, rest + channel.noise_power) {
            break;
        }
        decoded.push(*component);
        taken += 1;
    }
    let residual = RbSignal {
        real_components: remaining.split_off(taken),
        ghost_components: rb.ghost_components.clone(),
    };
    (decoded, residual)
}

/// SIC on every RB of `matrix`, deduplicated by device id and filtered by
/// the CRC check against `truth`. Counts one decode op per RB.
pub fn dec_crc(
    matrix: &SignalMatrix,
    channel: &ChannelParams,
    truth: &AccessMap,
    counters: &mut Counters,
) -> Vec<DecodedSignal> {
    counters.dec_ops += matrix.rbs.len() as u64;
    let mut found = BTreeMap::new();
    for rb in &matrix.rbs {
        let (decoded, _) = sic_decode_rb(rb, channel);
        for signal in decoded {
            if truth.validates(&signal) {
                found.entry(signal.device_id).or_insert(signal);
            }
        }
    }
    found.into_values().collect()
}

/// Blind subtraction of `mai` from every RB of `matrix`: the component is
/// cancelled where present and leaves a ghost of equal power elsewhere.
/// Counts one read and one write per RB.
pub fn ic(
    matrix: &SignalMatrix,
    mai: &DecodedSignal,
    iteration: u32,
    counters: &mut Counters,
) -> Result<SignalMatrix> {
    if matrix.lineage.contains(&mai.device_id) {
        return Err(Error::DoubleSubtraction {
            device: mai.device_id,
        });
    }
    counters.wr_ops += 2 * matrix.rbs.len() as u64;
    let rbs = matrix
        .rbs
        .iter()
        .map(|rb| {
            let mut out = rb.clone();
            match out.real_components.iter().position(|c| c.device_id == mai.device_id) {
                Some(pos) => {
                    out.real_components.remove(pos);
                }
                None => out.ghost_components.push(mai.power),
            }
            out
        })
        .collect();
    let mut lineage = matrix.lineage.clone();
    lineage.insert(mai.device_id);
    Ok(SignalMatrix {
        rbs,
        lineage,
        born_iteration: iteration,
    })
}

/// All component powers positive.
#[cfg(test)]
pub(crate) fn rb_is_valid(rb: &RbSignal) -> bool {
    rb.real_components.iter().all(|c| c.power > Rational::from_integer(0))
        && rb.ghost_components.iter().all(|g| *g > Rational::from_integer(0))
}
