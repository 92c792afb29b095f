//! Brute-force references for small instances.
//!
//! Nothing here goes through the decoder module: residuals and SIC passes
//! are recomputed from the raw matrix with exact rationals, and the
//! search enumerates subtraction subsets directly instead of following
//! the engine's frontier.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::framegen::{superpose, AccessMap, DeviceAccess, SignalMatrix};
use crate::model::{ChannelParams, PowerSelection, Rational, SystemConfig};

pub const MAX_CLOSURE_DEVICES: usize = 12;
pub const MAX_ENUMERATION: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureResult {
    pub decodable: BTreeSet<u32>,
    /// For each decodable device, one subtraction set from M(0) under which
    /// it decodes (empty for devices decodable in the raw matrix).
    pub witness: BTreeMap<u32, BTreeSet<u32>>,
}

/// Devices whose signal survives an SIC pass on some RB of M(0) after
/// blindly subtracting `subtracted` (device id -> power).
fn decodable_after(m0: &SignalMatrix, subtracted: &BTreeMap<u32, Rational>, channel: &ChannelParams) -> Vec<u32> {
    let mut out = Vec::new();
    for rb in &m0.rbs {
        let mut interference: Rational = rb.ghost_components.iter().sum();
        let mut present: Vec<(Rational, u32)> = Vec::new();
        for c in &rb.real_components {
            if !subtracted.contains_key(&c.device_id) {
                present.push((c.power, c.device_id));
            }
        }
        for (device, power) in subtracted {
            if !rb.real_components.iter().any(|c| c.device_id == *device) {
                interference += power;
            }
        }
        // strongest first, lowest id among equals
        present.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut remaining: Rational = present.iter().map(|p| p.0).sum();
        for (power, device) in present {
            remaining -= power;
            let sinr_den = remaining + interference + channel.noise_power;
            if power < channel.tau * sinr_den {
                break;
            }
            out.push(device);
        }
    }
    out
}

/// Fixpoint of "decode whatever some subset of already-decodable signals,
/// blindly subtracted from M(0), exposes".
pub fn closure_decode(m0: &SignalMatrix, channel: &ChannelParams) -> Result<ClosureResult> {
    let mut powers: BTreeMap<u32, Rational> = BTreeMap::new();
    for rb in &m0.rbs {
        for c in &rb.real_components {
            powers.insert(c.device_id, c.power);
        }
    }
    if powers.len() > MAX_CLOSURE_DEVICES {
        return Err(Error::OracleTooLarge {
            what: "devices",
            size: powers.len() as u128,
            limit: MAX_CLOSURE_DEVICES as u128,
        });
    }

    let mut witness: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for d in decodable_after(m0, &BTreeMap::new(), channel) {
        witness.entry(d).or_default();
    }
    let mut tried: HashSet<Vec<u32>> = HashSet::new();
    tried.insert(Vec::new());
    loop {
        let known: Vec<u32> = witness.keys().copied().collect();
        let mut grew = false;
        for mask in 1u32..(1u32 << known.len()) {
            let subset: Vec<u32> = (0..known.len())
                .filter(|bit| mask & (1 << bit) != 0)
                .map(|bit| known[bit])
                .collect();
            if !tried.insert(subset.clone()) {
                continue;
            }
            let subtracted: BTreeMap<u32, Rational> = subset.iter().map(|d| (*d, powers[d])).collect();
            for d in decodable_after(m0, &subtracted, channel) {
                if let std::collections::btree_map::Entry::Vacant(slot) = witness.entry(d) {
                    slot.insert(subset.iter().copied().collect());
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    Ok(ClosureResult {
        decodable: witness.keys().copied().collect(),
        witness,
    })
}

fn k_subsets(r: usize, k: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, r: usize, k: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..r {
            if r - i < k - current.len() {
                break;
            }
            current.push(i as u32);
            rec(i + 1, r, k, current, out);
            current.pop();
        }
    }
    rec(0, r, k, &mut current, &mut out);
    out
}

/// Every access map the configuration can produce; all are equally likely
/// under uniform selection.
pub fn enumerate_access_maps(config: &SystemConfig) -> Result<impl Iterator<Item = AccessMap>> {
    config.validate()?;
    let rb_sets = k_subsets(config.n_rbs, config.k_repetitions);
    let levels = config.pool.levels().to_vec();
    let choices = (rb_sets.len() * levels.len()) as u128;
    let space = (0..config.n_devices).try_fold(1u128, |acc, _| acc.checked_mul(choices).filter(|v| *v <= MAX_ENUMERATION));
    let space = space.ok_or(Error::OracleTooLarge {
        what: "access maps",
        size: choices.saturating_pow(config.n_devices as u32),
        limit: MAX_ENUMERATION,
    })?;
    let n = config.n_devices;
    let per_device = choices as u64;
    Ok((0..space as u64).map(move |mut code| {
        let devices = (0..n)
            .map(|id| {
                let choice = (code % per_device) as usize;
                code /= per_device;
                DeviceAccess {
                    id: id as u32,
                    rbs: rb_sets[choice / levels.len()].clone(),
                    power: levels[choice % levels.len()],
                }
            })
            .collect();
        AccessMap { devices }
    }))
}

/// Exact expected decoded fraction with unbounded iterations, by
/// enumerating every access map.
pub fn exact_access_probability(config: &SystemConfig) -> Result<Ratio<i64>> {
    if config.power_selection != PowerSelection::Uniform {
        return Err(Error::invalid("power_selection", "the enumeration oracle assumes uniform selection"));
    }
    let mut maps = 0i64;
    let mut decoded = 0i64;
    for map in enumerate_access_maps(config)? {
        let m0 = superpose(&map, config.n_rbs);
        decoded += closure_decode(&m0, &config.channel)?.decodable.len() as i64;
        maps += 1;
    }
    Ok(Ratio::new(decoded, maps * config.n_devices as i64))
}
