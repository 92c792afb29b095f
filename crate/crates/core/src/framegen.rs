//! Frame generation: random per-device access maps and their superposition
//! into the raw received signal matrix.

use std::collections::BTreeSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{rational_serde, DecodedSignal, PowerSelection, Rational, SystemConfig};

/// Replica placement and power level of one device in one frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceAccess {
    pub id: u32,
    /// Sorted, distinct RB indices.
    pub rbs: Vec<u32>,
    #[serde(with = "rational_serde")]
    pub power: Rational,
}

/// Ground truth for one frame.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AccessMap {
    pub devices: Vec<DeviceAccess>,
}

impl AccessMap {
    /// Builds a map from `(rbs, power)` pairs; device ids are the positions.
    pub fn from_placements<I>(placements: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, Rational)>,
    {
        let devices = placements
            .into_iter()
            .enumerate()
            .map(|(id, (mut rbs, power))| {
                rbs.sort_unstable();
                DeviceAccess {
                    id: id as u32,
                    rbs,
                    power,
                }
            })
            .collect();
        AccessMap { devices }
    }

    pub fn n_devices(&self) -> usize {
        self.devices.len()
    }

    pub fn device(&self, id: u32) -> Option<&DeviceAccess> {
        self.devices.get(id as usize).filter(|d| d.id == id)
    }

    /// CRC stand-in: a decoded signal is valid iff it matches a transmitted one.
    pub fn validates(&self, signal: &DecodedSignal) -> bool {
        self.device(signal.device_id)
            .is_some_and(|d| d.power == signal.power)
    }

    /// Checks ids, replica counts, RB ranges and pool membership against `config`.
    pub fn check_against(&self, config: &SystemConfig) -> Result<()> {
        if self.devices.len() != config.n_devices {
            return Err(Error::invalid(
                "access_map",
                format!("{} devices, expected {}", self.devices.len(), config.n_devices),
            ));
        }
        for (pos, device) in self.devices.iter().enumerate() {
            if device.id as usize != pos {
                return Err(Error::invalid("access_map", "device ids must be 0..N in order"));
            }
            if device.rbs.len() != config.k_repetitions {
                return Err(Error::invalid(
                    "access_map",
                    format!("device {} has {} replicas, expected K = {}", device.id, device.rbs.len(), config.k_repetitions),
                ));
            }
            if device.rbs.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid("access_map", "replica RBs must be sorted and distinct"));
            }
            if device.rbs.iter().any(|&rb| rb as usize >= config.n_rbs) {
                return Err(Error::invalid("access_map", format!("device {} uses an RB outside 0..R", device.id)));
            }
            if !config.pool.contains(&device.power) {
                return Err(Error::invalid("access_map", format!("device {} power is not a pool level", device.id)));
            }
        }
        Ok(())
    }
}

/// Contents of one RB: the real device signals present and the residual
/// interference left by blind subtraction of absent signals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RbSignal {
    pub real_components: Vec<DecodedSignal>,
    pub ghost_components: Vec<Rational>,
}

impl RbSignal {
    pub fn is_empty(&self) -> bool {
        self.real_components.is_empty() && self.ghost_components.is_empty()
    }

    pub fn contains_device(&self, device_id: u32) -> bool {
        self.real_components.iter().any(|c| c.device_id == device_id)
    }

    pub fn ghost_power(&self) -> Rational {
        self.ghost_components.iter().sum()
    }
}

/// One hypothesis of the received frame after a set of blind subtractions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalMatrix {
    pub rbs: Vec<RbSignal>,
    /// Devices whose signals were subtracted to derive this matrix.
    pub lineage: BTreeSet<u32>,
    pub born_iteration: u32,
}

impl SignalMatrix {
    pub fn n_rbs(&self) -> usize {
        self.rbs.len()
    }

    pub fn real_component_count(&self) -> usize {
        self.rbs.iter().map(|rb| rb.real_components.len()).sum()
    }

    pub fn is_raw(&self) -> bool {
        self.lineage.is_empty() && self.born_iteration == 0
    }
}

/// Portable per-window random stream: ChaCha8 keyed by `seed`, one stream per window.
pub fn window_rng(seed: u64, window: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(window);
    rng
}

/// SplitMix64 finaliser, used to derive independent seeds from (seed, index).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws K distinct RBs uniformly and one pool level per device.
pub fn generate_access_map<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<AccessMap> {
    config.validate_allowing_empty()?;
    let levels = config.pool.levels();
    let weighted = match &config.power_selection {
        PowerSelection::Uniform => None,
        PowerSelection::Weighted(weights) => Some(
            WeightedIndex::new(weights).map_err(|e| Error::invalid("power_selection", e.to_string()))?,
        ),
    };
    let mut devices = Vec::with_capacity(config.n_devices);
    for id in 0..config.n_devices {
        let mut rbs: Vec<u32> = index::sample(rng, config.n_rbs, config.k_repetitions)
            .into_iter()
            .map(|rb| rb as u32)
            .collect();
        rbs.sort_unstable();
        let level = match &weighted {
            None => rng.gen_range(0..levels.len()),
            Some(dist) => dist.sample(rng),
        };
        devices.push(DeviceAccess {
            id: id as u32,
            rbs,
            power: levels[level],
        });
    }
    Ok(AccessMap { devices })
}

/// Raw received matrix M(0): each RB holds the signals of the devices that chose it.
pub fn superpose(map: &AccessMap, n_rbs: usize) -> SignalMatrix {
    let mut rbs = vec![RbSignal::default(); n_rbs];
    for device in &map.devices {
        for &rb in &device.rbs {
            rbs[rb as usize]
                .real_components
                .push(DecodedSignal::new(device.id, device.power));
        }
    }
    SignalMatrix {
        rbs,
        lineage: BTreeSet::new(),
        born_iteration: 0,
    }
}
