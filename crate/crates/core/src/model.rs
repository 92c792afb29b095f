//! Domain types shared by every stage: exact powers, channel parameters,
//! the received power pool and the system configuration.
//!
//! Powers are exact rationals. Pool levels generated by
//! [`build_power_pool`] put a lone signal exactly at the SINR threshold, so
//! any floating-point comparison at that boundary would be a coin flip.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact rational quantity (watts, or the dimensionless SINR threshold).
pub type Rational = Ratio<i64>;

/// Parses `4`, `3/2` or a finite decimal such as `0.25` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: i64 = num.trim().parse().ok()?;
        let den: i64 = den.trim().parse().ok()?;
        return (den != 0).then(|| Ratio::new(num, den));
    }
    if let Some((int, frac)) = text.split_once('.') {
        if frac.is_empty() || frac.len() > 15 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = int.starts_with('-');
        let int: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().ok()? };
        let den = 10i64.checked_pow(frac.len() as u32)?;
        let frac: i64 = frac.parse().ok()?;
        let magnitude = int.abs().checked_mul(den)?.checked_add(frac)?;
        return Some(Ratio::new(if negative { -magnitude } else { magnitude }, den));
    }
    text.parse::<i64>().ok().map(Ratio::from_integer)
}

pub fn format_rational(value: &Rational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Serde adapter: integral rationals are plain JSON numbers, others `"p/q"` strings.
pub mod rational_serde {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        if value.is_integer() {
            s.serialize_i64(*value.numer())
        } else {
            s.serialize_str(&format_rational(value))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(Ratio::from_integer(v)),
            Repr::Text(t) => parse_rational(&t)
                .ok_or_else(|| serde::de::Error::custom(format!("not a rational: {t:?}"))),
        }
    }
}

pub mod rational_vec_serde {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Wrapped(#[serde(with = "rational_serde")] Rational);

    pub fn serialize<S: Serializer>(values: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(values.iter().map(|v| Wrapped(*v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
        Ok(Vec::<Wrapped>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// SINR threshold.
    #[serde(with = "rational_serde")]
    pub tau: Rational,
    /// AWGN power in watts.
    #[serde(with = "rational_serde")]
    pub noise_power: Rational,
}

impl ChannelParams {
    pub fn new(tau: Rational, noise_power: Rational) -> Result<Self> {
        let params = ChannelParams { tau, noise_power };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau <= Rational::zero() {
            return Err(Error::invalid("tau", "must be positive"));
        }
        if self.noise_power <= Rational::zero() {
            return Err(Error::invalid("noise_power", "must be positive"));
        }
        Ok(())
    }

    /// Non-strict threshold test `signal / interference_plus_noise >= tau`.
    pub fn meets_threshold(&self, signal: Rational, interference_plus_noise: Rational) -> bool {
        signal >= self.tau * interference_plus_noise
    }
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            tau: Rational::from_integer(1),
            noise_power: Rational::from_integer(1),
        }
    }
}

/// The L received power levels devices may target, strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PoolRepr", into = "PoolRepr")]
pub struct PowerPool {
    levels: Vec<Rational>,
}

#[derive(Serialize, Deserialize)]
struct PoolRepr(#[serde(with = "rational_vec_serde")] Vec<Rational>);

impl TryFrom<PoolRepr> for PowerPool {
    type Error = Error;
    fn try_from(repr: PoolRepr) -> Result<Self> {
        PowerPool::new(repr.0)
    }
}

impl From<PowerPool> for PoolRepr {
    fn from(pool: PowerPool) -> Self {
        PoolRepr(pool.levels)
    }
}

impl PowerPool {
    pub fn new(levels: Vec<Rational>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::EmptyPool);
        }
        if levels[0] <= Rational::zero() {
            return Err(Error::invalid("pool", "levels must be positive"));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("pool", "levels must be strictly increasing"));
        }
        Ok(PowerPool { levels })
    }

    pub fn from_integers(levels: &[i64]) -> Result<Self> {
        PowerPool::new(levels.iter().copied().map(Rational::from_integer).collect())
    }

    pub fn levels(&self) -> &[Rational] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn contains(&self, power: &Rational) -> bool {
        self.levels.binary_search(power).is_ok()
    }
}

impl Default for PowerPool {
    fn default() -> Self {
        PowerPool::from_integers(&[1, 2, 4]).expect("static pool")
    }
}

/// Builds `l_levels` power levels where each level sits exactly at the
/// threshold over the sum of all weaker levels plus noise:
/// `P_i = tau * (P_1 + ... + P_{i-1} + N0)`.
pub fn build_power_pool(channel: &ChannelParams, l_levels: usize) -> Result<PowerPool> {
    channel.validate()?;
    if l_levels == 0 {
        return Err(Error::invalid("levels", "at least one power level is required"));
    }
    let mut levels = Vec::with_capacity(l_levels);
    let mut weaker_sum = Rational::zero();
    for _ in 0..l_levels {
        let level = channel.tau * (weaker_sum + channel.noise_power);
        weaker_sum += level;
        levels.push(level);
    }
    PowerPool::new(levels)
}

/// One recovered device signal; also the unit of multi-access interference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DecodedSignal {
    pub device_id: u32,
    #[serde(with = "rational_serde")]
    pub power: Rational,
}

impl DecodedSignal {
    pub fn new(device_id: u32, power: Rational) -> Self {
        DecodedSignal { device_id, power }
    }
}

/// Iteration cap of the decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Alpha {
    Finite(u32),
    Unbounded,
}

impl Alpha {
    pub fn allows(&self, iteration: u32) -> bool {
        match self {
            Alpha::Finite(cap) => iteration <= *cap,
            Alpha::Unbounded => true,
        }
    }

    pub fn finite(&self) -> Option<u32> {
        match self {
            Alpha::Finite(cap) => Some(*cap),
            Alpha::Unbounded => None,
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Finite(a) => write!(f, "{a}"),
            Alpha::Unbounded => f.write_str("inf"),
        }
    }
}

impl FromStr for Alpha {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if matches!(s, "inf" | "Inf" | "INF" | "unbounded" | "∞") {
            return Ok(Alpha::Unbounded);
        }
        match s.parse::<u32>() {
            Ok(0) => Err("alpha must be at least 1".into()),
            Ok(a) => Ok(Alpha::Finite(a)),
            Err(_) => Err(format!("expected a positive integer or `inf`, got {s:?}")),
        }
    }
}

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Alpha::Finite(a) => s.serialize_u32(*a),
            Alpha::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u32),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(0) => Err(serde::de::Error::custom("alpha must be at least 1")),
            Repr::Int(a) => Ok(Alpha::Finite(a)),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// How a device picks its power level each frame.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerSelection {
    #[default]
    Uniform,
    /// Relative integer weights, one per pool level.
    Weighted(Vec<u32>),
}

/// Resource caps for unbounded or deep decoder runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineLimits {
    /// Maximum buffered RB cells plus MAI signals per window.
    pub storage_budget: u64,
    /// Iteration cap applied when alpha is unbounded.
    pub safety_iterations: u32,
}

impl Default for EngineLimits {
    fn default() -> Self {
        EngineLimits {
            storage_budget: 1_000_000,
            safety_iterations: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_devices: usize,
    pub n_rbs: usize,
    pub k_repetitions: usize,
    pub alpha: Alpha,
    pub channel: ChannelParams,
    pub pool: PowerPool,
    pub windows: usize,
    pub seed: u64,
    #[serde(default)]
    pub power_selection: PowerSelection,
    #[serde(default)]
    pub limits: EngineLimits,
}

impl SystemConfig {
    /// Configuration with the case-study channel (tau = 1, N0 = 1 W, pool {1, 2, 4} W).
    pub fn new(n_devices: usize, n_rbs: usize, k_repetitions: usize, alpha: Alpha) -> Self {
        SystemConfig {
            n_devices,
            n_rbs,
            k_repetitions,
            alpha,
            channel: ChannelParams::default(),
            pool: PowerPool::default(),
            windows: 10_000,
            seed: 0,
            power_selection: PowerSelection::Uniform,
            limits: EngineLimits::default(),
        }
    }

    pub fn with_windows(mut self, windows: usize) -> Self {
        self.windows = windows;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_pool(mut self, pool: PowerPool) -> Self {
        self.pool = pool;
        self
    }

    pub fn with_alpha(mut self, alpha: Alpha) -> Self {
        self.alpha = alpha;
        self
    }

    /// User intensity N / R.
    pub fn gamma(&self) -> f64 {
        self.n_devices as f64 / self.n_rbs as f64
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_allowing_empty()?;
        if self.n_devices == 0 {
            return Err(Error::invalid("n", "at least one device is required"));
        }
        Ok(())
    }

    /// Same as [`validate`](Self::validate) but admits N = 0 (frame fixtures only).
    pub fn validate_allowing_empty(&self) -> Result<()> {
        if self.n_rbs == 0 {
            return Err(Error::invalid("r", "at least one resource block is required"));
        }
        if self.k_repetitions == 0 {
            return Err(Error::invalid("k", "must be at least 1"));
        }
        if self.k_repetitions > self.n_rbs {
            return Err(Error::invalid(
                "k",
                format!("K = {} exceeds R = {}", self.k_repetitions, self.n_rbs),
            ));
        }
        if self.n_devices > u32::MAX as usize {
            return Err(Error::invalid("n", "too many devices"));
        }
        if self.alpha == Alpha::Finite(0) {
            return Err(Error::invalid("alpha", "must be at least 1"));
        }
        if self.windows == 0 {
            return Err(Error::invalid("windows", "must be at least 1"));
        }
        self.channel.validate()?;
        if let PowerSelection::Weighted(weights) = &self.power_selection {
            if weights.len() != self.pool.len() {
                return Err(Error::invalid("power_selection", "one weight per pool level is required"));
            }
            if weights.iter().all(|w| *w == 0) {
                return Err(Error::invalid("power_selection", "weights must not all be zero"));
            }
        }
        if self.limits.safety_iterations == 0 {
            return Err(Error::invalid("safety_iterations", "must be at least 1"));
        }
        UnitScale::new(&self.channel, &self.pool)?;
        Ok(())
    }
}

/// Integer view of a channel and pool: every power becomes an integer
/// multiple of a common unit, and `tau = tau_num / tau_den`, so the
/// threshold test is `tau_den * signal >= tau_num * (interference + noise)`
/// on integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitScale {
    unit_denominator: i64,
    level_units: Vec<u64>,
    noise_units: u64,
    tau_num: u128,
    tau_den: u128,
}

impl UnitScale {
    pub fn new(channel: &ChannelParams, pool: &PowerPool) -> Result<Self> {
        let den = pool
            .levels()
            .iter()
            .chain(std::iter::once(&channel.noise_power))
            .fold(1i64, |acc, v| acc.lcm(v.denom()));
        let to_units = |v: &Rational| -> Result<u64> {
            (v * Rational::from_integer(den))
                .to_integer()
                .to_u64()
                .ok_or_else(|| Error::invalid("pool", "power out of range"))
        };
        let level_units = pool.levels().iter().map(to_units).collect::<Result<Vec<_>>>()?;
        let noise_units = to_units(&channel.noise_power)?;
        Ok(UnitScale {
            unit_denominator: den,
            level_units,
            noise_units,
            tau_num: *channel.tau.numer() as u128,
            tau_den: *channel.tau.denom() as u128,
        })
    }

    pub fn units_of(&self, power: &Rational) -> Option<u64> {
        let scaled = power * Rational::from_integer(self.unit_denominator);
        scaled.is_integer().then(|| scaled.to_integer().to_u64()).flatten()
    }

    pub fn level_units(&self) -> &[u64] {
        &self.level_units
    }

    pub fn noise_units(&self) -> u64 {
        self.noise_units
    }

    /// `signal / rest >= tau` where `rest` already includes noise.
    #[inline]
    pub fn decodable(&self, signal: u64, rest: u64) -> bool {
        self.tau_den * signal as u128 >= self.tau_num * rest as u128
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn case_study_pool() {
        let pool = build_power_pool(&ChannelParams::default(), 3).unwrap();
        assert_eq!(pool.levels(), &[r(1), r(2), r(4)]);
    }

    #[test]
    fn single_level_is_tau_times_noise() {
        let pool = build_power_pool(&ChannelParams::default(), 1).unwrap();
        assert_eq!(pool.levels(), &[r(1)]);
    }

    #[test]
    fn tau_two_pool() {
        let channel = ChannelParams::new(r(2), r(1)).unwrap();
        let pool = build_power_pool(&channel, 3).unwrap();
        assert_eq!(pool.levels(), &[r(2), r(6), r(18)]);
    }

    #[test]
    fn zero_levels_rejected() {
        assert!(build_power_pool(&ChannelParams::default(), 0).is_err());
    }

    #[test]
    fn every_level_sits_exactly_at_threshold() {
        for (tau, n0) in [((1, 1), (1, 1)), ((3, 2), (1, 3)), ((1, 2), (5, 1)), ((7, 1), (2, 7))] {
            let channel = ChannelParams::new(Ratio::new(tau.0, tau.1), Ratio::new(n0.0, n0.1)).unwrap();
            let pool = build_power_pool(&channel, 5).unwrap();
            let mut below = Rational::zero();
            for level in pool.levels() {
                assert_eq!(level / (below + channel.noise_power), channel.tau);
                below += level;
            }
            assert_eq!(pool, build_power_pool(&channel, 5).unwrap());
        }
    }

    #[test]
    fn pool_must_be_strictly_increasing() {
        assert!(PowerPool::from_integers(&[1, 1]).is_err());
        assert!(PowerPool::from_integers(&[2, 1]).is_err());
        assert!(PowerPool::from_integers(&[]).is_err());
        assert!(PowerPool::from_integers(&[0, 1]).is_err());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("4"), Some(r(4)));
        assert_eq!(parse_rational("3/2"), Some(Ratio::new(3, 2)));
        assert_eq!(parse_rational("0.25"), Some(Ratio::new(1, 4)));
        assert_eq!(parse_rational("-1.5"), Some(Ratio::new(-3, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
    }

    #[test]
    fn config_validation() {
        let ok = SystemConfig::new(5, 10, 3, Alpha::Finite(2));
        assert!(ok.validate().is_ok());
        assert!((ok.gamma() - 0.5).abs() < 1e-12);
        let mut bad = ok.clone();
        bad.k_repetitions = 11;
        assert!(bad.validate().is_err());
        bad.k_repetitions = 0;
        assert!(bad.validate().is_err());
        let mut empty = ok.clone();
        empty.n_devices = 0;
        assert!(empty.validate().is_err());
        assert!(empty.validate_allowing_empty().is_ok());
    }

    #[test]
    fn alpha_text_forms() {
        assert_eq!("inf".parse::<Alpha>(), Ok(Alpha::Unbounded));
        assert_eq!("3".parse::<Alpha>(), Ok(Alpha::Finite(3)));
        assert!("0".parse::<Alpha>().is_err());
        assert_eq!(Alpha::Unbounded.to_string(), "inf");
        let json = serde_json::to_string(&vec![Alpha::Finite(2), Alpha::Unbounded]).unwrap();
        assert_eq!(json, r#"[2,"inf"]"#);
        let back: Vec<Alpha> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![Alpha::Finite(2), Alpha::Unbounded]);
    }

    #[test]
    fn unit_scale_handles_fractional_powers() {
        let channel = ChannelParams::new(Ratio::new(3, 2), Ratio::new(1, 3)).unwrap();
        let pool = build_power_pool(&channel, 3).unwrap();
        let scale = UnitScale::new(&channel, &pool).unwrap();
        // level i over (weaker levels + noise) is exactly tau
        let mut below = scale.noise_units();
        for &u in scale.level_units() {
            assert!(scale.decodable(u, below));
            assert!(!scale.decodable(u - 1, below));
            below += u;
        }
    }
}
