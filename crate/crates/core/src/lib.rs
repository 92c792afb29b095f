//! Blind iterative interference cancellation for K-repetition grant-free
//! NOMA, with brute-force oracles, complexity accounting and a Monte Carlo
//! harness.

pub mod cli;
pub mod decoder;
pub mod error;
pub mod fixtures;
pub mod framegen;
pub mod metrics;
pub mod model;
pub mod harness;
pub mod oracle;
pub mod plot;
pub mod report;

pub use decoder::{run_engine, EngineOutcome, Termination};
pub use error::{Error, Result};
pub use framegen::{generate_access_map, superpose, AccessMap, SignalMatrix};
pub use model::{Alpha, ChannelParams, PowerPool, Rational, SystemConfig};
