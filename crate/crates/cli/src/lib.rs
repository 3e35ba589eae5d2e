//! File formats, command implementations and process plumbing for the
//! `mosaic-qaoa` binary. The algorithms live in `mosaic-qaoa-core`.

pub mod cli;
pub mod commands;
pub mod files;
pub mod records;

use std::fmt;
use std::time::Instant;

use mosaic_qaoa_core::clock::Clock;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable overriding the simulator qubit cap.
pub const CAP_ENV: &str = "MOSAIC_QAOA_CAP";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration values.
    Config(String),
    /// The command could not complete.
    Fatal(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Fatal(m) => f.write_str(m),
        }
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Fatal(_) => EXIT_FATAL,
        }
    }
}

pub fn fatal(e: impl fmt::Display) -> Failure {
    Failure::Fatal(e.to_string())
}

/// Number of units of work that failed while the command still completed.
pub type Outcome = Result<usize, Failure>;

/// Wall-clock time since construction.
#[derive(Debug, Clone, Copy)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn seconds(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }
}

/// Short stable hash of a resolved configuration.
pub fn config_digest(config: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(config).expect("configuration serializes");
    hex::encode(&Sha256::digest(&bytes)[..8])
}

/// Deterministic per-item seed from a master seed and an item id.
pub fn derive_seed(master: u64, id: &str) -> u64 {
    // FNV-1a over the id, then a splitmix64 finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = master ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Simulator cap from the environment, if set.
pub fn simulator_cap_override() -> Result<Option<u32>, Failure> {
    match std::env::var(CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u32>()
            .ok()
            .filter(|c| (1..=30).contains(c))
            .map(Some)
            .ok_or_else(|| Failure::Config(format!("{CAP_ENV}={v:?} is not a qubit count in 1..=30"))),
        Err(_) => Ok(None),
    }
}

pub fn unix_time() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
