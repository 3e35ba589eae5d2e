//! Adaptive QAOA circuit synthesis for Max-E3-SAT.
//!
//! This crate holds the pure algorithmic core: 3-CNF instances and their
//! generators, an exact statevector simulator for the diagonal clause
//! Hamiltonian, the mixer-operator pool, per-layer operator tiling (single
//! argmax, greedy packing and exact maximum-weight independent set), the
//! BFGS-driven adaptive loop, and the metrics/tokenization used to turn
//! optimized circuits into supervision data.
//!
//! The crate is `no_std` and only needs `alloc`. Anything touching the
//! filesystem, wall-clock time or process arguments lives in the companion
//! `mosaic-qaoa` crate.
//!
//! Bit convention used throughout: basis index bit `k` holds variable
//! `x_{k+1}`, and a set bit means the variable is true.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bfgs;
pub mod clock;
pub mod dataset;
pub mod engine;
mod error;
mod math;
pub mod metrics;
pub mod pool;
pub mod sat;
pub mod sim;
pub mod tiling;
pub mod tokens;

pub use error::{Error, Result};

pub use engine::{AnsatzCircuit, AnsatzLayer, EngineConfig, RunResult, StopReason, Strategy};
pub use pool::{Axis, PoolOperator, ScoredPool};
pub use sat::{Clause, CnfFormula, Literal, MaxSatOptimum, Provenance};
pub use sim::{CostDiagonal, ShotCounts, StateVector};
pub use tiling::{IncompatibilityGraph, TileSelection};
pub use tokens::{Token, TokenSequence};
