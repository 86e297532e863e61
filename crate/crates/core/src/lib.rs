//! Simulation core for an autonomous quantum processing unit (aQPU): a ticking
//! clock drives a punch-card instruction register that applies gates to a
//! target system, all under one time-independent Lindbladian.

pub mod clock;
pub mod compile;
mod dynamics;
pub mod engine;
pub mod error;
pub mod export;
pub mod model;
pub mod numerics;
pub mod thermo;

pub use error::{AqpuError, Result};
