//! Configured runs: reference data, weights, staged identification and the
//! reliability study.

pub mod config;
pub mod identify;
pub mod reliability;

pub use config::RunConfig;
pub use identify::*;
pub use reliability::*;
