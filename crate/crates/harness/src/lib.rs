//! Scenario orchestration on top of `rfmix-core`: declarative scenario
//! specs, seeded dataset generation with checksummed IQ files, throughput
//! benchmarks, figure exports and separation evaluation.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod export;
pub mod iq;
pub mod scenario;
pub mod suite;

pub use error::{HarnessError, Result};
