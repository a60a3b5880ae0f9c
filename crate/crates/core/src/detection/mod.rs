//! Pulse-level simulation of the detection apparatus and the source
//! estimators.

mod estimators;
mod pairs;
mod sampler;
mod scan;
mod sim;

pub use estimators::{accidental_coincidences, estimate_gamma, estimate_pair_number, Estimate};
pub use pairs::{PairDistribution, PairFamily, SourceStats};
pub use sampler::{sample_pair_positions, JointDensity};
pub use scan::{scan_positions, simulate_scan, ScanResult};
pub use sim::{
    derive_seed, pair_index, simulate_run, DetectorLayout, Engine, Polarization, RunCounts, SpatialSource,
    BLOCK_PULSES, PAIRS,
};
