//! Seeded slot-by-slot TSCH simulation producing per-link usage traces.

mod engine;
mod output;
pub mod rng;

pub use engine::{run, Packet};
pub use output::{trace_of, EdgeStats, FlowStats, NodeEnergy, RunManifest, SimOutput};
