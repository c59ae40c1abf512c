//! Slot-usage prediction for TSCH (time slotted channel hopping) sensor networks.
//!
//! The crate is organized as a pipeline:
//!
//! - [`network`]: the static network model. Hop sequence, slotframe schedule,
//!   routing tree, periodic flows and configuration validation.
//! - [`sim`]: a seeded slot-by-slot simulator producing one binary usage
//!   trace per scheduled link, plus packet and energy tallies.
//! - [`dataset`]: bit-packed traces, contiguous train/test splits and
//!   most-recent-first sliding windows.
//! - [`predictor`]: a small multilayer perceptron trained with Adam on MSE.
//! - [`analysis`]: autocorrelation, confusion matrices, AUC and the
//!   idle-listening energy model.

pub mod analysis;
pub mod dataset;
pub mod error;
pub mod network;
pub mod predictor;
pub mod sim;

pub use error::{Error, Result};
