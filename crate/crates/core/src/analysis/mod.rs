//! Predictability, classification quality and energy figures for a link.

mod auc;
mod autocorr;
mod confusion;
mod energy;

pub use auc::auc;
pub use autocorr::{autocorrelation, autocorrelation_with, AutocorrelationResult, CorrelationMethod};
pub use confusion::{confusion, fmt_ratio, metrics, ConfusionMatrix, Metrics};
pub use energy::{energy, EnergyProfile, EnergyReport};
