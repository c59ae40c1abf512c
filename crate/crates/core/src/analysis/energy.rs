use serde::{Deserialize, Serialize};

use super::ConfusionMatrix;
use crate::error::{config, domain};
use crate::Result;

/// Radio energy per slot event, in joules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    /// Transmit a data frame and receive its ACK.
    pub e_tx: f64,
    /// Receive a data frame and transmit its ACK.
    pub e_rx: f64,
    /// Listen through a slot in which nothing arrives.
    pub e_listen: f64,
}

impl EnergyProfile {
    pub fn from_microjoules(tx: f64, rx: f64, listen: f64) -> Self {
        EnergyProfile {
            e_tx: tx * 1e-6,
            e_rx: rx * 1e-6,
            e_listen: listen * 1e-6,
        }
    }

    /// OpenMote B running OpenWSN.
    pub fn openmote_b() -> Self {
        Self::from_microjoules(266.0, 284.0, 138.0)
    }

    pub fn openmote_stm() -> Self {
        Self::from_microjoules(485.7, 651.0, 303.3)
    }

    pub fn check(&self) -> Result<()> {
        for (name, v) in [("e_tx", self.e_tx), ("e_rx", self.e_rx), ("e_listen", self.e_listen)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config(format!("{name} = {v} must be a positive energy")));
            }
        }
        Ok(())
    }
}

impl Default for EnergyProfile {
    fn default() -> Self {
        Self::openmote_b()
    }
}

/// Average power of one link over the evaluated period, in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub p_tx: f64,
    pub p_rx: f64,
    /// Residual idle listening with prediction: only false positives.
    pub p_listen: f64,
    /// Idle listening without prediction: every unused slot.
    pub p_listen_no_ml: f64,
}

impl EnergyReport {
    /// `[p_tx, p_rx, p_listen, p_listen_no_ml]` in microwatts.
    pub fn microwatts(&self) -> [f64; 4] {
        [self.p_tx, self.p_rx, self.p_listen, self.p_listen_no_ml].map(|w| w * 1e6)
    }
}

/// Power figures for a link whose `n_samples` slotframe occurrences, each
/// `t_matrix_secs` apart, produced the confusion matrix `cm`.
///
/// TP + FN counts transmissions (missed ones still happen, just later);
/// FP counts slots still listened in vain; FP + TN is the no-prediction baseline.
pub fn energy(cm: &ConfusionMatrix, profile: &EnergyProfile, n_samples: u64, t_matrix_secs: f64) -> Result<EnergyReport> {
    if n_samples == 0 {
        return Err(domain("energy needs at least one sample"));
    }
    if !(t_matrix_secs > 0.0 && t_matrix_secs.is_finite()) {
        return Err(domain(format!("slotframe duration {t_matrix_secs} s must be positive")));
    }
    let duration = n_samples as f64 * t_matrix_secs;
    let used = (cm.tp + cm.fn_) as f64;
    Ok(EnergyReport {
        p_tx: used * profile.e_tx / duration,
        p_rx: used * profile.e_rx / duration,
        p_listen: cm.fp as f64 * profile.e_listen / duration,
        p_listen_no_ml: (cm.fp + cm.tn) as f64 * profile.e_listen / duration,
    })
}
