use std::path::Path;

use serde::{Deserialize, Serialize};
use tsch_core::analysis::{fmt_ratio, ConfusionMatrix, EnergyReport, Metrics};
use tsch_core::network::Edge;

use crate::profile::NamedProfile;

/// Average radio power of one link, in microwatts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerUw {
    pub p_tx: f64,
    pub p_rx: f64,
    pub p_listen: f64,
    pub p_listen_no_ml: f64,
}

impl From<EnergyReport> for PowerUw {
    fn from(r: EnergyReport) -> Self {
        let [p_tx, p_rx, p_listen, p_listen_no_ml] = r.microwatts();
        PowerUw {
            p_tx,
            p_rx,
            p_listen,
            p_listen_no_ml,
        }
    }
}

/// Evaluation of one link. JSON keeps raw values; CSV rounds them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub edge: Edge,
    /// Hop distance from the leaves, when known.
    pub level: Option<usize>,
    pub trace: String,
    /// First sample of the test segment.
    pub test_offset: usize,
    pub test_samples: usize,
    pub windows: usize,
    pub n_p: usize,
    pub threshold: f64,
    pub profile: NamedProfile,
    pub t_matrix_s: f64,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    /// `None` when the test segment holds a single class.
    pub auc: Option<f64>,
    /// Largest off-peak normalized autocorrelation of the test segment.
    pub rho_max: Option<f64>,
    pub rho_max_lag: Option<usize>,
    pub max_lag: usize,
    pub power_uw: PowerUw,
}

pub const CSV_HEADER: &str = "link,level,tp,fn,fp,tn,accuracy,precision,recall,f1,auc,rho_max,p_tx_uw,p_rx_uw,p_listen_uw,p_listen_no_ml_uw";

impl LinkReport {
    pub fn csv_row(&self) -> String {
        let cm = &self.confusion;
        let m = &self.metrics;
        let p = &self.power_uw;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{:.2},{:.2},{:.2},{:.2}",
            self.edge,
            self.level.map(|l| l.to_string()).unwrap_or_default(),
            cm.tp,
            cm.fn_,
            cm.fp,
            cm.tn,
            fmt_ratio(Some(m.accuracy), 3),
            fmt_ratio(m.precision, 3),
            fmt_ratio(m.recall, 3),
            fmt_ratio(m.f1, 3),
            fmt_ratio(self.auc, 3),
            fmt_ratio(self.rho_max, 3),
            p.p_tx,
            p.p_rx,
            p.p_listen,
            p.p_listen_no_ml
        )
    }
}

pub fn csv_table(reports: &[LinkReport]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in reports {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tsch_core::analysis::{energy, metrics, EnergyProfile};

    #[test]
    fn csv_rounds_and_marks_undefined() {
        let cm = ConfusionMatrix {
            tp: 0,
            fn_: 0,
            fp: 0,
            tn: 1000,
        };
        let power = energy(&cm, &EnergyProfile::openmote_b(), 1000, 2.02).unwrap();
        let r = LinkReport {
            edge: Edge::new(16, 24),
            level: Some(1),
            trace: "t.tslt".into(),
            test_offset: 0,
            test_samples: 1890,
            windows: 1000,
            n_p: 890,
            threshold: 0.5,
            profile: NamedProfile::openmote_b(),
            t_matrix_s: 2.02,
            confusion: cm,
            metrics: metrics(&cm).unwrap(),
            auc: None,
            rho_max: Some(0.123456),
            rho_max_lag: Some(3),
            max_lag: 945,
            power_uw: power.into(),
        };
        assert_eq!(
            r.csv_row(),
            "16->24,1,0,0,0,1000,1.000,undefined,undefined,undefined,undefined,0.123,0.00,0.00,0.00,68.32"
        );
        assert_eq!(csv_table(&[r]).lines().next(), Some(CSV_HEADER));
    }
}
