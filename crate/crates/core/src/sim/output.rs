use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::LinkTrace;
use crate::error::domain;
use crate::network::{Edge, NodeId, SimParams};
use crate::Result;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowStats {
    pub source: NodeId,
    pub destination: NodeId,
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_flight: u64,
    /// Transmission attempts over all hops, retransmissions included.
    pub transmissions: u64,
    /// Sum over delivered packets of (delivery ASN - generation ASN).
    pub latency_slots: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeStats {
    /// Occurrences with x = 1.
    pub transmissions: u64,
    /// Occurrences with x = 0 (receiver listened in vain).
    pub idle: u64,
    pub frame_losses: u64,
    pub ack_losses: u64,
    /// Largest queue length seen on the sender side.
    pub max_queue: usize,
}

/// Direct radio energy of one node over the run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeEnergy {
    pub tx_events: u64,
    pub rx_events: u64,
    pub idle_listen_events: u64,
    pub tx_j: f64,
    pub rx_j: f64,
    pub idle_listen_j: f64,
}

impl NodeEnergy {
    pub fn total_j(&self) -> f64 {
        self.tx_j + self.rx_j + self.idle_listen_j
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub seed: u64,
    pub duration_slots: u64,
    pub t_matrix_us: u64,
    pub traces: BTreeMap<Edge, LinkTrace>,
    /// Indexed like the configuration's flow list.
    pub flows: Vec<FlowStats>,
    pub edges: BTreeMap<Edge, EdgeStats>,
    pub nodes: BTreeMap<NodeId, NodeEnergy>,
}

/// Trace of a scheduled link: one sample per cell occurrence, in slot order.
pub fn trace_of(output: &SimOutput, edge: Edge) -> Result<&LinkTrace> {
    output
        .traces
        .get(&edge)
        .ok_or_else(|| domain(format!("link {edge} has no scheduled cell")))
}

impl SimOutput {
    /// File name used for a link's trace inside a run directory.
    pub fn trace_file_name(edge: Edge) -> String {
        format!("trace_{}_{}.tslt", edge.sender.0, edge.receiver.0)
    }

    /// Writes one trace file per link plus `run.json` into `dir`.
    pub fn write_to_dir(&self, params: &SimParams, dir: impl AsRef<Path>) -> Result<RunManifest> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut traces = Vec::new();
        for (edge, trace) in &self.traces {
            let name = Self::trace_file_name(*edge);
            trace.save(dir.join(&name))?;
            traces.push(TraceEntry {
                edge: *edge,
                file: PathBuf::from(name),
                samples: trace.len() as u64,
                ones: trace.count_ones() as u64,
            });
        }
        let manifest = RunManifest {
            seed: self.seed,
            params: params.clone(),
            duration_slots: self.duration_slots,
            t_matrix_us: self.t_matrix_us,
            flows: self.flows.clone(),
            edges: self
                .edges
                .iter()
                .map(|(e, s)| EdgeEntry {
                    edge: *e,
                    stats: s.clone(),
                })
                .collect(),
            nodes: self
                .nodes
                .iter()
                .map(|(n, en)| NodeEntry {
                    node: *n,
                    energy: en.clone(),
                })
                .collect(),
            traces,
        };
        std::fs::write(dir.join(RunManifest::FILE_NAME), serde_json::to_string_pretty(&manifest)?)?;
        Ok(manifest)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub edge: Edge,
    pub file: PathBuf,
    pub samples: u64,
    pub ones: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEntry {
    pub edge: Edge,
    #[serde(flatten)]
    pub stats: EdgeStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub node: NodeId,
    #[serde(flatten)]
    pub energy: NodeEnergy,
}

/// `run.json`: everything about a simulation run except the traces themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub params: SimParams,
    pub duration_slots: u64,
    pub t_matrix_us: u64,
    pub flows: Vec<FlowStats>,
    pub edges: Vec<EdgeEntry>,
    pub nodes: Vec<NodeEntry>,
    pub traces: Vec<TraceEntry>,
}

impl RunManifest {
    pub const FILE_NAME: &'static str = "run.json";

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
