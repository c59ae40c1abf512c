use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{validate, Diagnostic, Edge, Flow, HopSequence, NodeId, ScheduledCell, SlotframeSchedule, Topology};
use crate::analysis::EnergyProfile;
use crate::error::config;
use crate::sim::rng::mix64;
use crate::Result;

/// Bundled 31-node binary tree: one cell per link, one flow per leaf.
pub const REFERENCE_TREE_JSON: &str = include_str!("../../data/reference_tree.json");

/// 365-day year in 20 ms slots.
const ONE_YEAR_SLOTS: u64 = 365 * 24 * 3600 * 50;

/// Simulation parameters. Defaults are the OpenWSN / OpenMote B values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub n_slot: u32,
    pub t_slot_us: u64,
    pub n_try: u32,
    pub eps_frame: f64,
    pub eps_ack: f64,
    pub duration_slots: u64,
    pub seed: u64,
    pub energy: EnergyProfile,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            n_slot: 101,
            t_slot_us: 20_000,
            n_try: 16,
            eps_frame: 0.874,
            eps_ack: 0.92,
            duration_slots: ONE_YEAR_SLOTS,
            seed: 1,
            energy: EnergyProfile::openmote_b(),
        }
    }
}

impl SimParams {
    pub fn check(&self) -> Result<()> {
        if self.n_slot == 0 {
            return Err(config("n_slot must be at least 1"));
        }
        if self.t_slot_us == 0 {
            return Err(config("t_slot must be positive"));
        }
        if self.n_try == 0 {
            return Err(config("n_try must be at least 1"));
        }
        for (name, p) in [("eps_frame", self.eps_frame), ("eps_ack", self.eps_ack)] {
            if !(p > 0.0 && p <= 1.0) {
                return Err(config(format!("{name} = {p} must lie in (0, 1]")));
            }
        }
        self.energy.check()
    }

    /// Slotframe duration in microseconds.
    pub fn t_matrix_us(&self) -> u64 {
        self.n_slot as u64 * self.t_slot_us
    }

    pub fn t_matrix_secs(&self) -> f64 {
        self.t_matrix_us() as f64 * 1e-6
    }

    /// Number of slots in `days` 24-hour days.
    pub fn slots_for_days(&self, days: f64) -> u64 {
        (days * 86_400e6 / self.t_slot_us as f64).round() as u64
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConfigFile {
    params: ParamsFile,
    topology: TopologyFile,
    schedule: ScheduleFile,
    #[serde(default)]
    flows: Vec<FlowFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    analysis: Option<AnalysisFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ParamsFile {
    n_slot: u32,
    t_slot_ms: f64,
    n_try: u32,
    eps_frame: f64,
    eps_ack: f64,
    duration_slots: u64,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    energy_uj: Option<EnergyFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EnergyFile {
    tx: f64,
    rx: f64,
    listen: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TopologyFile {
    root: u16,
    edges: Vec<[u16; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScheduleFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hop_sequence: Option<HopSequence>,
    cells: Vec<CellFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CellFile {
    slot: u32,
    #[serde(default)]
    channel: u32,
    from: u16,
    to: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum PhaseSpec {
    Fixed(u64),
    /// The string `"random"`: drawn from the run seed.
    Named(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FlowFile {
    source: u16,
    destination: u16,
    period_slots: u64,
    #[serde(default = "zero_phase")]
    phase_slots: PhaseSpec,
}

/// Joules to microjoules, rounded to the picojoule so decimal inputs survive a round trip.
fn to_microjoules(j: f64) -> f64 {
    (j * 1e12).round() / 1e6
}

fn zero_phase() -> PhaseSpec {
    PhaseSpec::Fixed(0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AnalysisFile {
    #[serde(default)]
    links: Vec<[u16; 2]>,
}

/// A parsed network configuration: parameters, tree, schedule and flows.
#[derive(Debug, Clone)]
pub struct NetworkConfig {
    pub params: SimParams,
    pub hop: HopSequence,
    pub topology: Topology,
    pub schedule: SlotframeSchedule,
    flows: Vec<Flow>,
    flow_specs: Vec<FlowFile>,
    /// Links named by the configuration for per-level analysis.
    pub analysis_links: Vec<Edge>,
}

impl NetworkConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ConfigFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn reference_tree() -> Self {
        Self::from_json_str(REFERENCE_TREE_JSON).expect("bundled configuration parses")
    }

    fn from_file(file: ConfigFile) -> Result<Self> {
        let p = &file.params;
        if !(p.t_slot_ms > 0.0) {
            return Err(config("t_slot_ms must be positive"));
        }
        let energy = match &p.energy_uj {
            Some(e) => EnergyProfile::from_microjoules(e.tx, e.rx, e.listen),
            None => EnergyProfile::openmote_b(),
        };
        let params = SimParams {
            n_slot: p.n_slot,
            t_slot_us: (p.t_slot_ms * 1000.0).round() as u64,
            n_try: p.n_try,
            eps_frame: p.eps_frame,
            eps_ack: p.eps_ack,
            duration_slots: p.duration_slots,
            seed: p.seed,
            energy,
        };
        params.check()?;

        let hop = file.schedule.hop_sequence.clone().unwrap_or_default();
        let topology = Topology::new(
            NodeId(file.topology.root),
            file.topology
                .edges
                .iter()
                .map(|&[c, p]| (NodeId(c), NodeId(p))),
        )?;
        let cells = file
            .schedule
            .cells
            .iter()
            .map(|c| ScheduledCell::new(c.slot, c.channel, c.from, c.to))
            .collect();
        let schedule = SlotframeSchedule::new(params.n_slot, hop.len() as u32, cells);
        let analysis_links = file
            .analysis
            .as_ref()
            .map(|a| a.links.iter().map(|&[s, r]| Edge::new(s, r)).collect())
            .unwrap_or_default();

        let mut cfg = NetworkConfig {
            params,
            hop,
            topology,
            schedule,
            flows: Vec::new(),
            flow_specs: file.flows,
            analysis_links,
        };
        cfg.resolve_flows()?;
        Ok(cfg)
    }

    fn resolve_flows(&mut self) -> Result<()> {
        let seed = self.params.seed;
        self.flows = self
            .flow_specs
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let route = self
                    .topology
                    .route(NodeId(f.source), NodeId(f.destination))
                    .map_err(|e| config(format!("flow #{i}: {e}")))?;
                if f.period_slots == 0 {
                    return Err(config(format!("flow #{i}: period must be at least one slot")));
                }
                let phase = match &f.phase_slots {
                    PhaseSpec::Fixed(v) => *v,
                    PhaseSpec::Named(s) if s == "random" => {
                        mix64(seed ^ mix64(0x5048_4153_4500_0000 | i as u64)) % f.period_slots
                    }
                    PhaseSpec::Named(s) => {
                        return Err(config(format!("flow #{i}: unknown phase '{s}'")))
                    }
                };
                Flow::new(f.period_slots, phase, route).map_err(|e| config(format!("flow #{i}: {e}")))
            })
            .collect::<Result<_>>()?;
        Ok(())
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    /// Replaces the flow set (routes are taken as given).
    pub fn set_flows(&mut self, flows: Vec<Flow>) {
        self.flow_specs = flows
            .iter()
            .map(|f| FlowFile {
                source: f.source.0,
                destination: f.destination.0,
                period_slots: f.period_slots,
                phase_slots: PhaseSpec::Fixed(f.phase_slots),
            })
            .collect();
        self.flows = flows;
    }

    /// Changes the seed; seeded random phases are re-drawn.
    pub fn set_seed(&mut self, seed: u64) -> Result<()> {
        self.params.seed = seed;
        self.resolve_flows()
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        validate(&self.schedule, &self.topology, &self.flows)
    }

    /// Canonical JSON rendering of the configuration (same schema as the input file).
    pub fn to_json_string(&self) -> Result<String> {
        let p = &self.params;
        let file = ConfigFile {
            params: ParamsFile {
                n_slot: p.n_slot,
                t_slot_ms: p.t_slot_us as f64 / 1000.0,
                n_try: p.n_try,
                eps_frame: p.eps_frame,
                eps_ack: p.eps_ack,
                duration_slots: p.duration_slots,
                seed: p.seed,
                energy_uj: Some(EnergyFile {
                    tx: to_microjoules(p.energy.e_tx),
                    rx: to_microjoules(p.energy.e_rx),
                    listen: to_microjoules(p.energy.e_listen),
                }),
            },
            topology: TopologyFile {
                root: self.topology.root().0,
                edges: self
                    .topology
                    .edges()
                    .map(|e| [e.sender.0, e.receiver.0])
                    .collect(),
            },
            schedule: ScheduleFile {
                hop_sequence: Some(self.hop.clone()),
                cells: self
                    .schedule
                    .cells()
                    .iter()
                    .map(|c| CellFile {
                        slot: c.slot_offset,
                        channel: c.channel_offset,
                        from: c.sender.0,
                        to: c.receiver.0,
                    })
                    .collect(),
            },
            flows: self.flow_specs.clone(),
            analysis: (!self.analysis_links.is_empty()).then(|| AnalysisFile {
                links: self
                    .analysis_links
                    .iter()
                    .map(|e| [e.sender.0, e.receiver.0])
                    .collect(),
            }),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}
