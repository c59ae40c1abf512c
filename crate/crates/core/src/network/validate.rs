use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::{Edge, Flow, ScheduledCell, SlotframeSchedule, Topology};

/// One self-consistency violation, with enough location detail to fix it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    UnscheduledRoutedEdge { edge: Edge },
    CellCollision { slot: u32, channel: u32, count: usize },
    CellOutOfRange { cell: ScheduledCell },
    CellNotInTopology { cell: ScheduledCell },
    InvalidRoute { flow: usize, reason: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UnscheduledRoutedEdge { edge } => {
                write!(f, "unscheduled routed edge {edge}: a flow uses it but no cell is reserved")
            }
            Diagnostic::CellCollision {
                slot,
                channel,
                count,
            } => write!(f, "cell collision at slot {slot}, channel {channel}: {count} cells"),
            Diagnostic::CellOutOfRange { cell } => write!(
                f,
                "cell {} at slot {}, channel {} lies outside the slotframe",
                cell.edge(),
                cell.slot_offset,
                cell.channel_offset
            ),
            Diagnostic::CellNotInTopology { cell } => write!(
                f,
                "cell at slot {}, channel {} uses {} which is not a topology edge",
                cell.slot_offset,
                cell.channel_offset,
                cell.edge()
            ),
            Diagnostic::InvalidRoute { flow, reason } => write!(f, "flow #{flow}: {reason}"),
        }
    }
}

/// Checks that a schedule, topology and flow set fit together. An empty list
/// means the configuration is usable by the simulator.
pub fn validate(schedule: &SlotframeSchedule, topology: &Topology, flows: &[Flow]) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    let mut occupancy: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for cell in schedule.cells() {
        if cell.slot_offset >= schedule.n_slot() || cell.channel_offset >= schedule.n_channel() {
            diags.push(Diagnostic::CellOutOfRange { cell: *cell });
        }
        if !topology.has_edge(cell.edge()) {
            diags.push(Diagnostic::CellNotInTopology { cell: *cell });
        }
        *occupancy
            .entry((cell.slot_offset, cell.channel_offset))
            .or_default() += 1;
    }
    for (&(slot, channel), &count) in &occupancy {
        if count > 1 {
            diags.push(Diagnostic::CellCollision {
                slot,
                channel,
                count,
            });
        }
    }

    let scheduled: BTreeSet<Edge> = schedule.cells().iter().map(ScheduledCell::edge).collect();
    let mut missing = BTreeSet::new();
    for (i, flow) in flows.iter().enumerate() {
        if flow.route.first() != Some(&flow.source) || flow.route.last() != Some(&flow.destination) {
            diags.push(Diagnostic::InvalidRoute {
                flow: i,
                reason: "route does not run from source to destination".into(),
            });
        }
        for hop in flow.hops() {
            if !topology.has_edge(hop) {
                diags.push(Diagnostic::InvalidRoute {
                    flow: i,
                    reason: format!("{hop} is not a topology edge"),
                });
            } else if !scheduled.contains(&hop) {
                missing.insert(hop);
            }
        }
    }
    diags.extend(
        missing
            .into_iter()
            .map(|edge| Diagnostic::UnscheduledRoutedEdge { edge }),
    );
    diags
}
