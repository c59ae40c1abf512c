use serde::{Deserialize, Serialize};

use super::{Edge, NodeId};
use crate::error::{config, domain};
use crate::Result;

/// Periodic traffic source. Packets are generated at every slot `t` with
/// `(t - phase_slots) mod period_slots == 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flow {
    pub source: NodeId,
    pub destination: NodeId,
    pub period_slots: u64,
    pub phase_slots: u64,
    pub route: Vec<NodeId>,
}

impl Flow {
    pub fn new(period_slots: u64, phase_slots: u64, route: Vec<NodeId>) -> Result<Self> {
        if period_slots == 0 {
            return Err(config("flow period must be at least one slot"));
        }
        if phase_slots >= period_slots {
            return Err(config(format!(
                "flow phase {phase_slots} must be below its period {period_slots}"
            )));
        }
        let (Some(&source), Some(&destination)) = (route.first(), route.last()) else {
            return Err(config("flow route is empty"));
        };
        Ok(Flow {
            source,
            destination,
            period_slots,
            phase_slots,
            route,
        })
    }

    /// Edges along the route, first hop first.
    pub fn hops(&self) -> impl Iterator<Item = Edge> + '_ {
        self.route.windows(2).map(|w| Edge {
            sender: w[0],
            receiver: w[1],
        })
    }

    /// Next hop out of `node`, if `node` is on the route and not the destination.
    pub fn next_hop(&self, node: NodeId) -> Option<Edge> {
        self.hops().find(|e| e.sender == node)
    }
}

/// Hop index of `edge` along the flow's route: 1 for the first hop out of the source.
pub fn link_level(edge: Edge, flow: &Flow) -> Result<usize> {
    flow.hops()
        .position(|e| e == edge)
        .map(|i| i + 1)
        .ok_or_else(|| domain(format!("link {edge} is not on the route of the flow from {}", flow.source)))
}
