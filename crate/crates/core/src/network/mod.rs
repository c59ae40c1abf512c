//! Static model of a TSCH network: who talks to whom, when, and on which channel.

mod config;
mod flow;
mod hopping;
mod schedule;
mod topology;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use config::{NetworkConfig, SimParams, REFERENCE_TREE_JSON};
pub use flow::{link_level, Flow};
pub use hopping::{physical_channel, HopSequence};
pub use schedule::{ScheduledCell, SlotframeSchedule};
pub use topology::Topology;
pub use validate::{validate, Diagnostic};

/// Node identifier as used in configuration files and trace headers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u16);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N{}", self.0)
    }
}

/// Directed sender to receiver link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub sender: NodeId,
    pub receiver: NodeId,
}

impl Edge {
    pub fn new(sender: u16, receiver: u16) -> Self {
        Edge {
            sender: NodeId(sender),
            receiver: NodeId(receiver),
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.sender.0, self.receiver.0)
    }
}

impl std::str::FromStr for Edge {
    type Err = crate::Error;

    /// Parses `16-24`, `16->24` or `16:24`.
    fn from_str(s: &str) -> crate::Result<Self> {
        let parts: Vec<&str> = s
            .split(|c| c == '-' || c == '>' || c == ':')
            .filter(|p| !p.is_empty())
            .collect();
        let parse = |p: &str| {
            p.trim()
                .parse::<u16>()
                .map_err(|_| crate::error::domain(format!("invalid link name '{s}'")))
        };
        match parts.as_slice() {
            [a, b] => Ok(Edge::new(parse(a)?, parse(b)?)),
            _ => Err(crate::error::domain(format!("invalid link name '{s}'"))),
        }
    }
}
