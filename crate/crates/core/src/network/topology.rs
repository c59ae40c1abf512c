use std::collections::{BTreeMap, BTreeSet};

use super::{Edge, NodeId};
use crate::error::config;
use crate::Result;

/// Static routing tree. Every edge points from a child to its parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    root: NodeId,
    parent: BTreeMap<NodeId, NodeId>,
    children: BTreeMap<NodeId, Vec<NodeId>>,
}

impl Topology {
    /// Builds the tree from `(child, parent)` pairs, rejecting anything that is
    /// not a single tree rooted at `root`.
    pub fn new(root: NodeId, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        let mut parent = BTreeMap::new();
        let mut children: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (child, par) in edges {
            if child == par {
                return Err(config(format!("self loop on {child}")));
            }
            if child == root {
                return Err(config(format!("root {root} cannot have a parent")));
            }
            if let Some(prev) = parent.insert(child, par) {
                return Err(config(format!(
                    "{child} has two parents ({prev} and {par})"
                )));
            }
            children.entry(par).or_default().push(child);
        }
        for list in children.values_mut() {
            list.sort_unstable();
        }
        let topo = Topology {
            root,
            parent,
            children,
        };
        // Every node must reach the root without revisiting a node.
        for &start in topo.parent.keys() {
            let mut seen = BTreeSet::new();
            let mut cur = start;
            while cur != root {
                if !seen.insert(cur) {
                    return Err(config(format!("cycle through {cur}")));
                }
                cur = match topo.parent.get(&cur) {
                    Some(&p) => p,
                    None => {
                        return Err(config(format!(
                            "{start} does not reach root {root} (stops at {cur})"
                        )))
                    }
                };
            }
        }
        Ok(topo)
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.parent.get(&node).copied()
    }

    pub fn children(&self, node: NodeId) -> &[NodeId] {
        self.children.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn nodes(&self) -> BTreeSet<NodeId> {
        let mut nodes: BTreeSet<NodeId> = self.parent.keys().copied().collect();
        nodes.insert(self.root);
        nodes
    }

    /// Child to parent edges, ordered by child.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.parent.iter().map(|(&c, &p)| Edge {
            sender: c,
            receiver: p,
        })
    }

    pub fn has_edge(&self, edge: Edge) -> bool {
        self.parent(edge.sender) == Some(edge.receiver)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node == self.root || self.parent.contains_key(&node)
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.nodes()
            .into_iter()
            .filter(|n| self.children(*n).is_empty())
            .collect()
    }

    /// The unique upward path from `source` to its ancestor `destination`.
    pub fn route(&self, source: NodeId, destination: NodeId) -> Result<Vec<NodeId>> {
        if !self.contains(source) {
            return Err(config(format!("unknown node {source}")));
        }
        let mut route = vec![source];
        let mut cur = source;
        while cur != destination {
            cur = self.parent(cur).ok_or_else(|| {
                config(format!(
                    "{destination} is not an ancestor of {source}; routes follow child->parent edges"
                ))
            })?;
            route.push(cur);
        }
        Ok(route)
    }

    /// Longest downward distance from `node` to a leaf; leaves have height 0.
    pub fn height(&self, node: NodeId) -> usize {
        self.children(node)
            .iter()
            .map(|&c| 1 + self.height(c))
            .max()
            .unwrap_or(0)
    }

    /// Level of the uplink `child -> parent(child)`: 1 for a leaf uplink.
    pub fn edge_level(&self, edge: Edge) -> Option<usize> {
        self.has_edge(edge).then(|| 1 + self.height(edge.sender))
    }
}
