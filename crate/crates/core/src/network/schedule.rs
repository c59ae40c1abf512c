use serde::{Deserialize, Serialize};

use super::{Edge, NodeId};

/// One reserved transmission opportunity in the slotframe matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledCell {
    pub slot_offset: u32,
    pub channel_offset: u32,
    pub sender: NodeId,
    pub receiver: NodeId,
}

impl ScheduledCell {
    pub fn new(slot_offset: u32, channel_offset: u32, sender: u16, receiver: u16) -> Self {
        ScheduledCell {
            slot_offset,
            channel_offset,
            sender: NodeId(sender),
            receiver: NodeId(receiver),
        }
    }

    pub fn edge(&self) -> Edge {
        Edge {
            sender: self.sender,
            receiver: self.receiver,
        }
    }
}

/// The repeating slotframe matrix: `n_slot` columns by `n_channel` rows.
///
/// Construction does not reject bad cells; [`super::validate`] reports them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotframeSchedule {
    n_slot: u32,
    n_channel: u32,
    cells: Vec<ScheduledCell>,
}

impl SlotframeSchedule {
    /// Cells are kept sorted by `(slot_offset, channel_offset)`.
    pub fn new(n_slot: u32, n_channel: u32, mut cells: Vec<ScheduledCell>) -> Self {
        cells.sort_by_key(|c| (c.slot_offset, c.channel_offset, c.sender, c.receiver));
        SlotframeSchedule {
            n_slot,
            n_channel,
            cells,
        }
    }

    pub fn n_slot(&self) -> u32 {
        self.n_slot
    }

    pub fn n_channel(&self) -> u32 {
        self.n_channel
    }

    /// All cells in slot order; this is the order samples are taken within a slotframe.
    pub fn cells(&self) -> &[ScheduledCell] {
        &self.cells
    }

    pub fn cells_of(&self, edge: Edge) -> impl Iterator<Item = &ScheduledCell> + '_ {
        self.cells.iter().filter(move |c| c.edge() == edge)
    }

    /// Distinct scheduled edges in order of their first cell.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out: Vec<Edge> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.edge()) {
                out.push(c.edge());
            }
        }
        out
    }

    /// Slotframe duration in microseconds.
    pub fn t_matrix_us(&self, t_slot_us: u64) -> u64 {
        self.n_slot as u64 * t_slot_us
    }

    pub fn without_edge(&self, edge: Edge) -> Self {
        let cells = self.cells.iter().copied().filter(|c| c.edge() != edge).collect();
        SlotframeSchedule::new(self.n_slot, self.n_channel, cells)
    }

    pub fn with_cell(&self, cell: ScheduledCell) -> Self {
        let mut cells = self.cells.clone();
        cells.push(cell);
        SlotframeSchedule::new(self.n_slot, self.n_channel, cells)
    }
}
