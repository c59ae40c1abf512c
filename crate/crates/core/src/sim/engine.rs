use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use super::output::{EdgeStats, FlowStats, NodeEnergy, SimOutput};
use super::rng::CounterRng;
use crate::dataset::LinkTrace;
use crate::network::{Edge, NetworkConfig, NodeId, SimParams};
use crate::Result;

const DRAW_FRAME: u8 = 0;
const DRAW_ACK: u8 = 1;

/// A packet copy sitting in a transmission queue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub flow_id: u32,
    pub sequence_number: u64,
    pub generation_asn: u64,
    pub tries_on_current_hop: u32,
    /// Index of the hop this copy is waiting to cross.
    hop: u16,
    /// First ASN at which the copy may be transmitted.
    ready_asn: u64,
    /// The receiver already holds this packet (its ACK was lost).
    forwarded: bool,
}

struct EdgeState {
    edge: Edge,
    rng: CounterRng,
    queue: VecDeque<Packet>,
    /// Highest sequence number accepted by the receiver, per flow.
    last_accepted: Vec<Option<u64>>,
    trace: LinkTrace,
    stats: EdgeStats,
}

struct CellRef {
    slot: u64,
    edge: usize,
    sender: usize,
    receiver: usize,
}

struct FlowState {
    /// Edge index of each hop along the route.
    hop_edges: Vec<usize>,
    next_seq: u64,
    stats: FlowStats,
}

/// Runs the simulation for `params.duration_slots` slots.
///
/// Within a slot, packet generation happens first, then scheduled cells are
/// served in `(slot, channel)` order. A packet received in slot `t` can be
/// forwarded from slot `t + 1` on.
pub fn run(config: &NetworkConfig, params: &SimParams) -> Result<SimOutput> {
    params.check()?;
    if params.n_slot != config.schedule.n_slot() {
        return Err(crate::error::config(format!(
            "params.n_slot = {} but the schedule has {} slots",
            params.n_slot,
            config.schedule.n_slot()
        )));
    }
    let diags = config.validate();
    if !diags.is_empty() {
        let lines: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        return Err(crate::error::config(lines.join("; ")));
    }

    let nodes: Vec<NodeId> = config.topology.nodes().into_iter().collect();
    let node_index = |n: NodeId| nodes.binary_search(&n).expect("validated node");
    let flows_cfg = config.flows();
    let t_matrix_us = params.t_matrix_us();

    let edge_list = config.schedule.edges();
    let edge_index: BTreeMap<Edge, usize> =
        edge_list.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let cells_per_frame: BTreeMap<Edge, usize> = edge_list
        .iter()
        .map(|&e| (e, config.schedule.cells_of(e).count()))
        .collect();
    let occurrences = |e: Edge| -> usize {
        // Upper bound used only to size the trace buffers.
        let frames = params.duration_slots.div_ceil(params.n_slot as u64) as usize;
        frames.saturating_mul(cells_per_frame[&e])
    };
    let mut edges: Vec<EdgeState> = edge_list
        .iter()
        .map(|&edge| EdgeState {
            edge,
            rng: CounterRng::new(
                params.seed,
                (edge.sender.0 as u64) << 16 | edge.receiver.0 as u64,
            ),
            queue: VecDeque::new(),
            last_accepted: vec![None; flows_cfg.len()],
            trace: LinkTrace::with_capacity(edge, t_matrix_us, occurrences(edge)),
            stats: EdgeStats::default(),
        })
        .collect();
    let cells: Vec<CellRef> = config
        .schedule
        .cells()
        .iter()
        .map(|c| CellRef {
            slot: c.slot_offset as u64,
            edge: edge_index[&c.edge()],
            sender: node_index(c.sender),
            receiver: node_index(c.receiver),
        })
        .collect();
    let mut flows: Vec<FlowState> = flows_cfg
        .iter()
        .map(|f| FlowState {
            hop_edges: f.hops().map(|h| edge_index[&h]).collect(),
            next_seq: 0,
            stats: FlowStats {
                source: f.source,
                destination: f.destination,
                ..FlowStats::default()
            },
        })
        .collect();
    let mut energy = vec![NodeEnergy::default(); nodes.len()];

    // Next generation time per flow, earliest first; ties by flow index.
    let mut generation: BinaryHeap<Reverse<(u64, usize)>> = flows_cfg
        .iter()
        .enumerate()
        .map(|(i, f)| Reverse((f.phase_slots, i)))
        .collect();
    let duration = params.duration_slots;

    let mut generate_until = |asn: u64, edges: &mut [EdgeState], flows: &mut [FlowState]| {
        while let Some(&Reverse((t, i))) = generation.peek() {
            if t > asn || t >= duration {
                break;
            }
            generation.pop();
            let fs = &mut flows[i];
            let seq = fs.next_seq;
            fs.next_seq += 1;
            fs.stats.generated += 1;
            match fs.hop_edges.first() {
                Some(&e) => edges[e].queue.push_back(Packet {
                    flow_id: i as u32,
                    sequence_number: seq,
                    generation_asn: t,
                    tries_on_current_hop: 0,
                    hop: 0,
                    ready_asn: t,
                    forwarded: false,
                }),
                None => fs.stats.delivered += 1,
            }
            generation.push(Reverse((t + flows_cfg[i].period_slots, i)));
        }
    };

    let n_slot = params.n_slot as u64;
    let mut base = 0u64;
    'frames: while base < duration {
        for cell in &cells {
            let asn = base + cell.slot;
            if asn >= duration {
                break 'frames;
            }
            generate_until(asn, &mut edges, &mut flows);

            let state = &mut edges[cell.edge];
            let occurrence = state.trace.len() as u64;
            let head_ready = state.queue.front().is_some_and(|p| p.ready_asn <= asn);
            if !head_ready {
                state.trace.push(false);
                state.stats.idle += 1;
                energy[cell.receiver].idle_listen_events += 1;
                continue;
            }
            state.trace.push(true);
            state.stats.transmissions += 1;
            energy[cell.sender].tx_events += 1;
            energy[cell.receiver].rx_events += 1;

            let frame_ok = state.rng.uniform(occurrence, DRAW_FRAME) < params.eps_frame;
            let ack_ok = frame_ok && state.rng.uniform(occurrence, DRAW_ACK) < params.eps_ack;
            let head = state.queue.front_mut().expect("head checked above");
            let flow_id = head.flow_id as usize;
            flows[flow_id].stats.transmissions += 1;

            let mut accepted = None;
            if frame_ok {
                let last = &mut state.last_accepted[flow_id];
                if last.is_none_or(|s| head.sequence_number > s) {
                    *last = Some(head.sequence_number);
                    accepted = Some(head.clone());
                }
                head.forwarded = true;
            } else {
                state.stats.frame_losses += 1;
            }

            if ack_ok {
                state.queue.pop_front();
            } else {
                if frame_ok {
                    state.stats.ack_losses += 1;
                }
                head.tries_on_current_hop += 1;
                if head.tries_on_current_hop >= params.n_try {
                    let dropped = state.queue.pop_front().expect("head exists");
                    if !dropped.forwarded {
                        flows[flow_id].stats.dropped += 1;
                    }
                }
            }

            if let Some(mut pkt) = accepted {
                let fs = &mut flows[flow_id];
                let next_hop = pkt.hop as usize + 1;
                match fs.hop_edges.get(next_hop) {
                    Some(&next_edge) => {
                        pkt.hop = next_hop as u16;
                        pkt.tries_on_current_hop = 0;
                        pkt.ready_asn = asn + 1;
                        pkt.forwarded = false;
                        let q = &mut edges[next_edge];
                        q.queue.push_back(pkt);
                        q.stats.max_queue = q.stats.max_queue.max(q.queue.len());
                    }
                    None => {
                        fs.stats.delivered += 1;
                        fs.stats.latency_slots += asn - pkt.generation_asn;
                    }
                }
            }
            let state = &mut edges[cell.edge];
            state.stats.max_queue = state.stats.max_queue.max(state.queue.len());
        }
        base += n_slot;
    }
    // Packets generated after the last served cell.
    if duration > 0 {
        generate_until(duration - 1, &mut edges, &mut flows);
    }

    for e in &edges {
        for p in e.queue.iter().filter(|p| !p.forwarded) {
            flows[p.flow_id as usize].stats.in_flight += 1;
        }
    }

    let profile = &params.energy;
    let nodes_out = nodes
        .iter()
        .zip(energy)
        .map(|(&n, mut en)| {
            en.tx_j = en.tx_events as f64 * profile.e_tx;
            en.rx_j = en.rx_events as f64 * profile.e_rx;
            en.idle_listen_j = en.idle_listen_events as f64 * profile.e_listen;
            (n, en)
        })
        .collect();

    let mut traces = BTreeMap::new();
    let mut edge_stats = BTreeMap::new();
    for e in edges {
        edge_stats.insert(e.edge, e.stats);
        traces.insert(e.edge, e.trace);
    }
    Ok(SimOutput {
        seed: params.seed,
        duration_slots: duration,
        t_matrix_us,
        traces,
        flows: flows.into_iter().map(|f| f.stats).collect(),
        edges: edge_stats,
        nodes: nodes_out,
    })
}
