//! Round-synchronous message-passing engine with per-channel bandwidth
//! accounting.
//!
//! The topology of the network is the input graph: in every round a node
//! may push at most `B` bits to each neighbor, where `B` is a small
//! multiple of the id width. Everything staged in round `r` is delivered at
//! the start of round `r + 1`. Execution is a pure function of
//! `(graph, program, seed)`: every node draws randomness from its own
//! stream derived from the run seed and its id, and nodes are stepped in id
//! order (programs cannot observe each other within a round, so this
//! matches any parallel schedule).
//!
//! Sending has two forms. [`NodeContext::stage_send`] places raw bits on a
//! channel for the next round and hard-faults past the capacity.
//! [`NodeContext::stream_frame`] hands the engine a whole multi-round
//! payload; because channels are FIFO and drain at exactly `B` bits per
//! round, the arrival round of its last bit is computed in closed form and
//! the payload is delivered in one piece at that round. The two forms are
//! equivalent to pumping chunks by hand but cost one event per message
//! rather than one per round, and a channel must stick to one form for the
//! whole run. A run keeps counting rounds until every in-flight payload
//! has drained, so round counts match the chunk-by-chunk schedule.

mod framing;

pub use framing::{
    frame_bits_for_set, send_set_rounds, set_payload_bits, Frame, FrameParser, NodeChannels,
    TAG_EDGE_SET, TAG_HASH_FN, TAG_NX_SET, TAG_OVERFLOW, TAG_S_SET, TAG_T_SET, TAG_U_FLAG,
    TAG_X_FLAG,
};

use crate::bits::{BitStr, Bitset};
use crate::graph::{Graph, Triangle, TriangleSet};
use crate::hash::ceil_log2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("network configuration error: {0}")]
    Config(String),
    #[error("node {node} staged a message to {target}, which is not a neighbor")]
    NotANeighbor { node: u32, target: u32 },
    #[error("bandwidth fault at round {round} on edge {from}->{to}: {attempted} bits exceeds capacity {capacity}")]
    Bandwidth { round: u64, from: u32, to: u32, attempted: u64, capacity: u64 },
    #[error("node {node} output a triple {triple:?} that is not a triangle")]
    SpuriousTriangle { node: u32, triple: [u32; 3] },
    #[error("node {node} could not parse the stream from {from}: {detail}")]
    Protocol { node: u32, from: u32, detail: String },
    #[error("hash function not encodable: {0}")]
    HashEncoding(String),
}

/// The simulated network: an input graph plus the per-edge per-direction
/// bit budget for one round.
#[derive(Clone, Debug)]
pub struct Network {
    graph: Graph,
    beta: u32,
    id_bits: u32,
    bits_per_round: u64,
}

/// Builds a network whose per-round, per-direction channel capacity is
/// `beta` vertex ids: `B = beta * ceil(log2 n)`.
pub fn build_network(graph: Graph, beta: u32) -> Result<Network, SimError> {
    if beta < 2 {
        return Err(SimError::Config(format!(
            "beta = {beta} cannot carry an id plus framing per id-sized slot; need beta >= 2"
        )));
    }
    let id_bits = ceil_log2(graph.vertex_count() as u64).max(1);
    Ok(Network { graph, beta, id_bits, bits_per_round: beta as u64 * id_bits as u64 })
}

impl Network {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn beta(&self) -> u32 {
        self.beta
    }

    /// Bits a node may push over one directed edge in one round.
    pub fn bits_per_round(&self) -> u64 {
        self.bits_per_round
    }

    pub fn id_bits(&self) -> u32 {
        self.id_bits
    }

    /// Number of directed channels (twice the edge count).
    pub fn directed_channels(&self) -> usize {
        2 * self.graph.edge_count()
    }
}

/// How a directed channel has been used so far. Raw staging and framed
/// streaming account for capacity differently, so they cannot be mixed on
/// one channel.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
enum ChannelMode {
    #[default]
    Unset,
    Raw,
    Framed,
}

/// Drain schedule of one directed channel's framed traffic.
#[derive(Clone, Copy, Debug, Default)]
struct ChannelStream {
    mode: ChannelMode,
    /// Last round in which queued bits are pushed.
    drained_until: u64,
    /// Bits pushed in that final round (at most the capacity).
    tail_bits: u64,
}

/// What a node program sees and does in one round. All information flows
/// through this handle, which only exposes the node's own local state: its
/// id, incident edges, inbox and private randomness.
pub struct NodeContext<'a> {
    id: u32,
    n: usize,
    round: u64,
    id_bits: u32,
    bits_per_round: u64,
    neighbors: &'a [u32],
    adjacency: &'a Bitset,
    graph: &'a Graph,
    rng: &'a mut ChaCha8Rng,
    inbox: Vec<(u32, BitStr)>,
    collect_output: bool,
    streams: &'a mut [ChannelStream],
    // Effects collected by the engine after the step.
    staged: Vec<(u32, BitStr)>,
    staged_bits: Vec<u64>,
    scheduled: Vec<(u64, u32, BitStr)>,
    max_edge_bits: u64,
    emitted: Vec<Triangle>,
    halted: bool,
}

impl NodeContext<'_> {
    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn network_size(&self) -> usize {
        self.n
    }

    /// Current round; 0 while `init` runs, then 1, 2, ...
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn id_bits(&self) -> u32 {
        self.id_bits
    }

    pub fn bits_per_round(&self) -> u64 {
        self.bits_per_round
    }

    pub fn neighbors(&self) -> &[u32] {
        self.neighbors
    }

    pub fn degree(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_neighbor(&self, v: u32) -> bool {
        self.adjacency.contains(v)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        self.rng
    }

    /// Whether local outputs are being materialized this run.
    pub fn collecting(&self) -> bool {
        self.collect_output
    }

    /// Messages delivered this round, in sender order. May be called once
    /// per step; subsequent calls return nothing.
    pub fn take_inbox(&mut self) -> Vec<(u32, BitStr)> {
        std::mem::take(&mut self.inbox)
    }

    /// Bits still available on the channel to `to` this round.
    pub fn remaining_capacity(&self, to: u32) -> u64 {
        match self.neighbors.binary_search(&to) {
            Ok(idx) => self.bits_per_round - self.staged_bits[idx],
            Err(_) => 0,
        }
    }

    /// Stages `payload` for delivery to `to` at the start of the next
    /// round. Fails when `to` is not a neighbor or the cumulative bits
    /// staged on that channel this round would exceed the capacity.
    pub fn stage_send(&mut self, to: u32, payload: &BitStr) -> Result<(), SimError> {
        let idx = self
            .neighbors
            .binary_search(&to)
            .map_err(|_| SimError::NotANeighbor { node: self.id, target: to })?;
        let attempted = self.staged_bits[idx] + payload.len() as u64;
        if attempted > self.bits_per_round {
            return Err(SimError::Bandwidth {
                round: self.round,
                from: self.id,
                to,
                attempted,
                capacity: self.bits_per_round,
            });
        }
        self.staged_bits[idx] = attempted;
        if !payload.is_empty() {
            self.staged.push((to, payload.clone()));
        }
        Ok(())
    }

    /// Adds a triple to this node's local output. The engine rejects any
    /// triple that is not a triangle of the input graph.
    pub fn emit_triangle(&mut self, a: u32, b: u32, c: u32) -> Result<(), SimError> {
        if !self.collect_output {
            return Ok(());
        }
        let distinct = a != b && b != c && a != c;
        if !distinct || !(self.graph.has_edge(a, b) && self.graph.has_edge(a, c) && self.graph.has_edge(b, c)) {
            return Err(SimError::SpuriousTriangle { node: self.id, triple: [a, b, c] });
        }
        self.emitted.push(Triangle::new(a, b, c));
        Ok(())
    }

    /// Marks this node as finished; it will not be stepped again.
    pub fn halt(&mut self) {
        self.halted = true;
    }
}

/// A per-node state machine driven by the engine: `init` runs before the
/// first round, `step` once per round with the round's deliveries.
pub trait NodeProgram {
    fn init(&mut self, ctx: &mut NodeContext) -> Result<(), SimError>;
    fn step(&mut self, ctx: &mut NodeContext) -> Result<(), SimError>;
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub max_rounds: u64,
    pub seed: u64,
    /// When false, programs skip materializing their local output sets;
    /// communication and round counts are unaffected.
    pub collect_output: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { max_rounds: 1 << 20, seed: 0, collect_output: true }
    }
}

/// Outcome of one simulated execution.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    /// Synchronous rounds executed before every node halted (or the cap).
    pub rounds: u64,
    /// False when `max_rounds` elapsed with nodes still running.
    pub halted: bool,
    /// Bits delivered to each node over the whole run.
    pub per_node_rx_bits: Vec<u64>,
    /// Largest number of bits carried by any directed edge in any round.
    pub max_edge_round_bits: u64,
    /// Union of all node outputs.
    pub output: TriangleSet,
    /// Distinct triangles output per node.
    pub per_node_output_counts: Vec<u64>,
}

impl RunReport {
    /// Node with the largest local output (ties broken by id).
    pub fn heaviest_output_node(&self) -> Option<(u32, u64)> {
        self.per_node_output_counts
            .iter()
            .enumerate()
            .max_by_key(|&(i, c)| (c, std::cmp::Reverse(i)))
            .map(|(i, &c)| (i as u32, c))
    }
}

/// Mixes a salt into a base seed; used to derive independent per-node and
/// per-pass randomness streams.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    splitmix64(base ^ splitmix64(salt.wrapping_add(0x9e3779b97f4a7c15)))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Runs `factory(id)`-built programs on the network until every node halts
/// or `max_rounds` elapses.
pub fn run<F>(net: &Network, mut factory: F, opts: &RunOptions) -> Result<RunReport, SimError>
where
    F: FnMut(u32) -> Box<dyn NodeProgram>,
{
    let n = net.graph.vertex_count();
    let mut programs: Vec<Box<dyn NodeProgram>> = (0..n as u32).map(&mut factory).collect();
    let mut rngs: Vec<ChaCha8Rng> = (0..n as u64)
        .map(|id| ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, id)))
        .collect();

    let mut engine = Engine {
        net,
        collect_output: opts.collect_output,
        halted: vec![false; n],
        active: n,
        inboxes: vec![Vec::new(); n],
        next_inboxes: vec![Vec::new(); n],
        per_node_rx_bits: vec![0; n],
        max_edge_round_bits: 0,
        per_node_emits: vec![Vec::new(); n],
        staged_scratch: Vec::new(),
    };

    // Round 0: initialization; staged messages arrive in round 1.
    for id in 0..n {
        engine.step_node(id, 0, &mut programs[id], &mut rngs[id])?;
    }

    let mut rounds = 0;
    while engine.active > 0 && rounds < opts.max_rounds {
        rounds += 1;
        std::mem::swap(&mut engine.inboxes, &mut engine.next_inboxes);
        for id in 0..n {
            let delivered: u64 = engine.inboxes[id].iter().map(|(_, b)| b.len() as u64).sum();
            engine.per_node_rx_bits[id] += delivered;
            if engine.halted[id] {
                // Late deliveries to a finished node are counted and dropped.
                engine.inboxes[id].clear();
            }
        }
        for id in 0..n {
            if engine.halted[id] {
                continue;
            }
            engine.step_node(id, rounds, &mut programs[id], &mut rngs[id])?;
        }
    }

    debug_assert!(engine.max_edge_round_bits <= net.bits_per_round);

    // Deduplicate local outputs and merge the union.
    let mut per_node_output_counts = Vec::with_capacity(n);
    let mut union: HashSet<Triangle> = HashSet::new();
    for emits in &mut engine.per_node_emits {
        emits.sort_unstable();
        emits.dedup();
        per_node_output_counts.push(emits.len() as u64);
        union.extend(emits.iter().copied());
    }

    Ok(RunReport {
        rounds,
        halted: engine.active == 0,
        per_node_rx_bits: engine.per_node_rx_bits,
        max_edge_round_bits: engine.max_edge_round_bits,
        output: union.into_iter().collect(),
        per_node_output_counts,
    })
}

struct Engine<'n> {
    net: &'n Network,
    collect_output: bool,
    halted: Vec<bool>,
    active: usize,
    inboxes: Vec<Vec<(u32, BitStr)>>,
    next_inboxes: Vec<Vec<(u32, BitStr)>>,
    per_node_rx_bits: Vec<u64>,
    max_edge_round_bits: u64,
    per_node_emits: Vec<Vec<Triangle>>,
    staged_scratch: Vec<u64>,
}

impl Engine<'_> {
    fn step_node(
        &mut self,
        id: usize,
        round: u64,
        program: &mut Box<dyn NodeProgram>,
        rng: &mut ChaCha8Rng,
    ) -> Result<(), SimError> {
        let neighbors = self.net.graph.neighbors(id as u32);
        self.staged_scratch.clear();
        self.staged_scratch.resize(neighbors.len(), 0);
        let mut ctx = NodeContext {
            id: id as u32,
            n: self.net.graph.vertex_count(),
            round,
            id_bits: self.net.id_bits,
            bits_per_round: self.net.bits_per_round,
            neighbors,
            adjacency: self.net.graph.neighbor_bits(id as u32),
            graph: &self.net.graph,
            rng,
            inbox: std::mem::take(&mut self.inboxes[id]),
            collect_output: self.collect_output,
            staged: Vec::new(),
            staged_bits: std::mem::take(&mut self.staged_scratch),
            emitted: std::mem::take(&mut self.per_node_emits[id]),
            halted: false,
        };
        let result = if round == 0 { program.init(&mut ctx) } else { program.step(&mut ctx) };
        let NodeContext { staged, staged_bits, emitted, halted: node_halted, .. } = ctx;
        self.staged_scratch = staged_bits;
        self.per_node_emits[id] = emitted;
        result?;
        for &bits in &self.staged_scratch {
            self.max_edge_round_bits = self.max_edge_round_bits.max(bits);
        }
        for (to, payload) in staged {
            self.next_inboxes[to as usize].push((id as u32, payload));
        }
        if node_halted && !self.halted[id] {
            self.halted[id] = true;
            self.active -= 1;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen_gnp;

    fn k3() -> Network {
        let g = Graph::from_edges(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        build_network(g, 2).unwrap()
    }

    struct HaltNow;
    impl NodeProgram for HaltNow {
        fn init(&mut self, ctx: &mut NodeContext) -> Result<(), SimError> {
            ctx.halt();
            Ok(())
        }
        fn step(&mut self, _ctx: &mut NodeContext) -> Result<(), SimError> {
            Ok(())
        }
    }

    /// Sends the node's own id to every neighbor once, records what arrives.
    struct FloodOnce {
        received: Vec<u32>,
    }
    impl NodeProgram for FloodOnce {
        fn init(&mut self, ctx: &mut NodeContext) -> Result<(), SimError> {
            let mut payload = BitStr::new();
            payload.push_bits(ctx.id() as u64, ctx.id_bits() as usize);
            for &nb in &ctx.neighbors().to_vec() {
                ctx.stage_send(nb, &payload)?;
            }
            Ok(())
        }
        fn step(&mut self, ctx: &mut NodeContext) -> Result<(), SimError> {
            for (_, bits) in ctx.take_inbox() {
                self.received.push(bits.get_bits(0, ctx.id_bits() as usize) as u32);
            }
            ctx.halt();
            Ok(())
        }
    }

    #[test]
    fn bandwidth_formula_examples() {
        let net = build_network(gen_gnp(16, 0.5, 0), 2).unwrap();
        assert_eq!(net.bits_per_round(), 8);
        let net = build_network(gen_gnp(1000, 0.2, 0), 2).unwrap();
        assert_eq!(net.bits_per_round(), 20);
        assert!(build_network(gen_gnp(4, 0.5, 0), 1).is_err());
    }

    #[test]
    fn path_graph_channel_count() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let net = build_network(g, 2).unwrap();
        assert_eq!(net.graph().edge_count(), 2);
        assert_eq!(net.directed_channels(), 4);
    }

    #[test]
    fn immediate_halt_takes_zero_rounds() {
        let report = run(&k3(), |_| Box::new(HaltNow), &RunOptions::default()).unwrap();
        assert_eq!(report.rounds, 0);
        assert!(report.halted);
        assert!(report.output.is_empty());
    }

    #[test]
    fn flood_delivers_every_id_in_one_round() {
        let report = run(
            &k3(),
            |_| Box::new(FloodOnce { received: Vec::new() }),
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(report.rounds, 1);
        assert!(report.halted);
        // Each node received two ids of two bits each.
        assert_eq!(report.per_node_rx_bits, vec![4, 4, 4]);
    }

    #[test]
    fn runs_are_bit_identical() {
        let g = gen_gnp(12, 0.5, 3);
        let net = build_network(g, 2).unwrap();
        let opts = RunOptions { seed: 42, ..Default::default() };
        let factory = || {
            |_: u32| -> Box<dyn NodeProgram> { Box::new(FloodOnce { received: Vec::new() }) }
        };
        let a = run(&net, factory(), &opts).unwrap();
        let b = run(&net, factory(), &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn staging_honors_capacity_boundary() {
        struct FillExactly(u64);
        impl NodeProgram for FillExactly {
            fn init(&mut self, ctx: &mut NodeContext) -> Result<(), SimError> {
                if ctx.id() == 0 {
                    let mut payload = BitStr::new();
                    for _ in 0..self.0 {
                        payload.push_bit(true);
                    }
                    ctx.stage_send(1, &payload)?;
                }
                ctx.halt();
                Ok(())
            }
            fn step(&mut self, _: &mut NodeContext) -> Result<(), SimError> {
                Ok(())
            }
        }
        let b = k3().bits_per_round();
        assert!(run(&k3(), |_| Box::new(FillExactly(b)), &RunOptions::default()).is_ok());
        match run(&k3(), |_| Box::new(FillExactly(b + 1)), &RunOptions::default()) {
            Err(SimError::Bandwidth { round: 0, from: 0, to: 1, attempted, capacity }) => {
                assert_eq!(attempted, b + 1);
                assert_eq!(capacity, b);
            }
            other => panic!("expected bandwidth fault, got {other:?}"),
        }
    }

    #[test]
    fn staging_to_non_neighbor_faults() {
        struct BadTarget;
        impl NodeProgram for BadTarget {
            fn init(&mut self, ctx: &mut NodeContext) -> Result<(), SimError> {
                if ctx.id() == 0 {
                    let mut payload = BitStr::new();
                    payload.push_bit(true);
                    ctx.stage_send(2, &payload)?;
                }
                ctx.halt();
                Ok(())
            }
            fn step(&mut self, _: &mut NodeContext) -> Result<(), SimError> {
                Ok(())
            }
        }
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let net = build_network(g, 2).unwrap();
        assert!(matches!(
            run(&net, |_| Box::new(BadTarget), &RunOptions::default()),
            Err(SimError::NotANeighbor { node: 0, target: 2 })
        ));
    }

    #[test]
    fn empty_payload_is_a_free_no_op() {
        struct EmptySend;
        impl NodeProgram for EmptySend {
            fn init(&mut self, ctx: &mut NodeContext) -> Result<(), SimError> {
                let first = ctx.neighbors().first().copied();
                if let Some(nb) = first {
                    ctx.stage_send(nb, &BitStr::new())?;
                }
                ctx.halt();
                Ok(())
            }
            fn step(&mut self, _: &mut NodeContext) -> Result<(), SimError> {
                Ok(())
            }
        }
        let report = run(&k3(), |_| Box::new(EmptySend), &RunOptions::default()).unwrap();
        assert_eq!(report.max_edge_round_bits, 0);
        assert_eq!(report.rounds, 0);
    }

    #[test]
    fn max_rounds_cuts_off_nonterminating_programs() {
        struct Forever;
        impl NodeProgram for Forever {
            fn init(&mut self, _: &mut NodeContext) -> Result<(), SimError> {
                Ok(())
            }
            fn step(&mut self, _: &mut NodeContext) -> Result<(), SimError> {
                Ok(())
            }
        }
        let opts = RunOptions { max_rounds: 17, ..Default::default() };
        let report = run(&k3(), |_| Box::new(Forever), &opts).unwrap();
        assert_eq!(report.rounds, 17);
        assert!(!report.halted);
    }

    #[test]
    fn rx_bits_bounded_by_degree_bandwidth_product() {
        let g = gen_gnp(20, 0.4, 9);
        let net = build_network(g, 2).unwrap();
        let report = run(
            &net,
            |_| Box::new(FloodOnce { received: Vec::new() }),
            &RunOptions::default(),
        )
        .unwrap();
        for v in 0..20u32 {
            let cap = report.rounds * net.graph().degree(v) as u64 * net.bits_per_round();
            assert!(report.per_node_rx_bits[v as usize] <= cap);
        }
    }

    #[test]
    fn unreceiving_programs_cannot_tell_networks_apart() {
        // Two graphs that agree on the edges at node 0 but differ elsewhere.
        let g1 = Graph::from_edges(4, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let g2 = Graph::from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();

        struct Probe {
            trace: Vec<u64>,
        }
        impl NodeProgram for Probe {
            fn init(&mut self, ctx: &mut NodeContext) -> Result<(), SimError> {
                self.trace.push(ctx.network_size() as u64);
                self.trace.push(ctx.id() as u64);
                for &nb in ctx.neighbors() {
                    self.trace.push(nb as u64);
                }
                let r = rand::Rng::random::<u64>(ctx.rng());
                self.trace.push(r);
                ctx.halt();
                Ok(())
            }
            fn step(&mut self, _: &mut NodeContext) -> Result<(), SimError> {
                Ok(())
            }
        }

        let mut traces = Vec::new();
        for g in [g1, g2] {
            let net = build_network(g, 2).unwrap();
            let trace = std::rc::Rc::new(std::cell::RefCell::new(Vec::new()));
            struct Shared(std::rc::Rc<std::cell::RefCell<Vec<u64>>>);
            impl NodeProgram for Shared {
                fn init(&mut self, ctx: &mut NodeContext) -> Result<(), SimError> {
                    let mut p = Probe { trace: Vec::new() };
                    p.init(ctx)?;
                    if ctx.id() == 0 {
                        *self.0.borrow_mut() = p.trace;
                    }
                    Ok(())
                }
                fn step(&mut self, _: &mut NodeContext) -> Result<(), SimError> {
                    Ok(())
                }
            }
            let handle = trace.clone();
            run(&net, move |_| Box::new(Shared(handle.clone())), &RunOptions { seed: 5, ..Default::default() })
                .unwrap();
            traces.push(trace.borrow().clone());
        }
        assert_eq!(traces[0], traces[1]);
    }
}
