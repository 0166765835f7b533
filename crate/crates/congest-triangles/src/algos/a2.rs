//! Hash-bucketed edge exchange: reports every heavy triangle with constant
//! probability.
//!
//! Each node draws a 3-wise independent hash over the vertex ids with range
//! `floor(n^(eps/2))` and broadcasts its encoding to its neighbors. A node
//! `j` then sends neighbor `a` exactly the edges `{j, l}` whose far
//! endpoint hashes to bucket zero under `a`'s function, unless that bucket
//! grew past `8 + 4n / floor(n^(eps/2))` entries. Finally each node lists
//! all triangles formed entirely by edges it received. For a heavy edge,
//! each of its many triangle witnesses independently gives the missing two
//! endpoints a `1/range^2`-ish chance of landing in its zero bucket, and
//! the preimage bound keeps the transfers short.

use crate::hash::{ceil_log2, field_modulus, sample_hash, HashFn};
use crate::sim::{
    run, Frame, Network, NodeChannels, NodeContext, NodeProgram, RunOptions, RunReport, SimError,
};
use std::collections::BTreeMap;

enum Phase {
    /// Hash encodings are in flight until the globally known deadline.
    Hashes,
    /// Edge buckets are in flight; one frame per neighbor.
    Edges,
}

pub struct BucketExchangeNode {
    eps: f64,
    phase: Phase,
    hash_deadline: u64,
    hashes: BTreeMap<u32, HashFn>,
    received_sets: usize,
    /// Edges `{sender, l}` received so far; only kept when outputs are
    /// being collected.
    edges: Vec<(u32, u32)>,
    chan: Option<NodeChannels>,
}

impl BucketExchangeNode {
    pub fn new(eps: f64) -> Self {
        assert!((0.0..=1.0).contains(&eps));
        Self {
            eps,
            phase: Phase::Hashes,
            hash_deadline: 0,
            hashes: BTreeMap::new(),
            received_sets: 0,
            edges: Vec::new(),
            chan: None,
        }
    }

    /// Lists all triples whose three edges arrived, deduplicated by
    /// construction: each triangle is closed from its lowest-id edge.
    fn emit_received_triangles(&self, ctx: &mut NodeContext) -> Result<(), SimError> {
        let mut ids: Vec<u32> = self.edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        ids.sort_unstable();
        ids.dedup();
        let index: BTreeMap<u32, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut rows = vec![crate::bits::Bitset::new(ids.len()); ids.len()];
        for &(a, b) in &self.edges {
            let (ia, ib) = (index[&a], index[&b]);
            rows[ia].insert(ib as u32);
            rows[ib].insert(ia as u32);
        }
        for ia in 0..ids.len() {
            for ib in rows[ia].iter_ones().map(|x| x as usize).filter(|&x| x > ia) {
                for ic in rows[ia].iter_ones().map(|x| x as usize).filter(|&x| x > ib) {
                    if rows[ib].contains(ic as u32) {
                        ctx.emit_triangle(ids[ia], ids[ib], ids[ic])?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl NodeProgram for BucketExchangeNode {
    fn init(&mut self, ctx: &mut NodeContext) -> Result<(), SimError> {
        if ctx.degree() == 0 {
            ctx.halt();
            return Ok(());
        }
        let n = ctx.network_size();
        self.hash_deadline = a2_hash_deadline(n, self.eps, ctx.bits_per_round());
        let range = a2_range(n, self.eps);
        let h = sample_hash(3, n as u64, range, ctx.rng());
        let mut chan = NodeChannels::new(ctx);
        chan.enqueue_all(&Frame::Hash(h))?;
        chan.pump(ctx)?;
        self.chan = Some(chan);
        Ok(())
    }

    fn step(&mut self, ctx: &mut NodeContext) -> Result<(), SimError> {
        let mut chan = self.chan.take().expect("initialized");
        for (sender, frame) in chan.ingest(ctx)? {
            match frame {
                Frame::Hash(h) => {
                    self.hashes.insert(sender, h);
                }
                Frame::EdgeSet(ids) => {
                    self.received_sets += 1;
                    if ctx.collecting() {
                        for l in ids {
                            if l != sender {
                                self.edges.push((sender, l));
                            }
                        }
                    }
                }
                other => {
                    self.chan = Some(chan);
                    return Err(SimError::Protocol {
                        node: ctx.id(),
                        from: sender,
                        detail: format!("unexpected frame {other:?}"),
                    });
                }
            }
        }

        if matches!(self.phase, Phase::Hashes) && ctx.round() >= self.hash_deadline {
            if self.hashes.len() != ctx.degree() {
                self.chan = Some(chan);
                return Err(SimError::Protocol {
                    node: ctx.id(),
                    from: ctx.id(),
                    detail: "hash exchange incomplete at its deadline".into(),
                });
            }
            let cap = a2_edge_cap(ctx.network_size(), self.eps);
            for (&a, hash) in &self.hashes {
                let bucket: Vec<u32> = ctx
                    .neighbors()
                    .iter()
                    .copied()
                    .filter(|&l| hash.eval_unchecked(l as u64) == 0)
                    .collect();
                // An oversized bucket is withheld; the empty frame lets the
                // receiver account for this channel and terminate.
                let payload = if bucket.len() as f64 <= cap { bucket } else { Vec::new() };
                chan.enqueue(a, &Frame::EdgeSet(payload))?;
            }
            self.phase = Phase::Edges;
        }

        chan.pump(ctx)?;
        if matches!(self.phase, Phase::Edges)
            && self.received_sets == ctx.degree()
            && chan.drained()
        {
            if ctx.collecting() {
                self.emit_received_triangles(ctx)?;
            }
            ctx.halt();
        }
        self.chan = Some(chan);
        Ok(())
    }
}

/// Range of the bucket hash: `max(1, floor(n^(eps/2)))`.
pub fn a2_range(n: usize, eps: f64) -> u64 {
    ((n as f64).powf(eps / 2.0).floor() as u64).max(1)
}

/// Largest bucket any node may transmit: `8 + 4n / floor(n^(eps/2))`.
pub fn a2_edge_cap(n: usize, eps: f64) -> f64 {
    8.0 + 4.0 * n as f64 / a2_range(n, eps) as f64
}

/// Round by which every hash encoding has arrived: all encodings share one
/// length, `8 + 16 + 3 * ceil(log2 q)` bits.
pub fn a2_hash_deadline(n: usize, eps: f64, bits_per_round: u64) -> u64 {
    let w = ceil_log2(field_modulus(n as u64, a2_range(n, eps)));
    (8 + 16 + 3 * w as u64).div_ceil(bits_per_round)
}

/// Runs the bucket-exchange program on every node.
pub fn run_a2(net: &Network, eps: f64, opts: &RunOptions) -> Result<RunReport, SimError> {
    run(net, |_| Box::new(BucketExchangeNode::new(eps)), opts)
}
