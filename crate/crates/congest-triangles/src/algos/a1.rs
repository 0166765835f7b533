//! Neighborhood sampling: the fast path to *some* heavy triangle.
//!
//! Every node draws a random subset of its neighbors, keeping each with
//! probability `n^-eps`, and ships the sample to all neighbors unless it
//! blew past `4 * n^(1-eps)` entries. A receiver closes triangles between
//! itself, the sender and any sampled vertex it is adjacent to. An edge in
//! many triangles has many witnesses, so some sampled vertex completes a
//! triangle over it with constant probability.

use crate::sim::{
    frame_bits_for_set, run, Frame, Network, NodeChannels, NodeContext, NodeProgram, RunOptions,
    RunReport, SimError,
};
use rand::Rng;

pub struct NeighborSampleNode {
    eps: f64,
    deadline: u64,
    chan: Option<NodeChannels>,
}

impl NeighborSampleNode {
    pub fn new(eps: f64) -> Self {
        assert!((0.0..=1.0).contains(&eps));
        Self { eps, deadline: 0, chan: None }
    }
}

impl NodeProgram for NeighborSampleNode {
    fn init(&mut self, ctx: &mut NodeContext) -> Result<(), SimError> {
        if ctx.degree() == 0 {
            ctx.halt();
            return Ok(());
        }
        let n = ctx.network_size();
        self.deadline = a1_round_deadline(n, self.eps, ctx.id_bits(), ctx.bits_per_round());

        let keep_prob = (n as f64).powf(-self.eps);
        let sample: Vec<u32> = ctx
            .neighbors()
            .to_vec()
            .into_iter()
            .filter(|_| ctx.rng().random_bool(keep_prob))
            .collect();

        let mut chan = NodeChannels::new(ctx);
        let cap = 4.0 * (n as f64).powf(1.0 - self.eps);
        // Oversized samples are dropped entirely; receivers simply hear
        // nothing from this node.
        if sample.len() as f64 <= cap {
            chan.enqueue_all(&Frame::SSet(sample))?;
        }
        chan.pump(ctx)?;
        self.chan = Some(chan);
        Ok(())
    }

    fn step(&mut self, ctx: &mut NodeContext) -> Result<(), SimError> {
        let chan = self.chan.as_mut().expect("initialized");
        for (sender, frame) in chan.ingest(ctx)? {
            let Frame::SSet(sample) = frame else {
                return Err(SimError::Protocol {
                    node: ctx.id(),
                    from: sender,
                    detail: format!("unexpected frame {frame:?}"),
                });
            };
            for l in sample {
                if ctx.is_neighbor(l) && l != sender {
                    ctx.emit_triangle(sender, ctx.id(), l)?;
                }
            }
        }
        chan.pump(ctx)?;
        if ctx.round() >= self.deadline && chan.drained() {
            ctx.halt();
        }
        Ok(())
    }
}

/// Rounds after which every permissible sample has fully arrived: the
/// transfer time of the largest sample any node may send.
pub fn a1_round_deadline(n: usize, eps: f64, id_bits: u32, bits_per_round: u64) -> u64 {
    let cap = (4.0 * (n as f64).powf(1.0 - eps)).floor() as usize;
    let largest = cap.min(n.saturating_sub(1));
    frame_bits_for_set(largest, id_bits).div_ceil(bits_per_round)
}

/// Runs the neighborhood-sampling program on every node.
pub fn run_a1(net: &Network, eps: f64, opts: &RunOptions) -> Result<RunReport, SimError> {
    run(net, |_| Box::new(NeighborSampleNode::new(eps)), opts)
}
