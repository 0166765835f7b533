//! Cover-set recursion: lists every triangle whose three edges have no
//! common neighbor inside a given cover set.
//!
//! Protocol, per node:
//!
//! 1. Announce cover membership to all neighbors (one flag).
//! 2. Send the set of cover members among the own neighbors to all
//!    neighbors. Knowing these sets for two of its neighbors `j` and `l`,
//!    a node can decide locally whether the pair `{j, l}` is covered:
//!    exactly when the two sets intersect.
//! 3. All nodes start *active*. While any node is active:
//!    - An active node `k` computes, for each active neighbor `j`, the
//!      candidates `l`: active neighbors of `k` forming an uncovered pair
//!      with `j`. If the candidate set fits the budget it is sent to `j`,
//!      otherwise a one-bit overflow flag takes its place (that flag is
//!      all `j` needs from the set). `j` closes triangles against its own
//!      adjacency.
//!    - A node whose overflow count fits the budget declares itself
//!      *settled*: it sends the list of overflowing neighbors to its
//!      active neighbors (who again close triangles against their own
//!      adjacency) and goes inactive; its remaining triangles are covered
//!      by others.
//!    - Every node that was active this iteration tells all neighbors
//!      whether it stays active.
//!
//! Nodes run the loop at their own pace: per-channel FIFO order makes the
//! frame sequence of each neighbor unambiguous, so a node simply buffers
//! frames from neighbors that are an iteration ahead. A node halts once it
//! and all its neighbors are inactive and its queues have drained.

use super::cover_probability;
use crate::bits::Bitset;
use crate::sim::{
    run, Frame, Network, NodeChannels, NodeContext, NodeProgram, RunOptions, RunReport, SimError,
};
use rand::Rng;
use std::collections::VecDeque;

/// How a node learns whether it belongs to the cover set.
#[derive(Clone, Copy, Debug)]
pub enum CoverMembership {
    Given(bool),
    Sampled { prob: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Phase {
    CollectFlags,
    CollectCoverSets,
    Loop,
    WindDown,
}

/// Per-neighbor progress inside one loop iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Expect {
    Candidates,
    SettledSetOrFlag,
    ActiveFlag,
    Done,
}

struct NeighborState {
    id: u32,
    /// Active entering the current iteration, per the flags received.
    active: bool,
    /// Active entering the next iteration.
    next_active: bool,
    in_cover: Option<bool>,
    /// The neighbor's cover-member neighborhood, over all vertex ids.
    cover_nbrs: Option<Bitset>,
    expect: Expect,
    pending: VecDeque<Frame>,
}

pub struct CoverSweepNode {
    membership: CoverMembership,
    m_bar: f64,
    round_cap: Option<u64>,

    phase: Phase,
    self_active: bool,
    self_next_active: bool,
    nbrs: Vec<NeighborState>,
    /// `uncovered[i]` holds neighbor positions `p` such that the pair
    /// (neighbor i, neighbor p) has no common neighbor in the cover.
    uncovered: Vec<Bitset>,
    /// Neighbor positions whose candidate sets for us overflowed this
    /// iteration.
    overflowed: Vec<u32>,
    candidates_pending: usize,
    flags_pending: usize,
    decided: bool,
    chan: Option<NodeChannels>,
}

impl CoverSweepNode {
    pub fn with_membership(membership: CoverMembership, m_bar: f64, round_cap: Option<u64>) -> Self {
        assert!(m_bar >= 0.0);
        Self {
            membership,
            m_bar,
            round_cap,
            phase: Phase::CollectFlags,
            self_active: true,
            self_next_active: true,
            nbrs: Vec::new(),
            uncovered: Vec::new(),
            overflowed: Vec::new(),
            candidates_pending: 0,
            flags_pending: 0,
            decided: false,
            chan: None,
        }
    }

    pub fn given(in_cover: bool, m_bar: f64, round_cap: Option<u64>) -> Self {
        Self::with_membership(CoverMembership::Given(in_cover), m_bar, round_cap)
    }

    pub fn sampled(prob: f64, m_bar: f64, round_cap: Option<u64>) -> Self {
        Self::with_membership(CoverMembership::Sampled { prob }, m_bar, round_cap)
    }

    fn protocol_err(ctx: &NodeContext, from: u32, detail: impl Into<String>) -> SimError {
        SimError::Protocol { node: ctx.id(), from, detail: detail.into() }
    }

    /// Moves through as many protocol steps as buffered frames allow.
    fn progress(&mut self, ctx: &mut NodeContext, chan: &mut NodeChannels) -> Result<(), SimError> {
        loop {
            let before = (self.phase, self.candidates_pending, self.flags_pending, self.decided);
            match self.phase {
                Phase::CollectFlags => self.progress_flags(ctx, chan)?,
                Phase::CollectCoverSets => self.progress_cover_sets(ctx, chan)?,
                Phase::Loop => self.progress_loop(ctx, chan)?,
                Phase::WindDown => return Ok(()),
            }
            let after = (self.phase, self.candidates_pending, self.flags_pending, self.decided);
            if before == after {
                return Ok(());
            }
        }
    }

    fn progress_flags(&mut self, _ctx: &mut NodeContext, chan: &mut NodeChannels) -> Result<(), SimError> {
        for nbr in &mut self.nbrs {
            if nbr.in_cover.is_none() {
                if let Some(Frame::XFlag(_)) = nbr.pending.front() {
                    let Some(Frame::XFlag(flag)) = nbr.pending.pop_front() else { unreachable!() };
                    nbr.in_cover = Some(flag);
                }
            }
        }
        if self.nbrs.iter().all(|nb| nb.in_cover.is_some()) {
            let cover_nbrs: Vec<u32> = self
                .nbrs
                .iter()
                .filter(|nb| nb.in_cover == Some(true))
                .map(|nb| nb.id)
                .collect();
            chan.enqueue_all(&Frame::NxSet(cover_nbrs))?;
            self.phase = Phase::CollectCoverSets;
        }
        Ok(())
    }

    fn progress_cover_sets(&mut self, ctx: &mut NodeContext, chan: &mut NodeChannels) -> Result<(), SimError> {
        let n = ctx.network_size();
        for nbr in &mut self.nbrs {
            if nbr.cover_nbrs.is_none() {
                if let Some(Frame::NxSet(_)) = nbr.pending.front() {
                    let Some(Frame::NxSet(ids)) = nbr.pending.pop_front() else { unreachable!() };
                    nbr.cover_nbrs = Some(Bitset::from_indices(n, ids));
                }
            }
        }
        if self.nbrs.iter().all(|nb| nb.cover_nbrs.is_some()) {
            // Pairwise coverage among the own neighbors is now decidable
            // and fixed for the whole run.
            let deg = self.nbrs.len();
            self.uncovered = vec![Bitset::new(deg.max(1)); deg];
            for i in 0..deg {
                for p in (i + 1)..deg {
                    let a = self.nbrs[i].cover_nbrs.as_ref().unwrap();
                    let b = self.nbrs[p].cover_nbrs.as_ref().unwrap();
                    if !a.intersects(b) {
                        self.uncovered[i].insert(p as u32);
                        self.uncovered[p].insert(i as u32);
                    }
                }
            }
            self.phase = Phase::Loop;
            self.start_iteration(ctx, chan)?;
        }
        Ok(())
    }

    /// Computes and enqueues this iteration's outgoing candidate sets, and
    /// resets the per-iteration bookkeeping.
    fn start_iteration(&mut self, ctx: &mut NodeContext, chan: &mut NodeChannels) -> Result<(), SimError> {
        let active_nbrs = self.nbrs.iter().filter(|nb| nb.active).count();
        if !self.self_active && active_nbrs == 0 {
            self.phase = Phase::WindDown;
            return Ok(());
        }

        self.overflowed.clear();
        self.decided = false;
        self.flags_pending = active_nbrs;
        self.candidates_pending = if self.self_active { active_nbrs } else { 0 };

        let deg = self.nbrs.len();
        for i in 0..deg {
            self.nbrs[i].expect = if self.nbrs[i].active {
                if self.self_active {
                    Expect::Candidates
                } else {
                    Expect::ActiveFlag
                }
            } else {
                Expect::Done
            };
        }

        if self.self_active {
            let active_bits = Bitset::from_indices(
                deg.max(1),
                self.nbrs.iter().enumerate().filter(|(_, nb)| nb.active).map(|(i, _)| i as u32),
            );
            for i in 0..deg {
                if !self.nbrs[i].active {
                    continue;
                }
                let mut candidates: Vec<u32> = Vec::new();
                for p in self.uncovered[i].iter_ones() {
                    if active_bits.contains(p) {
                        candidates.push(self.nbrs[p as usize].id);
                    }
                }
                let to = self.nbrs[i].id;
                if candidates.len() as f64 <= self.m_bar {
                    chan.enqueue(to, &Frame::SSet(candidates))?;
                } else {
                    chan.enqueue(to, &Frame::Overflow)?;
                }
            }
            if active_nbrs == 0 {
                // No one can overflow against us: settle immediately.
                self.decide(ctx, chan)?;
            }
        }
        Ok(())
    }

    /// Declares this node settled or still active once all candidate
    /// responses of the iteration are in.
    fn decide(&mut self, _ctx: &mut NodeContext, chan: &mut NodeChannels) -> Result<(), SimError> {
        let settled = self.overflowed.len() as f64 <= self.m_bar;
        self.self_next_active = !settled;
        if settled && !self.overflowed.is_empty() {
            let mut listed: Vec<u32> = self.overflowed.iter().map(|&p| self.nbrs[p as usize].id).collect();
            listed.sort_unstable();
            let targets: Vec<u32> =
                self.nbrs.iter().filter(|nb| nb.active).map(|nb| nb.id).collect();
            for to in targets {
                chan.enqueue(to, &Frame::TBarSet(listed.clone()))?;
            }
        }
        // The membership flag follows any settled-set frame on each channel.
        chan.enqueue_all(&Frame::UFlag(self.self_next_active))?;
        self.decided = true;
        Ok(())
    }

    fn progress_loop(&mut self, ctx: &mut NodeContext, chan: &mut NodeChannels) -> Result<(), SimError> {
        let deg = self.nbrs.len();
        for i in 0..deg {
            loop {
                let expect = self.nbrs[i].expect;
                let front_matches = {
                    let nbr = &self.nbrs[i];
                    match (expect, nbr.pending.front()) {
                        (Expect::Done, _) | (_, None) => None,
                        (Expect::Candidates, Some(Frame::SSet(_) | Frame::Overflow)) => Some(()),
                        (Expect::Candidates, Some(other)) => {
                            return Err(Self::protocol_err(
                                ctx,
                                nbr.id,
                                format!("expected candidates, saw {other:?}"),
                            ))
                        }
                        (Expect::SettledSetOrFlag, Some(Frame::TBarSet(_) | Frame::UFlag(_))) => Some(()),
                        (Expect::SettledSetOrFlag, Some(other)) => {
                            return Err(Self::protocol_err(
                                ctx,
                                nbr.id,
                                format!("expected settled set or flag, saw {other:?}"),
                            ))
                        }
                        (Expect::ActiveFlag, Some(Frame::UFlag(_))) => Some(()),
                        (Expect::ActiveFlag, Some(Frame::TBarSet(_))) if !self.self_active => {
                            // Settled sets target active nodes only.
                            return Err(Self::protocol_err(ctx, nbr.id, "settled set sent to inactive node"));
                        }
                        (Expect::ActiveFlag, Some(other)) => {
                            return Err(Self::protocol_err(
                                ctx,
                                nbr.id,
                                format!("expected membership flag, saw {other:?}"),
                            ))
                        }
                    }
                };
                if front_matches.is_none() {
                    break;
                }
                let frame = self.nbrs[i].pending.pop_front().unwrap();
                let sender = self.nbrs[i].id;
                match frame {
                    Frame::SSet(candidates) => {
                        for l in candidates {
                            if l != ctx.id() && l != sender && ctx.is_neighbor(l) {
                                ctx.emit_triangle(ctx.id(), sender, l)?;
                            }
                        }
                        self.nbrs[i].expect = Expect::SettledSetOrFlag;
                        self.candidates_pending -= 1;
                    }
                    Frame::Overflow => {
                        self.overflowed.push(i as u32);
                        self.nbrs[i].expect = Expect::SettledSetOrFlag;
                        self.candidates_pending -= 1;
                    }
                    Frame::TBarSet(listed) => {
                        for x in listed {
                            if x != ctx.id() && x != sender && ctx.is_neighbor(x) {
                                ctx.emit_triangle(sender, ctx.id(), x)?;
                            }
                        }
                        self.nbrs[i].expect = Expect::ActiveFlag;
                    }
                    Frame::UFlag(still_active) => {
                        self.nbrs[i].next_active = still_active;
                        self.nbrs[i].expect = Expect::Done;
                        self.flags_pending -= 1;
                    }
                    other => {
                        return Err(Self::protocol_err(ctx, sender, format!("unexpected {other:?}")))
                    }
                }
            }
        }

        if self.self_active && !self.decided && self.candidates_pending == 0 {
            self.decide(ctx, chan)?;
        }

        let iteration_done =
            self.flags_pending == 0 && self.candidates_pending == 0 && (self.decided || !self.self_active);
        if iteration_done {
            self.self_active = self.self_next_active;
            for nbr in &mut self.nbrs {
                nbr.active = nbr.active && nbr.next_active;
            }
            self.start_iteration(ctx, chan)?;
        }
        Ok(())
    }
}

impl NodeProgram for CoverSweepNode {
    fn init(&mut self, ctx: &mut NodeContext) -> Result<(), SimError> {
        let in_cover = match self.membership {
            CoverMembership::Given(flag) => flag,
            CoverMembership::Sampled { prob } => ctx.rng().random_bool(prob),
        };
        self.nbrs = ctx
            .neighbors()
            .iter()
            .map(|&id| NeighborState {
                id,
                active: true,
                next_active: true,
                in_cover: None,
                cover_nbrs: None,
                expect: Expect::Done,
                pending: VecDeque::new(),
            })
            .collect();
        let mut chan = NodeChannels::new(ctx);
        chan.enqueue_all(&Frame::XFlag(in_cover))?;
        self.progress(ctx, &mut chan)?;
        chan.pump(ctx)?;
        if self.phase == Phase::WindDown && chan.drained() {
            ctx.halt();
        }
        self.chan = Some(chan);
        Ok(())
    }

    fn step(&mut self, ctx: &mut NodeContext) -> Result<(), SimError> {
        if let Some(cap) = self.round_cap {
            if ctx.round() >= cap {
                ctx.halt();
                return Ok(());
            }
        }
        let mut chan = self.chan.take().expect("initialized");
        for (sender, frame) in chan.ingest(ctx)? {
            let idx = self
                .nbrs
                .binary_search_by_key(&sender, |nb| nb.id)
                .map_err(|_| Self::protocol_err(ctx, sender, "frame from unknown sender"))?;
            self.nbrs[idx].pending.push_back(frame);
        }
        self.progress(ctx, &mut chan)?;
        chan.pump(ctx)?;
        if self.phase == Phase::WindDown && chan.drained() {
            ctx.halt();
        }
        self.chan = Some(chan);
        Ok(())
    }
}

/// Runs the cover recursion with externally assigned cover membership and
/// no round cap (the engine's `max_rounds` still applies).
pub fn run_sub_a(
    net: &Network,
    cover: &[bool],
    m_bar: f64,
    opts: &RunOptions,
) -> Result<RunReport, SimError> {
    assert_eq!(cover.len(), net.graph().vertex_count());
    run(net, |id| Box::new(CoverSweepNode::given(cover[id as usize], m_bar, None)), opts)
}

/// Factory for the sampled-cover variant; used by the capped algorithm and
/// the compositions.
pub(crate) fn sweep_factory(
    n: usize,
    eps: f64,
    m_bar: f64,
    round_cap: Option<u64>,
) -> impl FnMut(u32) -> Box<dyn NodeProgram> {
    let prob = cover_probability(n, eps);
    move |_| Box::new(CoverSweepNode::sampled(prob, m_bar, round_cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_gnp, Graph, Triangle, VertexSet};
    use crate::sim::build_network;

    fn k3_net() -> Network {
        build_network(Graph::from_edges(3, [(0, 1), (0, 2), (1, 2)]).unwrap(), 2).unwrap()
    }

    #[test]
    fn empty_cover_lists_the_triangle_in_one_iteration() {
        // With nobody in the cover, every pair is uncovered and every
        // candidate set is complete.
        let report = run_sub_a(&k3_net(), &[false; 3], 3.0, &RunOptions::default()).unwrap();
        assert!(report.halted);
        assert!(report.output.contains(&Triangle::new(0, 1, 2)));
    }

    #[test]
    fn full_cover_on_k3_excludes_every_pair() {
        // Every pair of nodes has its third vertex as a covered common
        // neighbor, so nothing has to be listed.
        let report = run_sub_a(&k3_net(), &[true; 3], 3.0, &RunOptions::default()).unwrap();
        assert!(report.halted);
        assert!(report.output.is_empty());
    }

    #[test]
    fn zero_budget_stalls_and_hits_max_rounds() {
        // Candidate sets of size one already overflow a zero budget, and
        // with more than zero overflowing neighbors nobody ever settles.
        let opts = RunOptions { max_rounds: 64, ..Default::default() };
        let report = run_sub_a(&k3_net(), &[false; 3], 0.0, &opts).unwrap();
        assert!(!report.halted);
        assert_eq!(report.rounds, 64);
    }

    #[test]
    fn covers_the_uncovered_triangle_oracle() {
        for seed in 0..8u64 {
            let g = gen_gnp(24, 0.4, seed);
            let cover_flags: Vec<bool> = (0..24).map(|v| v % 5 == (seed % 5) as u32).collect();
            let cover = VertexSet::from_flags(&cover_flags);
            let expected: crate::graph::TriangleSet = g
                .enumerate_triangles()
                .iter()
                .filter(|t| t.edges().iter().all(|&(a, b)| g.in_delta(&cover, a, b)))
                .collect();
            let net = build_network(g, 2).unwrap();
            let report =
                run_sub_a(&net, &cover_flags, 1e9, &RunOptions { seed, ..Default::default() })
                    .unwrap();
            assert!(report.halted);
            assert!(
                expected.is_subset_of(&report.output),
                "seed {seed}: expected {} uncovered triangles, output has {}",
                expected.len(),
                report.output.len()
            );
        }
    }

    #[test]
    fn isolated_nodes_halt_immediately() {
        let g = Graph::from_edges(2, []).unwrap();
        let net = build_network(g, 2).unwrap();
        let report = run_sub_a(&net, &[false, false], 1.0, &RunOptions::default()).unwrap();
        assert_eq!(report.rounds, 0);
        assert!(report.halted);
    }
}
