//! Finding and listing compositions.
//!
//! Both run heavy-side and light-side passes back to back and aggregate:
//! round counts add, outputs union. Each pass is an independent execution
//! with its own derived seed, so a single pass can be reproduced in
//! isolation from the same master seed.

use super::{
    find_repetitions, finding_eps, list_repetitions, listing_eps, run_a1, run_a2, run_a3,
    AlgoConfig,
};
use crate::graph::TriangleSet;
use crate::sim::{derive_seed, Network, RunOptions, RunReport, SimError};

/// Per-pass round/output accounting inside a composition.
#[derive(Clone, Debug, PartialEq)]
pub struct PassSummary {
    pub heavy_rounds: u64,
    pub light_rounds: u64,
    pub halted: bool,
    /// Union output size after this pass.
    pub cumulative_output: usize,
}

/// Aggregate of a multi-pass composition.
#[derive(Clone, Debug, PartialEq)]
pub struct ComposedReport {
    /// Threshold exponent the passes ran with.
    pub eps: f64,
    /// Whether the derived exponent was clamped into `[0, 1]`.
    pub eps_clamped: bool,
    pub passes: Vec<PassSummary>,
    /// Total rounds over all passes.
    pub rounds: u64,
    /// True when every pass ran to completion.
    pub halted: bool,
    pub max_edge_round_bits: u64,
    pub per_node_rx_bits: Vec<u64>,
    /// Union of all node outputs over all passes.
    pub output: TriangleSet,
    /// Per-pass distinct output counts, summed per node.
    pub per_node_output_counts: Vec<u64>,
}

impl ComposedReport {
    fn new(n: usize, eps: f64, eps_clamped: bool) -> Self {
        Self {
            eps,
            eps_clamped,
            passes: Vec::new(),
            rounds: 0,
            halted: true,
            max_edge_round_bits: 0,
            per_node_rx_bits: vec![0; n],
            output: TriangleSet::new(),
            per_node_output_counts: vec![0; n],
        }
    }

    fn absorb(&mut self, report: &RunReport) {
        self.rounds += report.rounds;
        self.halted &= report.halted;
        self.max_edge_round_bits = self.max_edge_round_bits.max(report.max_edge_round_bits);
        for (acc, &bits) in self.per_node_rx_bits.iter_mut().zip(&report.per_node_rx_bits) {
            *acc += bits;
        }
        for (acc, &c) in self.per_node_output_counts.iter_mut().zip(&report.per_node_output_counts) {
            *acc += c;
        }
        self.output.union_with(&report.output);
    }

    /// Node with the largest accumulated output (ties broken by id).
    pub fn heaviest_output_node(&self) -> Option<(u32, u64)> {
        self.per_node_output_counts
            .iter()
            .enumerate()
            .max_by_key(|&(i, c)| (c, std::cmp::Reverse(i)))
            .map(|(i, &c)| (i as u32, c))
    }
}

/// Seeds of pass `pass`: one for the heavy-side run, one for the
/// light-side run.
pub fn pass_seeds(master: u64, pass: u64) -> (u64, u64) {
    (derive_seed(master, 2 * pass), derive_seed(master, 2 * pass + 1))
}

/// Triangle finding: neighborhood sampling then the capped cover
/// recursion, repeated until the failure probability drops below `delta`.
/// If the graph has a triangle, some node outputs one with probability at
/// least `1 - delta`; on triangle-free graphs the output is always empty.
pub fn run_find(
    net: &Network,
    delta: f64,
    cfg: &AlgoConfig,
    opts: &RunOptions,
) -> Result<ComposedReport, SimError> {
    let n = net.graph().vertex_count();
    let (eps, clamped) = match cfg.eps {
        Some(e) => (e, false),
        None => finding_eps(n),
    };
    let reps = find_repetitions(delta, cfg.c_rep_find);
    compose(net, eps, clamped, reps, cfg, opts, run_a1)
}

/// Triangle listing: bucket exchange then the capped cover recursion,
/// `ceil(c_rep * log2 n)` times. The union output equals the full triangle
/// set with probability at least `1 - 1/n`.
pub fn run_list(
    net: &Network,
    cfg: &AlgoConfig,
    opts: &RunOptions,
) -> Result<ComposedReport, SimError> {
    let n = net.graph().vertex_count();
    let (eps, clamped) = match cfg.eps {
        Some(e) => (e, false),
        None => listing_eps(n),
    };
    let reps = list_repetitions(n, cfg.c_rep_list);
    compose(net, eps, clamped, reps, cfg, opts, run_a2)
}

fn compose(
    net: &Network,
    eps: f64,
    eps_clamped: bool,
    reps: usize,
    cfg: &AlgoConfig,
    opts: &RunOptions,
    heavy: fn(&Network, f64, &RunOptions) -> Result<RunReport, SimError>,
) -> Result<ComposedReport, SimError> {
    let n = net.graph().vertex_count();
    let mut composed = ComposedReport::new(n, eps, eps_clamped);
    for pass in 0..reps as u64 {
        let (heavy_seed, light_seed) = pass_seeds(opts.seed, pass);
        let heavy_report = heavy(net, eps, &RunOptions { seed: heavy_seed, ..*opts })?;
        let light_report =
            run_a3(net, eps, cfg.m_bar, cfg.c_stop, &RunOptions { seed: light_seed, ..*opts })?;
        composed.absorb(&heavy_report);
        composed.absorb(&light_report);
        composed.passes.push(PassSummary {
            heavy_rounds: heavy_report.rounds,
            light_rounds: light_report.rounds,
            halted: heavy_report.halted && light_report.halted,
            cumulative_output: composed.output.len(),
        });
    }
    Ok(composed)
}
