//! Trial execution and aggregation.
//!
//! Each seed builds one instance, runs the selected algorithm under the
//! simulator, and compares the union output against the brute-force
//! oracle. What the algorithm must deliver depends on the selector:
//!
//! - `a1`: a nonempty intersection with the heavy triangles, whenever
//!   heavy triangles exist.
//! - `a2`: all heavy triangles (per-triangle success is only constant
//!   probability, so the rate is informative rather than a guarantee).
//! - `a3`: all light triangles (same caveat).
//! - `find`: any triangle when one exists, silence otherwise.
//! - `list`: the exact triangle set.
//!
//! A triple output by any node that is not a triangle of the instance is a
//! hard fault and aborts the experiment; `spurious` stays zero in any
//! report that is produced at all.

use super::config::{AlgoKind, ExperimentConfig};
use super::stats::{median, three_sigma_interval};
use super::ExperimentError;
use crate::algos::{
    finding_eps, listing_eps, log2n, run_a1, run_a2, run_a3, run_find, run_list,
};
use crate::graph::{rivin_edge_bound, Graph, TriangleSet};
use crate::sim::{build_network, run, Network, NodeContext, NodeProgram, RunOptions, SimError};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeaviestNode {
    pub node: u32,
    pub output_count: u64,
    pub rx_bits: u64,
    /// `(sqrt(2)/3) * count^(2/3) * id_bits`: the information floor implied
    /// by the node's output size. Illustrative only.
    pub rivin_floor_bits: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialReport {
    pub seed: u64,
    pub rounds: u64,
    pub halted: bool,
    pub eps: f64,
    pub eps_clamped: bool,
    pub max_edge_round_bits: u64,
    pub bandwidth_bits: u64,
    /// Size of the oracle target set for this instance.
    pub target_size: usize,
    pub found: usize,
    pub missed: usize,
    pub spurious: usize,
    pub success: bool,
    pub total_rx_bits: u64,
    pub heaviest: HeaviestNode,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuccessStats {
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    /// Symmetric 3-sigma band around the observed rate.
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundStats {
    pub min: u64,
    pub median: f64,
    pub max: u64,
    /// Shape of the round-complexity reference curve.
    pub reference_curve: String,
    /// Reference curve evaluated at this instance size.
    pub reference: f64,
    pub median_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub success_rule: String,
    pub trials: Vec<TrialReport>,
    pub success: SuccessStats,
    pub rounds: RoundStats,
    pub zero_spurious: bool,
    pub all_halted: bool,
    /// Statistical health of this batch: no spurious triples and every run
    /// halted within its budget.
    pub passed: bool,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// One-round no-op used as the normalization baseline.
struct NoopNode;
impl NodeProgram for NoopNode {
    fn init(&mut self, _ctx: &mut NodeContext) -> Result<(), SimError> {
        Ok(())
    }
    fn step(&mut self, ctx: &mut NodeContext) -> Result<(), SimError> {
        ctx.halt();
        Ok(())
    }
}

pub(super) struct RunOutcome {
    pub rounds: u64,
    pub halted: bool,
    pub max_edge_round_bits: u64,
    pub per_node_rx_bits: Vec<u64>,
    pub output: TriangleSet,
    pub per_node_output_counts: Vec<u64>,
    pub eps: f64,
    pub eps_clamped: bool,
}

pub(super) fn execute(
    cfg: &ExperimentConfig,
    net: &Network,
    seed: u64,
) -> Result<RunOutcome, SimError> {
    let opts = RunOptions { max_rounds: cfg.max_rounds, seed, collect_output: cfg.collect_output };
    let eps = cfg.standalone_eps();
    let to_outcome = |r: crate::sim::RunReport, eps: f64, clamped: bool| RunOutcome {
        rounds: r.rounds,
        halted: r.halted,
        max_edge_round_bits: r.max_edge_round_bits,
        per_node_rx_bits: r.per_node_rx_bits,
        output: r.output,
        per_node_output_counts: r.per_node_output_counts,
        eps,
        eps_clamped: clamped,
    };
    Ok(match cfg.algo {
        AlgoKind::A1 => to_outcome(run_a1(net, eps, &opts)?, eps, false),
        AlgoKind::A2 => to_outcome(run_a2(net, eps, &opts)?, eps, false),
        AlgoKind::A3 => {
            to_outcome(run_a3(net, eps, cfg.algo_cfg.m_bar, cfg.algo_cfg.c_stop, &opts)?, eps, false)
        }
        AlgoKind::Noop => to_outcome(run(net, |_| Box::new(NoopNode), &opts)?, 0.0, false),
        AlgoKind::Find => {
            let r = run_find(net, cfg.delta, &cfg.algo_cfg, &opts)?;
            RunOutcome {
                rounds: r.rounds,
                halted: r.halted,
                max_edge_round_bits: r.max_edge_round_bits,
                per_node_rx_bits: r.per_node_rx_bits,
                output: r.output,
                per_node_output_counts: r.per_node_output_counts,
                eps: r.eps,
                eps_clamped: r.eps_clamped,
            }
        }
        AlgoKind::List => {
            let r = run_list(net, &cfg.algo_cfg, &opts)?;
            RunOutcome {
                rounds: r.rounds,
                halted: r.halted,
                max_edge_round_bits: r.max_edge_round_bits,
                per_node_rx_bits: r.per_node_rx_bits,
                output: r.output,
                per_node_output_counts: r.per_node_output_counts,
                eps: r.eps,
                eps_clamped: r.eps_clamped,
            }
        }
    })
}

/// The set the algorithm is accountable for on this instance.
fn oracle_target(algo: AlgoKind, g: &Graph, eps: f64) -> TriangleSet {
    match algo {
        AlgoKind::A1 | AlgoKind::A2 => g.classify_heavy(eps).heavy,
        AlgoKind::A3 => g.classify_heavy(eps).light,
        AlgoKind::Find | AlgoKind::List => g.enumerate_triangles(),
        AlgoKind::Noop => TriangleSet::new(),
    }
}

fn success_rule(algo: AlgoKind) -> &'static str {
    match algo {
        AlgoKind::A1 => "some heavy triangle output whenever heavy triangles exist",
        AlgoKind::A2 => "every heavy triangle output",
        AlgoKind::A3 => "every light triangle output",
        AlgoKind::Find => "some triangle output iff the instance has one",
        AlgoKind::List => "output equals the full triangle set",
        AlgoKind::Noop => "always succeeds",
    }
}

fn judge(algo: AlgoKind, target: &TriangleSet, output: &TriangleSet) -> bool {
    match algo {
        AlgoKind::A1 => target.is_empty() || target.iter().any(|t| output.contains(&t)),
        AlgoKind::A2 | AlgoKind::A3 => target.iter().all(|t| output.contains(&t)),
        AlgoKind::Find => target.is_empty() == output.is_empty(),
        AlgoKind::List => output == target,
        AlgoKind::Noop => true,
    }
}

fn run_trial(cfg: &ExperimentConfig, seed: u64) -> Result<TrialReport, ExperimentError> {
    let graph = cfg.instance.build(seed)?;
    let net = build_network(graph, cfg.beta)?;
    let outcome = execute(cfg, &net, seed)?;

    let target = oracle_target(cfg.algo, net.graph(), outcome.eps);
    let found = target.iter().filter(|t| outcome.output.contains(t)).count();
    let missed = target.len() - found;
    let success = judge(cfg.algo, &target, &outcome.output);

    let (node, output_count) = outcome
        .per_node_output_counts
        .iter()
        .enumerate()
        .max_by_key(|&(i, c)| (c, std::cmp::Reverse(i)))
        .map(|(i, &c)| (i as u32, c))
        .unwrap_or((0, 0));
    let heaviest = HeaviestNode {
        node,
        output_count,
        rx_bits: outcome.per_node_rx_bits.get(node as usize).copied().unwrap_or(0),
        rivin_floor_bits: rivin_edge_bound(output_count as usize) * net.id_bits() as f64,
    };

    Ok(TrialReport {
        seed,
        rounds: outcome.rounds,
        halted: outcome.halted,
        eps: outcome.eps,
        eps_clamped: outcome.eps_clamped,
        max_edge_round_bits: outcome.max_edge_round_bits,
        bandwidth_bits: net.bits_per_round(),
        target_size: target.len(),
        found,
        missed,
        spurious: 0,
        success,
        total_rx_bits: outcome.per_node_rx_bits.iter().sum(),
        heaviest,
    })
}

/// Round-complexity reference curve of an algorithm at size `n`.
pub(super) fn reference_curve(algo: AlgoKind, n: usize, eps: f64) -> (String, f64) {
    let nf = n as f64;
    match algo {
        AlgoKind::A1 => ("n^(1-eps)".into(), nf.powf(1.0 - eps)),
        AlgoKind::A2 => ("n^(1-eps/2)".into(), nf.powf(1.0 - eps / 2.0)),
        AlgoKind::A3 => (
            "n^(1-eps) + n^((1+eps)/2) * log2 n".into(),
            nf.powf(1.0 - eps) + nf.powf((1.0 + eps) / 2.0) * log2n(n),
        ),
        AlgoKind::Find => ("n^(2/3) * (log2 n)^(2/3)".into(), nf.powf(2.0 / 3.0) * log2n(n).powf(2.0 / 3.0)),
        AlgoKind::List => ("n^(3/4) * log2 n".into(), nf.powf(0.75) * log2n(n)),
        AlgoKind::Noop => ("1".into(), 1.0),
    }
}

/// Exponent an algorithm will run with at size `n` under this config.
pub(super) fn effective_eps(cfg: &ExperimentConfig, n: usize) -> f64 {
    match (cfg.algo, cfg.algo_cfg.eps) {
        (_, Some(e)) => e,
        (AlgoKind::Find, None) => finding_eps(n).0,
        (AlgoKind::List, None) => listing_eps(n).0,
        _ => cfg.standalone_eps(),
    }
}

/// Runs every seed of the configuration (trials in parallel, reported in
/// seed order) and aggregates.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    let trials: Vec<TrialReport> = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_trial(cfg, seed))
        .collect::<Result<_, _>>()?;

    let successes = trials.iter().filter(|t| t.success).count() as u64;
    let total = trials.len() as u64;
    let (ci_low, ci_high) = three_sigma_interval(successes, total);
    let rounds: Vec<u64> = trials.iter().map(|t| t.rounds).collect();
    let med = median(&rounds);
    let eps = effective_eps(cfg, cfg.instance.n);
    let (curve, reference) = reference_curve(cfg.algo, cfg.instance.n, eps);
    let zero_spurious = trials.iter().all(|t| t.spurious == 0);
    let all_halted = trials.iter().all(|t| t.halted);

    Ok(ExperimentReport {
        config: cfg.clone(),
        success_rule: success_rule(cfg.algo).to_string(),
        success: SuccessStats {
            successes,
            trials: total,
            rate: successes as f64 / total as f64,
            ci_low,
            ci_high,
        },
        rounds: RoundStats {
            min: rounds.iter().copied().min().unwrap_or(0),
            median: med,
            max: rounds.iter().copied().max().unwrap_or(0),
            reference_curve: curve,
            reference,
            median_ratio: med / reference,
        },
        zero_spurious,
        all_halted,
        passed: zero_spurious && all_halted,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::{InstanceConfig, InstanceKind};

    fn k4_config(algo: AlgoKind, seeds: Vec<u64>) -> ExperimentConfig {
        ExperimentConfig::new(
            InstanceConfig { n: 4, kind: InstanceKind::Gnp { p: 1.0 } },
            algo,
            seeds,
        )
    }

    #[test]
    fn listing_k4_finds_all_four_triangles() {
        let report = run_experiment(&k4_config(AlgoKind::List, (0..10).collect())).unwrap();
        assert!(report.passed);
        assert_eq!(report.success.rate, 1.0);
        for t in &report.trials {
            assert_eq!(t.target_size, 4);
            assert_eq!(t.found, 4);
            assert_eq!(t.missed, 0);
            assert_eq!(t.spurious, 0);
        }
    }

    #[test]
    fn triangle_free_listing_is_all_empty() {
        let cfg = ExperimentConfig::new(
            InstanceConfig { n: 12, kind: InstanceKind::TriangleFree { density: 0.5 } },
            AlgoKind::List,
            (0..10).collect(),
        );
        let report = run_experiment(&cfg).unwrap();
        assert!(report.passed);
        for t in &report.trials {
            assert_eq!((t.found, t.missed, t.spurious), (0, 0, 0));
            assert!(t.success);
        }
    }

    #[test]
    fn reports_reproduce_bit_identically() {
        let cfg = k4_config(AlgoKind::Find, vec![3, 4, 5]);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn noop_baseline_runs_one_round() {
        let report = run_experiment(&k4_config(AlgoKind::Noop, vec![1])).unwrap();
        assert_eq!(report.trials[0].rounds, 1);
        assert!(report.trials[0].success);
    }
}
