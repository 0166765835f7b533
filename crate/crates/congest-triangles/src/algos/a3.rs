//! Light-triangle listing: a randomly sampled cover plus the capped cover
//! recursion.
//!
//! Each node joins the cover independently with probability `1/(9 n^eps)`.
//! A light triangle has all edge weights below `n^eps`, so all three of
//! its edges stay uncovered with probability at least 2/3, in which case
//! the recursion lists it. Nodes abort once the round count reaches
//! `c_stop * (n^(1-eps) + n^((1+eps)/2) * log2 n)`, which bounds the cost
//! when the sampled cover is unlucky.

use super::sweep::sweep_factory;
use super::{log2n, m_bar_default};
use crate::sim::{run, Network, RunOptions, RunReport, SimError};

/// Abort threshold of the capped recursion:
/// `ceil(c_stop * (n^(1-eps) + n^((1+eps)/2) * log2 n))`, at least 1.
pub fn a3_round_cap(n: usize, eps: f64, c_stop: f64) -> u64 {
    let nf = n as f64;
    let cap = c_stop * (nf.powf(1.0 - eps) + nf.powf((1.0 + eps) / 2.0) * log2n(n));
    (cap.ceil() as u64).max(1)
}

/// Runs the sampled-cover recursion with the round cap. `m_bar` falls back
/// to its derived default when `None`.
pub fn run_a3(
    net: &Network,
    eps: f64,
    m_bar: Option<f64>,
    c_stop: f64,
    opts: &RunOptions,
) -> Result<RunReport, SimError> {
    assert!((0.0..=1.0).contains(&eps));
    let n = net.graph().vertex_count();
    let m_bar = m_bar.unwrap_or_else(|| m_bar_default(n, eps));
    let cap = a3_round_cap(n, eps, c_stop);
    run(net, sweep_factory(n, eps, m_bar, Some(cap)), opts)
}
