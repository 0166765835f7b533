//! Experiment configuration: instance family, algorithm selector and run
//! parameters.

use super::ExperimentError;
use crate::algos::AlgoConfig;
use crate::graph::{gen_gnp, gen_planted, load_edge_list, Graph, PlantedKind};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceKind {
    Gnp { p: f64 },
    HeavyEdge { min_common: usize, background: f64 },
    SparseTriangles { count: usize, background: f64 },
    TriangleFree { density: f64 },
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub n: usize,
    #[serde(flatten)]
    pub kind: InstanceKind,
}

impl InstanceConfig {
    pub fn build(&self, seed: u64) -> Result<Graph, ExperimentError> {
        Ok(match &self.kind {
            InstanceKind::Gnp { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(ExperimentError::Config(format!("p = {p} outside [0, 1]")));
                }
                gen_gnp(self.n, *p, seed)
            }
            InstanceKind::HeavyEdge { min_common, background } => gen_planted(
                self.n,
                PlantedKind::HeavyEdge { min_common: *min_common, background: *background },
                seed,
            )?,
            InstanceKind::SparseTriangles { count, background } => gen_planted(
                self.n,
                PlantedKind::SparseTriangles { count: *count, background: *background },
                seed,
            )?,
            InstanceKind::TriangleFree { density } => {
                gen_planted(self.n, PlantedKind::TriangleFree { density: *density }, seed)?
            }
            InstanceKind::File { path } => load_edge_list(path)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgoKind {
    /// Neighborhood sampling (heavy-triangle finding).
    A1,
    /// Hash-bucketed edge exchange (heavy-triangle listing).
    A2,
    /// Sampled cover recursion (light-triangle listing).
    A3,
    /// Finding composition.
    Find,
    /// Listing composition.
    List,
    /// One-round no-op; normalization baseline for scaling studies.
    Noop,
}

impl std::str::FromStr for AlgoKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "a1" => AlgoKind::A1,
            "a2" => AlgoKind::A2,
            "a3" => AlgoKind::A3,
            "find" => AlgoKind::Find,
            "list" => AlgoKind::List,
            "noop" => AlgoKind::Noop,
            other => return Err(format!("unknown algorithm {other:?}")),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: InstanceConfig,
    pub algo: AlgoKind,
    pub algo_cfg: AlgoConfig,
    /// Failure-probability target of the finding composition.
    pub delta: f64,
    pub beta: u32,
    pub max_rounds: u64,
    pub seeds: Vec<u64>,
    pub collect_output: bool,
}

impl ExperimentConfig {
    pub fn new(instance: InstanceConfig, algo: AlgoKind, seeds: Vec<u64>) -> Self {
        Self {
            instance,
            algo,
            algo_cfg: AlgoConfig::default(),
            delta: 0.1,
            beta: 2,
            max_rounds: 1 << 20,
            seeds,
            collect_output: true,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.seeds.is_empty() {
            return Err(ExperimentError::Config("seed list must be non-empty".into()));
        }
        if self.max_rounds < 1 {
            return Err(ExperimentError::Config("max_rounds must be at least 1".into()));
        }
        if self.beta < 2 {
            return Err(ExperimentError::Config("beta must be at least 2".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ExperimentError::Config(format!("delta = {} outside (0, 1)", self.delta)));
        }
        if let Some(eps) = self.algo_cfg.eps {
            if !(0.0..=1.0).contains(&eps) {
                return Err(ExperimentError::Config(format!("eps = {eps} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Exponent used by the standalone algorithms when no override is set.
    pub fn standalone_eps(&self) -> f64 {
        self.algo_cfg.eps.unwrap_or(0.5)
    }
}
