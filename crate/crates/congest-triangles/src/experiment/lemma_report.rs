//! Statistical verification of the probabilistic building blocks, each
//! reported as observed value vs. theoretical bound at the fixed 3-sigma
//! policy.

use super::stats::binomial_sigma;
use super::ExperimentError;
use crate::algos::lemmas::{lemma2_trial, lemma3_trial};
use crate::algos::m_bar_default;
use crate::graph::{edge_cover, gen_gnp, rivin_edge_bound, Triangle, TriangleSet};
use crate::hash::lemma1_estimate;
use crate::sim::derive_seed;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaConfig {
    pub seed: u64,
    pub hash_domain: u64,
    pub hash_ranges: Vec<u64>,
    pub hash_trials: u64,
    /// Instance size for the uncovered-capture check.
    pub capture_n: usize,
    pub capture_eps: f64,
    pub capture_samples: u64,
    /// Instance size for the settled-node check.
    pub settle_n: usize,
    pub settle_eps: f64,
    pub settle_samples: u64,
    /// Random triangle subsets tested against the edge-count floor.
    pub cover_subsets: u64,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            hash_domain: 64,
            hash_ranges: vec![4, 8],
            hash_trials: 100_000,
            capture_n: 40,
            capture_eps: 0.5,
            capture_samples: 500,
            settle_n: 48,
            settle_eps: 0.5,
            settle_samples: 500,
            cover_subsets: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub name: String,
    pub observed: f64,
    pub bound: f64,
    pub sigma: f64,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaReport {
    pub config: LemmaConfig,
    pub checks: Vec<LemmaCheck>,
    pub passed: bool,
}

impl LemmaReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Runs all statistical checks: hash collision-event frequency, light
/// triangle capture by sampled covers, the settled-node bounds of the
/// recursion, and the triangle/edge-count floor on sampled triangle sets.
pub fn verify_lemmas(cfg: &LemmaConfig) -> Result<LemmaReport, ExperimentError> {
    if cfg.hash_trials == 0 || cfg.capture_samples == 0 || cfg.settle_samples == 0 {
        return Err(ExperimentError::Config("sample counts must be positive".into()));
    }
    let mut checks = Vec::new();

    // Joint hash event: both probes land on bucket zero and the bucket
    // preimage stays below four times its conditional mean.
    for &range in &cfg.hash_ranges {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, range));
        let observed =
            lemma1_estimate(cfg.hash_domain, range, 0, 1, 0, cfg.hash_trials, &mut rng);
        let bound = 3.0 / (4.0 * (range * range) as f64);
        let sigma = binomial_sigma(bound, cfg.hash_trials);
        checks.push(LemmaCheck {
            name: format!("hash-joint-event-range-{range}"),
            observed,
            bound,
            sigma,
            pass: observed >= bound - 3.0 * sigma,
            detail: format!(
                "domain {}, {} samples; require observed >= bound - 3 sigma",
                cfg.hash_domain, cfg.hash_trials
            ),
        });
    }

    // Light-triangle capture: every light triangle keeps all three edges
    // uncovered in at least 2/3 of cover samples.
    {
        let g = gen_gnp(cfg.capture_n, 0.5, derive_seed(cfg.seed, 101));
        let trials: Vec<_> = (0..cfg.capture_samples)
            .into_par_iter()
            .map(|i| lemma2_trial(&g, cfg.capture_eps, derive_seed(cfg.seed, 200 + i)))
            .collect();
        let light_count = trials.first().map(|t| t.light.len()).unwrap_or(0);
        let bound = 2.0 / 3.0;
        let sigma = binomial_sigma(bound, cfg.capture_samples);
        let (observed, detail) = if light_count == 0 {
            (1.0, format!("no light triangles at eps {}; vacuous", cfg.capture_eps))
        } else {
            let mut per_triangle = vec![0u64; light_count];
            for t in &trials {
                for (i, &hit) in t.captured.iter().enumerate() {
                    per_triangle[i] += hit as u64;
                }
            }
            let worst =
                per_triangle.iter().map(|&h| h as f64 / cfg.capture_samples as f64).fold(1.0, f64::min);
            (worst, format!("{} light triangles, worst per-triangle capture rate", light_count))
        };
        checks.push(LemmaCheck {
            name: "cover-capture-rate".into(),
            observed,
            bound,
            sigma,
            pass: observed >= bound - 3.0 * sigma,
            detail,
        });
    }

    // Settled-node bounds: samples where some tested active set kept more
    // than half its nodes unsettled, and samples where some uncovered pair
    // exceeded the weight cap, are both rare.
    {
        let n = cfg.settle_n;
        let g = gen_gnp(n, 0.5, derive_seed(cfg.seed, 102));
        let m_bar = m_bar_default(n, cfg.settle_eps);
        let trials: Vec<_> = (0..cfg.settle_samples)
            .into_par_iter()
            .map(|i| lemma3_trial(&g, cfg.settle_eps, m_bar, derive_seed(cfg.seed, 5000 + i)))
            .collect();
        let bound = 1.0 / n as f64;
        let sigma = binomial_sigma(bound, cfg.settle_samples);

        let halving_violations =
            trials.iter().filter(|t| !t.halving_ok).count() as f64 / cfg.settle_samples as f64;
        checks.push(LemmaCheck {
            name: "settled-majority-violation-rate".into(),
            observed: halving_violations,
            bound,
            sigma,
            pass: halving_violations <= bound + 3.0 * sigma,
            detail: format!("m_bar {m_bar:.1}; full set, 3 random halves and the recursion tested"),
        });

        let weight_violations =
            trials.iter().filter(|t| !t.weight_bound_ok).count() as f64 / cfg.settle_samples as f64;
        checks.push(LemmaCheck {
            name: "uncovered-pair-weight-violation-rate".into(),
            observed: weight_violations,
            bound,
            sigma,
            pass: weight_violations <= bound + 3.0 * sigma,
            detail: format!(
                "cap 27 n^eps log2 n = {:.1} common neighbors",
                27.0 * (n as f64).powf(cfg.settle_eps) * (n as f64).log2()
            ),
        });
    }

    // Edge-count floor: every triangle subset drawn from a batch of
    // instances satisfies |edges covered| >= (sqrt 2 / 3) |subset|^(2/3).
    {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 103));
        let mut tested = 0u64;
        let mut violations = 0u64;
        for _ in 0..cfg.cover_subsets {
            let n = rng.random_range(6..30usize);
            let g = gen_gnp(n, rng.random_range(0.3..0.9), rng.random());
            let all: Vec<Triangle> = g.enumerate_triangles().iter().collect();
            let keep = rng.random_range(0.1..1.0f64);
            let subset: TriangleSet =
                all.iter().copied().filter(|_| rng.random_bool(keep)).collect();
            let cover = edge_cover(&subset);
            tested += 1;
            if (cover.len() as f64) < rivin_edge_bound(subset.len()) {
                violations += 1;
            }
        }
        checks.push(LemmaCheck {
            name: "triangle-edge-floor".into(),
            observed: violations as f64,
            bound: 0.0,
            sigma: 0.0,
            pass: violations == 0,
            detail: format!("{tested} sampled triangle subsets; violations must be zero"),
        });
    }

    let passed = checks.iter().all(|c| c.pass);
    Ok(LemmaReport { config: cfg.clone(), checks, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_lemma_sweep_passes() {
        // Reduced sample counts keep this a smoke test; the acceptance
        // suite runs the full sizes.
        let cfg = LemmaConfig {
            hash_trials: 4000,
            capture_n: 20,
            capture_samples: 60,
            settle_n: 24,
            settle_samples: 40,
            cover_subsets: 40,
            ..Default::default()
        };
        let report = verify_lemmas(&cfg).unwrap();
        assert!(report.passed, "failing checks: {:#?}", report.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
        assert_eq!(report.checks.len(), 6);
    }
}
