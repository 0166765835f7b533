//! Seeded instance generators. All generators are pure functions of their
//! parameters and seed.

use super::{Graph, GraphError};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Erdős–Rényi `G(n, p)`: every one of the `n(n-1)/2` vertex pairs becomes
/// an edge independently with probability `p`.
pub fn gen_gnp(n: usize, p: f64, seed: u64) -> Graph {
    assert!(n >= 1, "need at least one vertex");
    assert!((0.0..=1.0).contains(&p), "p must lie in [0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for j in 0..n as u32 {
        for k in (j + 1)..n as u32 {
            if rng.random_bool(p) {
                edges.push((j, k));
            }
        }
    }
    Graph::from_edges(n, edges).expect("generator never emits invalid edges")
}

/// Planted instance families targeting specific triangle structure.
///
/// Conventions the tests rely on:
/// - `HeavyEdge` places the designated edge at `{0, 1}` and wires vertices
///   `2..2+min_common` to both endpoints, so `{0, 1}` has at least
///   `min_common` common neighbors. Remaining pairs appear with probability
///   `background`.
/// - `SparseTriangles` plants triangle `i` on vertices `{3i, 3i+1, 3i+2}`.
///   No other edge touches a planted vertex, so each planted edge lies in
///   exactly one triangle; the rest of the graph is `G(n-3t, background)`.
/// - `TriangleFree` is a random bipartite graph between the lower and upper
///   halves of the vertex range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlantedKind {
    HeavyEdge { min_common: usize, background: f64 },
    SparseTriangles { count: usize, background: f64 },
    TriangleFree { density: f64 },
}

pub fn gen_planted(n: usize, kind: PlantedKind, seed: u64) -> Result<Graph, GraphError> {
    if n < 3 {
        return Err(GraphError::Infeasible(format!("need n >= 3, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    match kind {
        PlantedKind::HeavyEdge { min_common, background } => {
            check_prob(background)?;
            if min_common + 2 > n {
                return Err(GraphError::Infeasible(format!(
                    "heavy edge with {min_common} common neighbors needs {} vertices, have {n}",
                    min_common + 2
                )));
            }
            edges.push((0, 1));
            for w in 2..(2 + min_common) as u32 {
                edges.push((0, w));
                edges.push((1, w));
            }
            let mut have: std::collections::BTreeSet<(u32, u32)> = edges.iter().copied().collect();
            for j in 0..n as u32 {
                for k in (j + 1)..n as u32 {
                    if !have.contains(&(j, k)) && rng.random_bool(background) {
                        have.insert((j, k));
                        edges.push((j, k));
                    }
                }
            }
        }
        PlantedKind::SparseTriangles { count, background } => {
            check_prob(background)?;
            if 3 * count > n {
                return Err(GraphError::Infeasible(format!(
                    "{count} vertex-disjoint triangles need {} vertices, have {n}",
                    3 * count
                )));
            }
            for i in 0..count as u32 {
                let base = 3 * i;
                edges.push((base, base + 1));
                edges.push((base, base + 2));
                edges.push((base + 1, base + 2));
            }
            let first_free = 3 * count as u32;
            for j in first_free..n as u32 {
                for k in (j + 1)..n as u32 {
                    if rng.random_bool(background) {
                        edges.push((j, k));
                    }
                }
            }
        }
        PlantedKind::TriangleFree { density } => {
            check_prob(density)?;
            let half = (n / 2) as u32;
            for j in 0..half {
                for k in half..n as u32 {
                    if rng.random_bool(density) {
                        edges.push((j, k));
                    }
                }
            }
        }
    }
    Graph::from_edges(n, edges)
}

fn check_prob(p: f64) -> Result<(), GraphError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(GraphError::Infeasible(format!("probability {p} outside [0, 1]")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Triangle;

    #[test]
    fn gnp_extremes() {
        let empty = gen_gnp(4, 0.0, 7);
        assert_eq!(empty.edge_count(), 0);
        let complete = gen_gnp(4, 1.0, 7);
        assert_eq!(complete.edge_count(), 6);
    }

    #[test]
    fn gnp_edge_count_is_binomial() {
        // 2016 pairs at p = 1/2: mean 1008, sigma = sqrt(2016/4) ≈ 22.45.
        let g = gen_gnp(64, 0.5, 1);
        let mean = 1008.0;
        let sigma = (2016.0f64 * 0.25).sqrt();
        let m = g.edge_count() as f64;
        assert!((m - mean).abs() <= 5.0 * sigma, "edge count {m} too far from {mean}");
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_gnp(30, 0.4, 42);
        let b = gen_gnp(30, 0.4, 42);
        assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
        let c = gen_gnp(30, 0.4, 43);
        assert_ne!(a.edges().collect::<Vec<_>>(), c.edges().collect::<Vec<_>>());

        let kind = PlantedKind::SparseTriangles { count: 3, background: 0.2 };
        let p1 = gen_planted(20, kind, 5).unwrap();
        let p2 = gen_planted(20, kind, 5).unwrap();
        assert_eq!(p1.edges().collect::<Vec<_>>(), p2.edges().collect::<Vec<_>>());
    }

    #[test]
    fn triangle_free_is_triangle_free() {
        let g = gen_planted(10, PlantedKind::TriangleFree { density: 0.5 }, 3).unwrap();
        assert!(g.enumerate_triangles().is_empty());
    }

    #[test]
    fn sparse_triangles_contains_planted() {
        let g = gen_planted(
            30,
            PlantedKind::SparseTriangles { count: 4, background: 0.1 },
            5,
        )
        .unwrap();
        let tris = g.enumerate_triangles();
        assert!(tris.len() >= 4);
        for i in 0..4 {
            assert!(tris.contains(&Triangle::new(3 * i, 3 * i + 1, 3 * i + 2)));
        }
        // Planted edges live in exactly one triangle each.
        assert_eq!(g.common_neighbors_count(0, 1).unwrap(), 1);
    }

    #[test]
    fn heavy_edge_reaches_requested_weight() {
        let g = gen_planted(20, PlantedKind::HeavyEdge { min_common: 10, background: 0.1 }, 2).unwrap();
        assert!(g.common_neighbors_count(0, 1).unwrap() >= 10);
    }

    #[test]
    fn infeasible_parameters_are_reported() {
        assert!(matches!(
            gen_planted(10, PlantedKind::SparseTriangles { count: 4, background: 0.0 }, 1),
            Err(GraphError::Infeasible(_))
        ));
        assert!(matches!(
            gen_planted(5, PlantedKind::HeavyEdge { min_common: 10, background: 0.0 }, 1),
            Err(GraphError::Infeasible(_))
        ));
    }
}
