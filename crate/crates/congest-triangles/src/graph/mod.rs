//! Undirected simple graphs on dense vertex ids `0..n-1`, plus the static
//! quantities the triangle algorithms are measured against: the brute-force
//! triangle oracle, per-edge triangle counts, the heavy/light triangle split,
//! common-neighbor coverage queries and triangle edge covers.
//!
//! A [`Graph`] is immutable after construction and safe to query from many
//! threads.

mod gen;
mod io;

pub use gen::{gen_gnp, gen_planted, PlantedKind};
pub use io::{load_edge_list, save_edge_list};

use crate::bits::Bitset;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("pair {{{0}, {1}}} is not an edge")]
    NotAnEdge(u32, u32),
    #[error("vertex {0} out of range for {1} vertices")]
    VertexOutOfRange(u32, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(u32),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(u32, u32),
    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Undirected simple graph with sorted adjacency lists and per-vertex
/// neighbor bitsets for constant-time membership tests.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<u32>>,
    rows: Vec<Bitset>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph from an edge list, rejecting self-loops, duplicates
    /// and out-of-range endpoints.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let mut g = Graph {
            n,
            adj: vec![Vec::new(); n],
            rows: vec![Bitset::new(n); n],
            edge_count: 0,
        };
        for (j, k) in edges {
            g.add_edge(j, k)?;
        }
        for list in &mut g.adj {
            list.sort_unstable();
        }
        Ok(g)
    }

    fn add_edge(&mut self, j: u32, k: u32) -> Result<(), GraphError> {
        if j == k {
            return Err(GraphError::SelfLoop(j));
        }
        for v in [j, k] {
            if v as usize >= self.n {
                return Err(GraphError::VertexOutOfRange(v, self.n));
            }
        }
        if self.rows[j as usize].contains(k) {
            return Err(GraphError::DuplicateEdge(j.min(k), j.max(k)));
        }
        self.rows[j as usize].insert(k);
        self.rows[k as usize].insert(j);
        self.adj[j as usize].push(k);
        self.adj[k as usize].push(j);
        self.edge_count += 1;
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adj[v as usize].len()
    }

    /// Sorted neighbor list of `v`.
    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    pub fn neighbor_bits(&self, v: u32) -> &Bitset {
        &self.rows[v as usize]
    }

    pub fn has_edge(&self, j: u32, k: u32) -> bool {
        j != k && (j as usize) < self.n && self.rows[j as usize].contains(k)
    }

    /// Edges as pairs `(j, k)` with `j < k`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n as u32)
            .flat_map(move |j| self.adj[j as usize].iter().filter(move |&&k| k > j).map(move |&k| (j, k)))
    }

    /// Number of common neighbors of the endpoints of edge `{j, k}`, i.e.
    /// the number of triangles containing that edge. Errors when `{j, k}`
    /// is not an edge.
    pub fn common_neighbors_count(&self, j: u32, k: u32) -> Result<usize, GraphError> {
        if !self.has_edge(j, k) {
            return Err(GraphError::NotAnEdge(j, k));
        }
        Ok(self.pair_common_count(j, k))
    }

    /// `|N(j) ∩ N(l)|` for any pair of distinct vertices, edge or not.
    pub fn pair_common_count(&self, j: u32, l: u32) -> usize {
        self.rows[j as usize].intersection_count(&self.rows[l as usize])
    }

    /// Exhaustively lists every triangle; the ground truth the simulated
    /// algorithms are checked against.
    pub fn enumerate_triangles(&self) -> TriangleSet {
        let mut out = TriangleSet::new();
        for (j, k) in self.edges() {
            // Common neighbors above k close a triangle exactly once.
            for l in self.adj[j as usize].iter().copied().filter(|&l| l > k) {
                if self.rows[k as usize].contains(l) {
                    out.insert(Triangle::new(j, k, l));
                }
            }
        }
        out
    }

    /// Splits the triangles of the graph by the threshold `n^eps`: a
    /// triangle is heavy when one of its edges lies in at least `n^eps`
    /// triangles, light otherwise.
    pub fn classify_heavy(&self, eps: f64) -> HeavySplit {
        assert!((0.0..=1.0).contains(&eps), "eps must lie in [0, 1]");
        let threshold = (self.n as f64).powf(eps);
        let mut split = HeavySplit::default();
        for t in self.enumerate_triangles().iter() {
            let [a, b, c] = t.vertices();
            let heavy = [(a, b), (a, c), (b, c)]
                .iter()
                .any(|&(x, y)| self.pair_common_count(x, y) as f64 >= threshold);
            if heavy {
                split.heavy.insert(t);
            } else {
                split.light.insert(t);
            }
        }
        split
    }

    /// True when no vertex of `cover` is adjacent to both `j` and `l`,
    /// i.e. the pair `{j, l}` is left uncovered by every neighborhood in
    /// `cover`. Defined for all vertex pairs, not only edges.
    pub fn in_delta(&self, cover: &VertexSet, j: u32, l: u32) -> bool {
        assert!(j != l, "pair endpoints must be distinct");
        !self.rows[j as usize].intersects_both(&self.rows[l as usize], &cover.bits)
    }
}

/// An unordered triple of pairwise-adjacent vertices, stored sorted so that
/// equal triangles compare equal.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triangle([u32; 3]);

impl Triangle {
    pub fn new(a: u32, b: u32, c: u32) -> Self {
        assert!(a != b && b != c && a != c, "triangle vertices must be distinct");
        let mut v = [a, b, c];
        v.sort_unstable();
        Triangle(v)
    }

    pub fn vertices(&self) -> [u32; 3] {
        self.0
    }

    /// The three edges, each normalized `(lo, hi)`.
    pub fn edges(&self) -> [(u32, u32); 3] {
        let [a, b, c] = self.0;
        [(a, b), (a, c), (b, c)]
    }

    pub fn contains(&self, v: u32) -> bool {
        self.0.contains(&v)
    }
}

impl std::fmt::Debug for Triangle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{{}, {}, {}}}", self.0[0], self.0[1], self.0[2])
    }
}

/// A deduplicated set of triangles with deterministic (lexicographic) order.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct TriangleSet {
    set: BTreeSet<Triangle>,
}

impl TriangleSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, t: Triangle) -> bool {
        self.set.insert(t)
    }

    pub fn contains(&self, t: &Triangle) -> bool {
        self.set.contains(t)
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Triangle> + '_ {
        self.set.iter().copied()
    }

    pub fn union_with(&mut self, other: &TriangleSet) {
        self.set.extend(other.set.iter().copied());
    }

    pub fn is_subset_of(&self, other: &TriangleSet) -> bool {
        self.set.is_subset(&other.set)
    }

    /// True when each member's three pairs are edges of `g`.
    pub fn is_valid_for(&self, g: &Graph) -> bool {
        self.iter().all(|t| t.edges().iter().all(|&(a, b)| g.has_edge(a, b)))
    }

    /// Canonical text form: one `j k l` line per triangle with `j < k < l`,
    /// lexicographically sorted.
    pub fn to_canonical_lines(&self) -> String {
        let mut out = String::new();
        for t in self.iter() {
            let [a, b, c] = t.vertices();
            out.push_str(&format!("{a} {b} {c}\n"));
        }
        out
    }
}

impl FromIterator<Triangle> for TriangleSet {
    fn from_iter<I: IntoIterator<Item = Triangle>>(iter: I) -> Self {
        TriangleSet { set: iter.into_iter().collect() }
    }
}

/// Heavy/light partition of a graph's triangles.
#[derive(Clone, Default, Debug)]
pub struct HeavySplit {
    pub heavy: TriangleSet,
    pub light: TriangleSet,
}

/// A set of unordered vertex pairs.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct EdgeSubset {
    pairs: BTreeSet<(u32, u32)>,
}

impl EdgeSubset {
    pub fn insert(&mut self, j: u32, k: u32) -> bool {
        assert!(j != k);
        self.pairs.insert((j.min(k), j.max(k)))
    }

    pub fn contains(&self, j: u32, k: u32) -> bool {
        self.pairs.contains(&(j.min(k), j.max(k)))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.pairs.iter().copied()
    }
}

/// The edges appearing in at least one triangle of `r`.
pub fn edge_cover(r: &TriangleSet) -> EdgeSubset {
    let mut out = EdgeSubset::default();
    for t in r.iter() {
        for (a, b) in t.edges() {
            out.insert(a, b);
        }
    }
    out
}

/// Lower bound on the number of edges a graph with `t` triangles must have:
/// `(sqrt(2)/3) * t^(2/3)`.
pub fn rivin_edge_bound(triangles: usize) -> f64 {
    (2.0f64).sqrt() / 3.0 * (triangles as f64).powf(2.0 / 3.0)
}

/// A subset of the vertices, with cached cardinality.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VertexSet {
    bits: Bitset,
    count: usize,
}

impl VertexSet {
    pub fn empty(n: usize) -> Self {
        Self { bits: Bitset::new(n), count: 0 }
    }

    pub fn full(n: usize) -> Self {
        Self::from_indices(n, 0..n as u32)
    }

    pub fn from_indices<I: IntoIterator<Item = u32>>(n: usize, iter: I) -> Self {
        let bits = Bitset::from_indices(n, iter);
        let count = bits.count();
        Self { bits, count }
    }

    pub fn from_flags(flags: &[bool]) -> Self {
        Self::from_indices(
            flags.len(),
            flags.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i as u32),
        )
    }

    pub fn insert(&mut self, v: u32) {
        if !self.bits.contains(v) {
            self.bits.insert(v);
            self.count += 1;
        }
    }

    pub fn remove(&mut self, v: u32) {
        if self.bits.contains(v) {
            self.bits.remove(v);
            self.count -= 1;
        }
    }

    pub fn contains(&self, v: u32) -> bool {
        self.bits.contains(v)
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.bits.iter_ones()
    }

    pub fn bits(&self) -> &Bitset {
        &self.bits
    }

    pub fn is_subset_of(&self, other: &VertexSet) -> bool {
        self.bits.is_subset_of(&other.bits)
    }
}
