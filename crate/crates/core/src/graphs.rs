//! Undirected weighted graphs and the topologies used throughout the crate.
//!
//! Node indexing for the clique-based generators: clique `k` (0-based) holds
//! nodes `k*s .. (k+1)*s - 1` for clique size `s`, and bridge `k` joins the
//! last node of clique `k` to the first node of clique `k+1`. For the plain
//! barbell the bridge is therefore `(s-1, s)`.
//!
//! The small-world generator starts from the cycle `0-1-...-(n-1)-0` and adds
//! uniformly random distinct chords until the requested edge count is reached.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::linalg::Matrix;
use crate::{rng, Error, Result};

/// Largest node count accepted anywhere dense `n x n` matrices are built.
pub const MAX_NODES: usize = 2000;

/// Undirected graph with strictly positive edge weights (conductances).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    /// Builds a graph from an edge list. Endpoints may be given in either
    /// order; they are stored as `(i, j, w)` with `i < j`.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut list = Vec::new();
        let mut adj = vec![Vec::new(); n];
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::param(format!(
                    "edge ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::param(format!("self-loop at node {a}")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::param(format!(
                    "edge ({a}, {b}) has non-positive or non-finite weight {w}"
                )));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if adj[i].iter().any(|&(k, _)| k == j) {
                return Err(Error::param(format!("duplicate edge ({i}, {j})")));
            }
            adj[i].push((j, w));
            adj[j].push((i, w));
            list.push((i, j, w));
        }
        for nb in &mut adj {
            nb.sort_by_key(|&(k, _)| k);
        }
        list.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        Ok(WeightedGraph { n, edges: list, adj })
    }

    /// Graph with all weights equal to one.
    pub fn unweighted(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::new(n, edges.into_iter().map(|(i, j)| (i, j, 1.0)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j, w)` with `i < j`, sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Neighbors of `i` with edge weights, sorted by neighbor index.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    /// Number of neighbors (unweighted degree).
    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn weighted_degree(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.adj
            .get(i)?
            .binary_search_by_key(&j, |&(k, _)| k)
            .ok()
            .map(|pos| self.adj[i][pos].1)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.weight(i, j).is_some()
    }

    pub fn is_unweighted(&self) -> bool {
        self.edges.iter().all(|&(_, _, w)| w == 1.0)
    }

    /// Copy of the graph with edge `{i, j}` removed.
    pub fn without_edge(&self, i: usize, j: usize) -> Result<Self> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if !self.has_edge(a, b) {
            return Err(Error::param(format!("no edge ({a}, {b}) to remove")));
        }
        Self::new(
            self.n,
            self.edges.iter().copied().filter(|&(x, y, _)| (x, y) != (a, b)),
        )
    }
}

/// Topology families understood by [`generate_graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphKind {
    Complete,
    Barbell,
    CBarbell,
    SmallWorld,
    /// Loaded from an edge-list file; only the IO layer can build these.
    FromFile,
}

impl GraphKind {
    pub fn name(self) -> &'static str {
        match self {
            GraphKind::Complete => "complete",
            GraphKind::Barbell => "barbell",
            GraphKind::CBarbell => "c_barbell",
            GraphKind::SmallWorld => "small_world",
            GraphKind::FromFile => "from_file",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "complete" => GraphKind::Complete,
            "barbell" => GraphKind::Barbell,
            "c_barbell" | "c-barbell" | "cbarbell" => GraphKind::CBarbell,
            "small_world" | "small-world" | "smallworld" => GraphKind::SmallWorld,
            "from_file" | "file" => GraphKind::FromFile,
            _ => return None,
        })
    }
}

/// Parameters of a generated graph. Fields irrelevant to `kind` are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphSpec {
    pub kind: GraphKind,
    pub clique_size: usize,
    pub clique_count: usize,
    pub node_count: usize,
    pub edge_count: usize,
    pub seed: u64,
}

impl GraphSpec {
    pub fn complete(n: usize) -> Self {
        GraphSpec {
            kind: GraphKind::Complete,
            clique_size: n,
            clique_count: 1,
            node_count: n,
            edge_count: n * n.saturating_sub(1) / 2,
            seed: 0,
        }
    }

    pub fn barbell(clique_size: usize) -> Self {
        GraphSpec {
            kind: GraphKind::Barbell,
            clique_size,
            clique_count: 2,
            node_count: 2 * clique_size,
            edge_count: clique_size * clique_size.saturating_sub(1) + 1,
            seed: 0,
        }
    }

    pub fn c_barbell(clique_size: usize, clique_count: usize) -> Self {
        GraphSpec {
            kind: GraphKind::CBarbell,
            clique_size,
            clique_count,
            node_count: clique_size * clique_count,
            edge_count: clique_count * clique_size * clique_size.saturating_sub(1) / 2
                + clique_count.saturating_sub(1),
            seed: 0,
        }
    }

    pub fn small_world(n: usize, m: usize, seed: u64) -> Self {
        GraphSpec {
            kind: GraphKind::SmallWorld,
            clique_size: 0,
            clique_count: 1,
            node_count: n,
            edge_count: m,
            seed,
        }
    }

    /// Small-world graph at the standard density `m = floor(0.2 (n^2 - n))`,
    /// raised to `n` when that is too sparse for the cycle base.
    pub fn small_world_dense(n: usize, seed: u64) -> Self {
        let m = (2 * (n * n - n)) / 10;
        Self::small_world(n, m.max(n), seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.clique_count < 1 {
            return Err(Error::param("clique_count must be at least 1"));
        }
        match self.kind {
            GraphKind::Complete => {
                if self.node_count < 1 {
                    return Err(Error::param("complete graph needs at least one node"));
                }
                check_size(self.node_count)
            }
            GraphKind::Barbell | GraphKind::CBarbell => {
                if self.clique_size < 2 {
                    return Err(Error::param("clique_size must be at least 2"));
                }
                let c = if self.kind == GraphKind::Barbell {
                    2
                } else {
                    self.clique_count
                };
                check_size(self.clique_size.saturating_mul(c))
            }
            GraphKind::SmallWorld => {
                let n = self.node_count;
                if n < 3 {
                    return Err(Error::param("small_world needs n >= 3 for its cycle base"));
                }
                check_size(n)?;
                if self.edge_count < n {
                    return Err(Error::param(format!(
                        "small_world needs m >= n (got m = {}, n = {n})",
                        self.edge_count
                    )));
                }
                if self.edge_count > n * (n - 1) / 2 {
                    return Err(Error::param(format!(
                        "m = {} exceeds the complete-graph bound n(n-1)/2 = {}",
                        self.edge_count,
                        n * (n - 1) / 2
                    )));
                }
                Ok(())
            }
            GraphKind::FromFile => Err(Error::param(
                "from_file graphs are loaded by the IO layer, not generated",
            )),
        }
    }
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_NODES {
        Err(Error::param(format!(
            "{n} nodes exceeds the dense-matrix limit of {MAX_NODES}"
        )))
    } else {
        Ok(())
    }
}

/// Builds the graph described by `spec`. All weights are one.
pub fn generate_graph(spec: &GraphSpec) -> Result<WeightedGraph> {
    spec.validate()?;
    let g = match spec.kind {
        GraphKind::Complete => {
            let n = spec.node_count;
            WeightedGraph::unweighted(n, clique_edges(0, n))?
        }
        GraphKind::Barbell => c_barbell(spec.clique_size, 2)?,
        GraphKind::CBarbell => c_barbell(spec.clique_size, spec.clique_count)?,
        GraphKind::SmallWorld => small_world(spec.node_count, spec.edge_count, spec.seed)?,
        GraphKind::FromFile => unreachable!("rejected by validate"),
    };
    if !is_connected(&g) {
        return Err(Error::Disconnected);
    }
    Ok(g)
}

fn clique_edges(start: usize, size: usize) -> impl Iterator<Item = (usize, usize)> {
    (start..start + size).flat_map(move |i| (i + 1..start + size).map(move |j| (i, j)))
}

fn c_barbell(s: usize, c: usize) -> Result<WeightedGraph> {
    let cliques = (0..c).flat_map(|k| clique_edges(k * s, s));
    let bridges = (1..c).map(|k| (k * s - 1, k * s));
    WeightedGraph::unweighted(s * c, cliques.chain(bridges))
}

fn small_world(n: usize, m: usize, seed: u64) -> Result<WeightedGraph> {
    let cycle = (0..n).map(|i| {
        let j = (i + 1) % n;
        if i < j {
            (i, j)
        } else {
            (j, i)
        }
    });
    let mut chords: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| j != i + 1 && !(i == 0 && j == n - 1))
        .collect();
    let extra = m - n;
    let mut rng = rng::seeded(seed);
    let (picked, _) = chords.partial_shuffle(&mut rng, extra);
    WeightedGraph::unweighted(n, cycle.chain(picked.iter().copied()))
}

/// Bridge edges `(last node of clique k, first node of clique k+1)`.
pub fn c_barbell_bridges(clique_size: usize, clique_count: usize) -> Vec<(usize, usize)> {
    (1..clique_count)
        .map(|k| (k * clique_size - 1, k * clique_size))
        .collect()
}

/// Weighted Laplacian `L = D - A`.
pub fn laplacian(g: &WeightedGraph) -> Matrix {
    let mut l = Matrix::zeros(g.n());
    for &(i, j, w) in g.edges() {
        l[(i, j)] -= w;
        l[(j, i)] -= w;
        l[(i, i)] += w;
        l[(j, j)] += w;
    }
    l
}

fn bfs(g: &WeightedGraph, src: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.n()];
    let mut queue = VecDeque::new();
    dist[src] = Some(0);
    queue.push_back(src);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap_or(0);
        for &(v, _) in g.neighbors(u) {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

pub fn is_connected(g: &WeightedGraph) -> bool {
    g.n() == 0 || bfs(g, 0).iter().all(Option::is_some)
}

/// Largest hop distance over all node pairs; weights are ignored.
pub fn diameter(g: &WeightedGraph) -> Result<usize> {
    let mut best = 0;
    for s in 0..g.n() {
        for d in bfs(g, s) {
            best = best.max(d.ok_or(Error::Disconnected)?);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn barbell_shape() {
        let g = generate_graph(&GraphSpec::barbell(6)).unwrap();
        assert_eq!(g.n(), 12);
        assert_eq!(g.m(), 31);
        let crossing: Vec<_> = g
            .edges()
            .iter()
            .filter(|&&(i, j, _)| (i < 6) != (j < 6))
            .collect();
        assert_eq!(crossing.len(), 1);
        assert_eq!((crossing[0].0, crossing[0].1), (5, 6));
    }

    #[test]
    fn c_barbell_shape() {
        let g = generate_graph(&GraphSpec::c_barbell(4, 3)).unwrap();
        assert_eq!(g.n(), 12);
        assert_eq!(g.m(), 20);
        assert_eq!(diameter(&g).unwrap(), 5);
        // Interior clique: both connector nodes have degree equal to the clique size.
        assert_eq!(g.degree(4), 4);
        assert_eq!(g.degree(7), 4);
        assert_eq!(g.degree(5), 3);
    }

    #[test]
    fn c_barbell_with_two_cliques_is_the_barbell() {
        for s in 2..8 {
            let a = generate_graph(&GraphSpec::barbell(s)).unwrap();
            let b = generate_graph(&GraphSpec::c_barbell(s, 2)).unwrap();
            assert_eq!(a.edges(), b.edges());
        }
    }

    #[test]
    fn small_world_density_and_determinism() {
        let spec = GraphSpec::small_world_dense(20, 99);
        assert_eq!(spec.edge_count, 76);
        let g = generate_graph(&spec).unwrap();
        assert_eq!(g.m(), 76);
        assert!(is_connected(&g));
        assert_eq!(g, generate_graph(&spec).unwrap());
        let other = generate_graph(&GraphSpec::small_world(20, 76, 100)).unwrap();
        assert_ne!(g.edges(), other.edges());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate_graph(&GraphSpec::small_world(10, 46, 0)).is_err());
        assert!(generate_graph(&GraphSpec::small_world(10, 9, 0)).is_err());
        assert!(generate_graph(&GraphSpec::barbell(1)).is_err());
        assert!(generate_graph(&GraphSpec::c_barbell(3, 0)).is_err());
        assert!(generate_graph(&GraphSpec::complete(MAX_NODES + 1)).is_err());
        let mut spec = GraphSpec::complete(3);
        spec.kind = GraphKind::FromFile;
        assert!(generate_graph(&spec).is_err());
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(WeightedGraph::unweighted(3, [(0, 0)]).is_err());
        assert!(WeightedGraph::unweighted(3, [(0, 1), (1, 0)]).is_err());
        assert!(WeightedGraph::unweighted(3, [(0, 3)]).is_err());
        assert!(WeightedGraph::new(3, [(0, 1, 0.0)]).is_err());
        assert!(WeightedGraph::new(3, [(0, 1, f64::NAN)]).is_err());
    }

    #[test]
    fn laplacian_examples() {
        let k3 = generate_graph(&GraphSpec::complete(3)).unwrap();
        let l = laplacian(&k3);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(l[(i, j)], if i == j { 2.0 } else { -1.0 });
            }
        }
        let path = WeightedGraph::unweighted(3, [(0, 1), (1, 2)]).unwrap();
        let want = [1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0];
        assert_eq!(laplacian(&path).as_slice(), &want);
    }

    #[test]
    fn diameter_and_connectivity() {
        for n in 2..7 {
            let g = generate_graph(&GraphSpec::complete(n)).unwrap();
            assert_eq!(diameter(&g).unwrap(), 1);
        }
        for s in 2..7 {
            let g = generate_graph(&GraphSpec::barbell(s)).unwrap();
            assert_eq!(diameter(&g).unwrap(), 3);
            assert!(is_connected(&g));
        }
        let triangles =
            WeightedGraph::unweighted(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        assert!(!is_connected(&triangles));
        assert_eq!(diameter(&triangles), Err(Error::Disconnected));
        let single = WeightedGraph::unweighted(1, []).unwrap();
        assert!(is_connected(&single));
    }

    #[test]
    fn weights_are_symmetric() {
        let g = WeightedGraph::new(4, [(2, 0, 0.5), (1, 3, 2.0)]).unwrap();
        assert_eq!(g.weight(0, 2), Some(0.5));
        assert_eq!(g.weight(2, 0), Some(0.5));
        assert_eq!(g.weight(0, 1), None);
        assert_eq!(g.edges()[0], (0, 2, 0.5));
        let h = g.without_edge(3, 1).unwrap();
        assert_eq!(h.m(), 1);
        assert!(g.without_edge(0, 1).is_err());
    }

    proptest! {
        #[test]
        fn generated_graphs_are_simple_and_connected(n in 3usize..40, frac in 0.0f64..1.0, seed: u64) {
            let max = n * (n - 1) / 2;
            let m = n + ((max - n) as f64 * frac) as usize;
            let g = generate_graph(&GraphSpec::small_world(n, m, seed)).unwrap();
            prop_assert_eq!(g.m(), m);
            prop_assert!(is_connected(&g));
            let l = laplacian(&g);
            for s in l.row_sums() {
                prop_assert_eq!(s, 0.0);
            }
            prop_assert!(g.edges().iter().all(|&(i, j, w)| i < j && w == 1.0));
        }

        #[test]
        fn laplacian_has_rank_n_minus_one(s in 2usize..6, c in 1usize..4) {
            let g = generate_graph(&GraphSpec::c_barbell(s, c)).unwrap();
            let ev = crate::linalg::symmetric_eigenvalues(&laplacian(&g)).unwrap();
            let zeros = ev.iter().filter(|v| v.abs() < 1e-9).count();
            prop_assert_eq!(zeros, 1);
            prop_assert!(ev[0] > -1e-9);
        }
    }
}
