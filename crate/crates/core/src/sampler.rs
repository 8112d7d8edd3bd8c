//! Wilson's algorithm and exhaustive spanning-tree enumeration.
//!
//! Both work on the wired network: all boundary vertices are glued into a
//! single root node (edges between two boundary vertices are dropped), which
//! is the graph whose uniform spanning tree the Dirichlet formulas describe.
//! Without a boundary the network is the graph itself.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, FiniteGraph, VertexId};
use crate::linalg::Matrix;
use crate::transfer::EdgeProbQuery;

pub const DEFAULT_MAX_TREES: usize = 1_000_000;
const CHAINS: usize = 64;

/// Multigraph on interior vertices plus one wired root.
#[derive(Debug, Clone)]
pub struct Network {
    node_of: Vec<usize>,
    nodes: usize,
    root: usize,
    /// Graph edges in natural orientation, indexed like `FiniteGraph::edges`.
    edges: Vec<DirectedEdge>,
    ends: Vec<(usize, usize)>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl Network {
    pub fn new(graph: &FiniteGraph) -> Self {
        let n = graph.vertex_count();
        let mut node_of = vec![0; n];
        let (nodes, root) = if graph.has_boundary() {
            let mut k = 0;
            for (v, slot) in node_of.iter_mut().enumerate() {
                if !graph.is_boundary(v) {
                    *slot = k;
                    k += 1;
                }
            }
            for v in graph.boundary_vertices() {
                node_of[v] = k;
            }
            (k + 1, k)
        } else {
            for (v, slot) in node_of.iter_mut().enumerate() {
                *slot = v;
            }
            (n, 0)
        };
        let mut edges = Vec::new();
        let mut ends = Vec::new();
        let mut adj = vec![Vec::new(); nodes];
        for &e in graph.edges() {
            let (a, b) = (node_of[e.tail], node_of[e.tip]);
            if a == b {
                continue;
            }
            let idx = edges.len();
            edges.push(e);
            ends.push((a, b));
            adj[a].push((b, idx));
            adj[b].push((a, idx));
        }
        Network {
            node_of,
            nodes,
            root,
            edges,
            ends,
            adj,
        }
    }

    /// Network node of a graph vertex (boundary vertices share the root).
    pub fn node(&self, v: VertexId) -> usize {
        self.node_of[v]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn edges(&self) -> &[DirectedEdge] {
        &self.edges
    }

    pub fn edge_index(&self, e: DirectedEdge) -> Option<usize> {
        let key = e.undirected();
        self.edges.iter().position(|f| f.undirected() == key)
    }

    /// Number of spanning trees by the matrix-tree theorem.
    pub fn tree_count(&self) -> f64 {
        let keep: Vec<usize> = (0..self.nodes).filter(|&v| v != self.root).collect();
        let mut pos = vec![usize::MAX; self.nodes];
        for (i, &v) in keep.iter().enumerate() {
            pos[v] = i;
        }
        let mut l = Matrix::<f64>::zeros(keep.len(), keep.len());
        for &(a, b) in &self.ends {
            for (x, y) in [(a, b), (b, a)] {
                if pos[x] != usize::MAX {
                    l[(pos[x], pos[x])] += 1.0;
                    if pos[y] != usize::MAX {
                        l[(pos[x], pos[y])] -= 1.0;
                    }
                }
            }
        }
        l.det().expect("square").round()
    }

    /// True iff `present` (indexed like [`edges`](Self::edges)) is a spanning tree.
    pub fn is_spanning_tree(&self, present: &[bool]) -> bool {
        if present.len() != self.edges.len() {
            return false;
        }
        let mut uf = UnionFind::new(self.nodes);
        let mut count = 0;
        for (i, &p) in present.iter().enumerate() {
            if p {
                let (a, b) = self.ends[i];
                if !uf.union(a, b) {
                    return false;
                }
                count += 1;
            }
        }
        count + 1 == self.nodes
    }
}

/// Spanning tree of the wired network, as a presence mask over its edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpanningTree {
    pub present: Vec<bool>,
}

impl SpanningTree {
    pub fn edge_count(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }

    pub fn edges(&self, net: &Network) -> Vec<DirectedEdge> {
        self.present
            .iter()
            .zip(net.edges())
            .filter(|(p, _)| **p)
            .map(|(_, e)| *e)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Calls `visit` on every spanning tree of the wired network exactly once.
pub fn for_each_tree(graph: &FiniteGraph, max_trees: usize, mut visit: impl FnMut(&[bool])) -> Result<usize> {
    let net = Network::new(graph);
    let count = net.tree_count();
    if count > max_trees as f64 {
        return Err(Error::guard("spanning tree count", count as usize, max_trees));
    }
    let m = net.edges.len();
    let mut present = vec![false; m];
    let mut excluded = vec![false; m];
    let mut found = 0;
    recurse(
        &net,
        0,
        &mut present,
        &mut excluded,
        &mut UnionFind::new(net.nodes),
        0,
        &mut |p| {
            found += 1;
            visit(p)
        },
    );
    debug_assert_eq!(found as f64, count);
    Ok(found)
}

fn recurse(
    net: &Network,
    i: usize,
    present: &mut Vec<bool>,
    excluded: &mut Vec<bool>,
    uf: &mut UnionFind,
    taken: usize,
    visit: &mut impl FnMut(&[bool]),
) {
    if taken + 1 == net.nodes {
        visit(present);
        return;
    }
    if i == net.edges.len() {
        return;
    }
    let (a, b) = net.ends[i];
    if uf.find(a) != uf.find(b) {
        let mut next = uf.clone();
        next.union(a, b);
        present[i] = true;
        recurse(net, i + 1, present, excluded, &mut next, taken + 1, visit);
        present[i] = false;
    }
    excluded[i] = true;
    if connected_without(net, excluded) {
        recurse(net, i + 1, present, excluded, uf, taken, visit);
    }
    excluded[i] = false;
}

fn connected_without(net: &Network, excluded: &[bool]) -> bool {
    let mut uf = UnionFind::new(net.nodes);
    let mut comps = net.nodes;
    for (i, &(a, b)) in net.ends.iter().enumerate() {
        if !excluded[i] && uf.union(a, b) {
            comps -= 1;
        }
    }
    comps == 1
}

/// All spanning trees, collected.
pub fn enumerate_trees(graph: &FiniteGraph, max_trees: usize) -> Result<Vec<SpanningTree>> {
    let mut out = Vec::new();
    for_each_tree(graph, max_trees, |p| out.push(SpanningTree { present: p.to_vec() }))?;
    Ok(out)
}

/// One uniform spanning tree, deterministic in `seed`.
pub fn wilson_sample(graph: &FiniteGraph, seed: u64) -> Result<SpanningTree> {
    if !graph.is_connected() {
        return Err(Error::Disconnected);
    }
    let net = Network::new(graph);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(wilson(&net, &mut rng))
}

fn wilson(net: &Network, rng: &mut ChaCha8Rng) -> SpanningTree {
    let n = net.nodes;
    let mut in_tree = vec![false; n];
    let mut next = vec![(usize::MAX, usize::MAX); n];
    let mut present = vec![false; net.edges.len()];
    in_tree[net.root] = true;
    for start in 0..n {
        let mut u = start;
        while !in_tree[u] {
            let nb = &net.adj[u];
            next[u] = nb[rng.random_range(0..nb.len())];
            u = next[u].0;
        }
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            present[next[u].1] = true;
            u = next[u].0;
        }
    }
    SpanningTree { present }
}

/// Event whose frequency is estimated by [`mc_estimate`].
#[derive(Debug, Clone, PartialEq)]
pub enum McQuery {
    Edges(EdgeProbQuery),
    /// `D_v = k_v` for all listed pairs.
    Degrees(Vec<(VertexId, usize)>),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SampleStats {
    pub samples: usize,
    pub hits: usize,
    pub estimate: f64,
    pub se: f64,
}

impl SampleStats {
    pub fn from_counts(samples: usize, hits: usize) -> Self {
        let p = hits as f64 / samples as f64;
        SampleStats {
            samples,
            hits,
            estimate: p,
            se: (p * (1.0 - p) / samples as f64).sqrt(),
        }
    }

    /// Distance from `exact` in standard errors (infinite if the SE is zero and they differ).
    pub fn sigmas(&self, exact: f64) -> f64 {
        let d = (self.estimate - exact).abs();
        if self.se > 0.0 {
            d / self.se
        } else if d < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

type Matcher = Box<dyn Fn(&[bool]) -> bool + Send + Sync>;

fn matcher(graph: &FiniteGraph, net: &Network, q: &McQuery) -> Result<Matcher> {
    let index = |e: DirectedEdge| {
        graph.directed(e.tail, e.tip)?;
        net.edge_index(e).ok_or(Error::UnknownEdge(e.tail, e.tip))
    };
    match q {
        McQuery::Edges(q) => {
            let inc = q.present.iter().map(|&e| index(e)).collect::<Result<Vec<_>>>()?;
            let exc = q.absent.iter().map(|&e| index(e)).collect::<Result<Vec<_>>>()?;
            Ok(Box::new(move |p| {
                inc.iter().all(|&i| p[i]) && exc.iter().all(|&i| !p[i])
            }))
        }
        McQuery::Degrees(pairs) => {
            let mut stars = Vec::new();
            for &(v, k) in pairs {
                let star = graph.edge_star(v)?;
                let idx = star.edges.iter().map(|&e| index(e)).collect::<Result<Vec<_>>>()?;
                stars.push((idx, k));
            }
            Ok(Box::new(move |p| {
                stars.iter().all(|(idx, k)| idx.iter().filter(|&&i| p[i]).count() == *k)
            }))
        }
    }
}

/// Monte Carlo frequency of `query` over `samples` Wilson trees.
///
/// Samples are split over a fixed number of chains, chain `c` using stream
/// `c` of the seeded generator, so results do not depend on the thread count.
pub fn mc_estimate(graph: &FiniteGraph, query: &McQuery, samples: usize, seed: u64) -> Result<SampleStats> {
    Ok(mc_estimate_many(graph, std::slice::from_ref(query), samples, seed)?[0])
}

/// Several queries evaluated on the same trees.
pub fn mc_estimate_many(
    graph: &FiniteGraph,
    queries: &[McQuery],
    samples: usize,
    seed: u64,
) -> Result<Vec<SampleStats>> {
    if samples == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    if !graph.is_connected() {
        return Err(Error::Disconnected);
    }
    let net = Network::new(graph);
    let matchers = queries
        .iter()
        .map(|q| matcher(graph, &net, q))
        .collect::<Result<Vec<_>>>()?;
    let chains = CHAINS.min(samples);
    let per_chain: Vec<Vec<usize>> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let quota = samples / chains + usize::from(c < samples % chains);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut hits = vec![0usize; matchers.len()];
            for _ in 0..quota {
                let t = wilson(&net, &mut rng);
                for (h, m) in hits.iter_mut().zip(&matchers) {
                    if m(&t.present) {
                        *h += 1;
                    }
                }
            }
            hits
        })
        .collect();
    Ok((0..queries.len())
        .map(|q| SampleStats::from_counts(samples, per_chain.iter().map(|h| h[q]).sum()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        assert_eq!(
            enumerate_trees(&FiniteGraph::complete(3).unwrap(), 100).unwrap().len(),
            3
        );
        assert_eq!(
            enumerate_trees(&FiniteGraph::complete(4).unwrap(), 100).unwrap().len(),
            16
        );
        assert_eq!(enumerate_trees(&FiniteGraph::cycle(4).unwrap(), 100).unwrap().len(), 4);
        assert_eq!(
            enumerate_trees(&FiniteGraph::grid(2, 2).unwrap(), 100).unwrap().len(),
            4
        );
    }

    #[test]
    fn count_matches_matrix_tree() {
        for g in [
            FiniteGraph::complete(5).unwrap(),
            FiniteGraph::grid(3, 3).unwrap(),
            FiniteGraph::build_grid(
                &crate::graph::LatticeSpec::square(),
                &crate::graph::Region::Rectangle { width: 2, height: 2 },
            )
            .unwrap(),
        ] {
            let net = Network::new(&g);
            let trees = enumerate_trees(&g, 100_000).unwrap();
            assert_eq!(trees.len() as f64, net.tree_count());
            assert!(trees.iter().all(|t| net.is_spanning_tree(&t.present)));
        }
    }

    #[test]
    fn guard_trips() {
        let g = FiniteGraph::complete(6).unwrap();
        assert!(enumerate_trees(&g, 100).unwrap_err().is_guard());
    }

    #[test]
    fn wilson_is_a_tree_and_deterministic() {
        let g = FiniteGraph::grid(4, 4).unwrap();
        let net = Network::new(&g);
        let a = wilson_sample(&g, 7).unwrap();
        let b = wilson_sample(&g, 7).unwrap();
        assert_eq!(a, b);
        assert!(net.is_spanning_tree(&a.present));
        assert_eq!(a.edge_count(), 15);
    }

    #[test]
    fn zero_samples_rejected() {
        let g = FiniteGraph::complete(3).unwrap();
        let q = McQuery::Edges(EdgeProbQuery::default());
        assert!(mc_estimate(&g, &q, 0, 1).is_err());
    }

    #[test]
    fn k3_edge_frequency() {
        let g = FiniteGraph::complete(3).unwrap();
        let q = McQuery::Edges(EdgeProbQuery::new(vec![DirectedEdge::new(0, 1)], vec![]));
        let s = mc_estimate(&g, &q, 20_000, 3).unwrap();
        assert!(s.sigmas(2.0 / 3.0) < 4.0, "{s:?}");
    }
}
