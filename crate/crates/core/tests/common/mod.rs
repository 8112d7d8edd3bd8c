//! Graph corpus and brute-force spanning-tree oracles shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ustlab::sampler::{for_each_tree, Network};
use ustlab::{DirectedEdge, FiniteGraph, VertexId};

pub const TREE_LIMIT: usize = 2_000_000;

pub struct Named {
    pub name: String,
    pub graph: FiniteGraph,
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
}

fn canonical(n: usize, mask: u32, pairs: &[(usize, usize)]) -> u32 {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = u32::MAX;
    let index = |u: usize, v: usize| pairs.iter().position(|&p| p == (u.min(v), u.max(v))).unwrap();
    let table: Vec<Vec<usize>> = (0..n)
        .map(|u| (0..n).map(|v| if u == v { 0 } else { index(u, v) }).collect())
        .collect();
    loop {
        let mut m = 0u32;
        for (i, &(u, v)) in pairs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                m |= 1 << table[perm[u]][perm[v]];
            }
        }
        best = best.min(m);
        if !next_permutation(&mut perm) {
            return best;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// One representative of every isomorphism class of connected graphs on `n` vertices.
pub fn connected_graphs(n: usize) -> Vec<FiniteGraph> {
    let ps = pairs(n);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << ps.len()) {
        // a connected graph has at least n - 1 edges
        if (mask.count_ones() as usize) + 1 < n {
            continue;
        }
        let edges: Vec<(usize, usize)> = (0..ps.len()).filter(|i| mask >> i & 1 == 1).map(|i| ps[i]).collect();
        let Ok(g) = FiniteGraph::from_edges(n, &edges, &[]) else {
            continue;
        };
        if seen.insert(canonical(n, mask, &ps)) {
            out.push(g);
        }
    }
    out
}

/// Seeded connected graphs: a random spanning path plus random extra edges.
pub fn random_connected(n: usize, count: usize, seed: u64) -> Vec<FiniteGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut order: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
            let mut set: BTreeSet<(usize, usize)> =
                order.windows(2).map(|w| (w[0].min(w[1]), w[0].max(w[1]))).collect();
            let p = rng.random_range(0.2..0.7);
            for e in pairs(n) {
                if rng.random_bool(p) {
                    set.insert(e);
                }
            }
            let edges: Vec<_> = set.into_iter().collect();
            FiniteGraph::from_edges(n, &edges, &[]).unwrap()
        })
        .collect()
}

/// Wired graphs: a free graph with some vertices declared boundary.
pub fn wired_samples() -> Vec<Named> {
    let mut out = Vec::new();
    let grid = |w: usize, h: usize| {
        let id = |x: usize, y: usize| y * w + x;
        let mut e = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if x + 1 < w {
                    e.push((id(x, y), id(x + 1, y)));
                }
                if y + 1 < h {
                    e.push((id(x, y), id(x, y + 1)));
                }
            }
        }
        let b: Vec<usize> = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .filter(|&(x, y)| x == 0 || y == 0 || x + 1 == w || y + 1 == h)
            .map(|(x, y)| id(x, y))
            .collect();
        FiniteGraph::from_edges(w * h, &e, &b).unwrap()
    };
    out.push(Named {
        name: "wired 4x4".into(),
        graph: grid(4, 4),
    });
    out.push(Named {
        name: "wired 5x4".into(),
        graph: grid(5, 4),
    });
    out.push(Named {
        name: "wired K5 (2 boundary)".into(),
        graph: FiniteGraph::from_edges(5, &pairs(5), &[3, 4]).unwrap(),
    });
    out.push(Named {
        name: "wired path".into(),
        graph: FiniteGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)], &[0, 4]).unwrap(),
    });
    out
}

/// All connected graphs on 2..=6 vertices up to isomorphism, with K_3..K_5,
/// C_4..C_6 and the 2x3, 3x3 grids.
pub fn corpus() -> Vec<Named> {
    let mut out = Vec::new();
    for n in 2..=6 {
        for (i, g) in connected_graphs(n).into_iter().enumerate() {
            out.push(Named {
                name: format!("n{n}#{i}"),
                graph: g,
            });
        }
    }
    out.extend(named_families());
    out
}

pub fn named_families() -> Vec<Named> {
    let mut out = Vec::new();
    for n in 3..=5 {
        out.push(Named {
            name: format!("K{n}"),
            graph: FiniteGraph::complete(n).unwrap(),
        });
    }
    for n in 4..=6 {
        out.push(Named {
            name: format!("C{n}"),
            graph: FiniteGraph::cycle(n).unwrap(),
        });
    }
    for (w, h) in [(2, 3), (3, 3)] {
        out.push(Named {
            name: format!("grid {w}x{h}"),
            graph: FiniteGraph::grid(w, h).unwrap(),
        });
    }
    out
}

/// Every spanning tree as an edge-indicator vector over `graph.edges()`.
pub struct Trees {
    pub net: Network,
    /// `slot[i]` is the network index of `graph.edges()[i]`, if any.
    pub slot: Vec<Option<usize>>,
    pub trees: Vec<Vec<bool>>,
}

impl Trees {
    pub fn new(graph: &FiniteGraph) -> Self {
        let net = Network::new(graph);
        let slot = graph.edges().iter().map(|&e| net.edge_index(e)).collect();
        let mut trees = Vec::new();
        for_each_tree(graph, TREE_LIMIT, |t| trees.push(t.to_vec())).unwrap();
        Trees { net, slot, trees }
    }

    fn idx(&self, e: DirectedEdge) -> usize {
        self.net.edge_index(e).expect("edge in network")
    }

    pub fn prob(&self, present: &[DirectedEdge], absent: &[DirectedEdge]) -> f64 {
        let inc: Vec<usize> = present.iter().map(|&e| self.idx(e)).collect();
        let exc: Vec<usize> = absent.iter().map(|&e| self.idx(e)).collect();
        let hits = self
            .trees
            .iter()
            .filter(|t| inc.iter().all(|&i| t[i]) && exc.iter().all(|&i| !t[i]))
            .count();
        hits as f64 / self.trees.len() as f64
    }

    pub fn degree_prob(&self, graph: &FiniteGraph, points: &[(VertexId, usize)]) -> f64 {
        let stars: Vec<(Vec<usize>, usize)> = points
            .iter()
            .map(|&(v, k)| {
                (
                    graph.edge_star(v).unwrap().edges.iter().map(|&e| self.idx(e)).collect(),
                    k,
                )
            })
            .collect();
        let hits = self
            .trees
            .iter()
            .filter(|t| stars.iter().all(|(s, k)| s.iter().filter(|&&i| t[i]).count() == *k))
            .count();
        hits as f64 / self.trees.len() as f64
    }
}

/// Interior vertices of a graph (all vertices when there is no boundary).
pub fn interior(graph: &FiniteGraph) -> Vec<VertexId> {
    graph.interior_vertices()
}
