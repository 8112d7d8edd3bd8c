//! Joint cumulants of degree indicators via connected permutation sums,
//! with the moment/cumulant partition calculus as an independent oracle.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::degree::{degree_pmf_joint, good_stars, DegreeQuery, DEFAULT_MAX_ENUM_JOINT};
use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, FiniteGraph, VertexId};
use crate::linalg::Matrix;
use crate::perm::DEFAULT_MAX_PERM;
use crate::scalar::{binomial, parity_sign, Scalar};
use crate::transfer::TransferMatrix;

/// Largest total number of star edges over which subsets are enumerated.
pub const DEFAULT_MAX_EDGES: usize = 22;
/// Largest index set handed to the partition calculus.
pub const MAX_PARTITION_INDEX: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CumulantOptions {
    /// Connected sums over at most this many edges enumerate permutations;
    /// larger ones use the partition-determinant identity.
    pub max_perm: usize,
    pub max_edges: usize,
}

impl Default for CumulantOptions {
    fn default() -> Self {
        CumulantOptions {
            max_perm: DEFAULT_MAX_PERM,
            max_edges: DEFAULT_MAX_EDGES,
        }
    }
}

/// Points `v` with target degrees `k_v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CumulantQuery {
    pub points: Vec<(VertexId, usize)>,
}

impl CumulantQuery {
    pub fn new(points: Vec<(VertexId, usize)>) -> Self {
        CumulantQuery { points }
    }

    pub fn vertices(&self) -> Vec<VertexId> {
        self.points.iter().map(|p| p.0).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidInput("empty cumulant query".into()));
        }
        for (i, &(v, k)) in self.points.iter().enumerate() {
            if k == 0 {
                return Err(Error::InvalidInput(format!("degree at vertex {v} must be at least 1")));
            }
            if self.points[..i].iter().any(|p| p.0 == v) {
                return Err(Error::InvalidInput(format!("vertex {v} repeated")));
            }
        }
        Ok(())
    }
}

/// A field `Σ_{E ⊆ edges} weights[|E|] Π_{e∈E} ζ(e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBlock<T> {
    pub edges: Vec<DirectedEdge>,
    pub weights: Vec<T>,
}

impl<T: Scalar> WeightedBlock<T> {
    /// `X^{(k)} Y` over `edges`: weight `(-1)^{j-k} C(j,k)` for `j ≥ k`.
    pub fn degree_indicator(edges: Vec<DirectedEdge>, k: usize) -> Self {
        let weights = (0..=edges.len())
            .map(|j| {
                if j < k {
                    T::zero()
                } else {
                    parity_sign::<T>(j - k) * binomial::<T>(j, k)
                }
            })
            .collect();
        WeightedBlock { edges, weights }
    }

    /// `ζ(e)` when `present`, else `1 - ζ(e)`.
    pub fn edge_indicator(e: DirectedEdge, present: bool) -> Self {
        let weights = if present {
            vec![T::zero(), T::one()]
        } else {
            vec![T::one(), -T::one()]
        };
        WeightedBlock {
            edges: vec![e],
            weights,
        }
    }
}

/// Restricted-growth enumeration of the set partitions of `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionLattice {
    n: usize,
    partitions: Vec<Vec<Vec<usize>>>,
}

impl PartitionLattice {
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_PARTITION_INDEX {
            return Err(Error::guard("partition index size", n, MAX_PARTITION_INDEX));
        }
        let mut partitions = Vec::new();
        let mut code = vec![0usize; n];
        fn go(i: usize, max: usize, code: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
            if i == code.len() {
                let blocks = if code.is_empty() { 0 } else { max + 1 };
                let mut p = vec![Vec::new(); blocks];
                for (x, &b) in code.iter().enumerate() {
                    p[b].push(x);
                }
                out.push(p);
                return;
            }
            let top = if i == 0 { 0 } else { max + 1 };
            for b in 0..=top {
                code[i] = b;
                go(i + 1, max.max(b), code, out);
            }
        }
        go(0, 0, &mut code, &mut partitions);
        Ok(PartitionLattice { n, partitions })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn partitions(&self) -> &[Vec<Vec<usize>>] {
        &self.partitions
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }
}

/// `(|π|-1)! (-1)^{|π|-1}`.
fn mobius<T: Scalar>(blocks: usize) -> T {
    let f: T = (1..blocks).map(T::from_usize_lossy).fold(T::one(), |a, b| a * b);
    parity_sign::<T>(blocks - 1) * f
}

/// Joint cumulant of `A = 0..n` from a moment oracle over sorted index sets.
pub fn cumulant_from_moments<T: Scalar>(n: usize, mut moment: impl FnMut(&[usize]) -> Result<T>) -> Result<T> {
    let lattice = PartitionLattice::new(n)?;
    let mut cache: BTreeMap<Vec<usize>, T> = BTreeMap::new();
    let mut total = T::zero();
    for p in lattice.partitions() {
        let mut term = mobius::<T>(p.len());
        for b in p {
            let m = match cache.get(b) {
                Some(&m) => m,
                None => {
                    let m = moment(b)?;
                    cache.insert(b.clone(), m);
                    m
                }
            };
            term = term * m;
        }
        total = total + term;
    }
    Ok(total)
}

/// `E[Π_{i∈A} X_i] = Σ_π Π_B κ_B`, with `kappa` keyed by sorted blocks.
pub fn moments_from_cumulants<T: Scalar>(kappa: &BTreeMap<Vec<usize>, T>, a: &[usize]) -> Result<T> {
    let lattice = PartitionLattice::new(a.len())?;
    let mut total = T::zero();
    for p in lattice.partitions() {
        let mut term = T::one();
        for b in p {
            let mut key: Vec<usize> = b.iter().map(|&i| a[i]).collect();
            key.sort_unstable();
            let k = kappa
                .get(&key)
                .ok_or_else(|| Error::InvalidInput(format!("missing cumulant for block {key:?}")))?;
            term = term * *k;
        }
        total = total + term;
    }
    Ok(total)
}

/// Connected permutation sum `Σ_{τ∈S_co} sign(τ) Π M(f, τ(f))` for the
/// principal submatrix `k` whose rows are tagged with block `owner`.
pub fn connected_sum<T: Scalar>(k: &Matrix<T>, owner: &[usize], blocks: usize, max_perm: usize) -> T {
    let n = owner.len();
    if blocks == 1 {
        return k.det().expect("square");
    }
    let mut present = 0u32;
    for &o in owner {
        present |= 1 << o;
    }
    if present.count_ones() as usize != blocks {
        return T::zero();
    }
    if n <= max_perm {
        enumerate_connected_sum(k, owner, blocks)
    } else {
        partition_connected_sum(k, owner, blocks)
    }
}

fn enumerate_connected_sum<T: Scalar>(k: &Matrix<T>, owner: &[usize], blocks: usize) -> T {
    struct Ctx<'a, T> {
        k: &'a Matrix<T>,
        owner: &'a [usize],
        full: u8,
    }
    fn connected(adj: &[u8; 8], full: u8) -> bool {
        let mut seen = 1u8;
        let mut frontier = 1u8;
        while frontier != 0 {
            let mut next = 0;
            let mut f = frontier;
            while f != 0 {
                next |= adj[f.trailing_zeros() as usize];
                f &= f - 1;
            }
            frontier = next & !seen;
            seen |= next;
        }
        seen & full == full
    }
    // `adj` holds the block multigraph of the images chosen so far
    fn go<T: Scalar>(ctx: &Ctx<'_, T>, i: usize, used: u32, odd: bool, prod: T, adj: [u8; 8], acc: &mut T) {
        let n = ctx.owner.len();
        if i == n {
            if connected(&adj, ctx.full) {
                *acc = if odd { *acc - prod } else { *acc + prod };
            }
            return;
        }
        let a = ctx.owner[i];
        for j in 0..n {
            if used & (1 << j) != 0 {
                continue;
            }
            let x = ctx.k[(i, j)];
            if x == T::zero() {
                continue;
            }
            let b = ctx.owner[j];
            let mut next = adj;
            if a != b {
                next[a] |= 1 << b;
                next[b] |= 1 << a;
            }
            // inversions added: earlier images greater than j
            let inv = (used >> (j + 1)).count_ones();
            go(ctx, i + 1, used | (1 << j), odd ^ (inv % 2 == 1), prod * x, next, acc);
        }
    }
    debug_assert!(blocks <= 8);
    let ctx = Ctx {
        k,
        owner,
        full: ((1u16 << blocks) - 1) as u8,
    };
    let mut acc = T::zero();
    go(&ctx, 0, 0, false, T::one(), [0; 8], &mut acc);
    acc
}

/// `Σ_π (-1)^{|π|-1} (|π|-1)! Π_{B∈π} det(K_B)` over partitions of the blocks.
fn partition_connected_sum<T: Scalar>(k: &Matrix<T>, owner: &[usize], blocks: usize) -> T {
    let mut dets = vec![T::zero(); 1 << blocks];
    for (s, d) in dets.iter_mut().enumerate().skip(1) {
        let idx: Vec<usize> = (0..owner.len()).filter(|&i| s & (1 << owner[i]) != 0).collect();
        *d = k.principal(&idx).det().expect("square");
    }
    let lattice = PartitionLattice::new(blocks).expect("block count checked by caller");
    let mut total = T::zero();
    for p in lattice.partitions() {
        let mut term = mobius::<T>(p.len());
        for b in p {
            let mask: usize = b.iter().map(|&i| 1 << i).sum();
            term = term * dets[mask];
        }
        total = total + term;
    }
    total
}

/// Joint cumulant of weighted `ζ`-fields on pairwise disjoint edge sets.
pub fn block_cumulant<T: Scalar>(
    m: &TransferMatrix<T>,
    blocks: &[WeightedBlock<T>],
    opts: CumulantOptions,
) -> Result<T> {
    if blocks.is_empty() {
        return Err(Error::InvalidInput("no fields".into()));
    }
    if blocks.len() > MAX_PARTITION_INDEX {
        return Err(Error::guard("number of fields", blocks.len(), MAX_PARTITION_INDEX));
    }
    let mut edges = Vec::new();
    let mut owner = Vec::new();
    for (b, blk) in blocks.iter().enumerate() {
        if blk.weights.len() != blk.edges.len() + 1 {
            return Err(Error::Dimension("one weight per subset size expected".into()));
        }
        for &e in &blk.edges {
            if edges.iter().any(|&f: &DirectedEdge| f.undirected() == e.undirected()) {
                return Err(Error::InvalidInput(format!("edge {e} shared between fields")));
            }
            edges.push(e);
            owner.push(b);
        }
    }
    let total = edges.len();
    if total > opts.max_edges {
        return Err(Error::guard("total star edges", total, opts.max_edges));
    }
    let kernel = m.kernel(&edges)?;
    let nb = blocks.len();
    let block_mask: Vec<u64> = (0..nb)
        .map(|b| (0..total).filter(|&i| owner[i] == b).map(|i| 1u64 << i).sum())
        .collect();
    let terms: Vec<T> = (0u64..1u64 << total)
        .into_par_iter()
        .map(|mask| {
            let mut w = T::one();
            for (b, blk) in blocks.iter().enumerate() {
                w = w * blk.weights[(mask & block_mask[b]).count_ones() as usize];
                if w == T::zero() {
                    return T::zero();
                }
            }
            w * mask_connected_sum(&kernel, &owner, nb, mask, opts.max_perm)
        })
        .collect();
    Ok(terms.into_iter().fold(T::zero(), |a, b| a + b))
}

fn mask_connected_sum<T: Scalar>(kernel: &Matrix<T>, owner: &[usize], nb: usize, mask: u64, max_perm: usize) -> T {
    let idx: Vec<usize> = (0..owner.len()).filter(|&i| mask & (1 << i) != 0).collect();
    if idx.is_empty() {
        return if nb == 1 { T::one() } else { T::zero() };
    }
    let own: Vec<usize> = idx.iter().map(|&i| owner[i]).collect();
    connected_sum(&kernel.principal(&idx), &own, nb, max_perm)
}

/// `κ(X_v^{(k_v)} Y_v : v ∈ V)` for every profile `1 ≤ k_v ≤ deg(v)`, in
/// lexicographic order. Each subset's connected sum is computed once.
pub fn cumulant_all_profiles<T: Scalar>(
    m: &TransferMatrix<T>,
    graph: &FiniteGraph,
    vertices: &[VertexId],
    opts: CumulantOptions,
) -> Result<Vec<(Vec<usize>, T)>> {
    CumulantQuery::new(vertices.iter().map(|&v| (v, 1)).collect()).validate()?;
    let stars = good_stars(graph, vertices)?;
    let nb = stars.len();
    if nb > MAX_PARTITION_INDEX {
        return Err(Error::guard("number of fields", nb, MAX_PARTITION_INDEX));
    }
    let edges: Vec<DirectedEdge> = stars.iter().flatten().copied().collect();
    let owner: Vec<usize> = stars
        .iter()
        .enumerate()
        .flat_map(|(b, s)| std::iter::repeat_n(b, s.len()))
        .collect();
    let total = edges.len();
    if total > opts.max_edges {
        return Err(Error::guard("total star edges", total, opts.max_edges));
    }
    let kernel = m.kernel(&edges)?;
    let block_mask: Vec<u64> = (0..nb)
        .map(|b| (0..total).filter(|&i| owner[i] == b).map(|i| 1u64 << i).sum())
        .collect();
    let table: Vec<T> = (0u64..1u64 << total)
        .into_par_iter()
        .map(|mask| {
            if nb > 1 && block_mask.iter().any(|&b| mask & b == 0) {
                return T::zero();
            }
            mask_connected_sum(&kernel, &owner, nb, mask, opts.max_perm)
        })
        .collect();
    let mut out = Vec::new();
    let mut prof = vec![1usize; nb];
    loop {
        let weights: Vec<Vec<T>> = stars
            .iter()
            .zip(&prof)
            .map(|(s, &k)| WeightedBlock::<T>::degree_indicator(s.clone(), k).weights)
            .collect();
        let mut acc = T::zero();
        for (mask, &c) in table.iter().enumerate() {
            if c == T::zero() {
                continue;
            }
            let w = (0..nb).fold(T::one(), |w, b| {
                w * weights[b][(mask as u64 & block_mask[b]).count_ones() as usize]
            });
            acc = acc + w * c;
        }
        out.push((prof.clone(), acc));
        let mut i = nb;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            prof[i] += 1;
            if prof[i] <= stars[i].len() {
                break;
            }
            prof[i] = 1;
        }
    }
}

/// `κ(X_v^{(k_v)} Y_v : v ∈ V)` for a good set `V`.
pub fn cumulant_direct<T: Scalar>(
    m: &TransferMatrix<T>,
    graph: &FiniteGraph,
    q: &CumulantQuery,
    opts: CumulantOptions,
) -> Result<T> {
    q.validate()?;
    let stars = good_stars(graph, &q.vertices())?;
    let blocks: Vec<WeightedBlock<T>> = stars
        .into_iter()
        .zip(&q.points)
        .map(|(s, &(_, k))| WeightedBlock::degree_indicator(s, k))
        .collect();
    block_cumulant(m, &blocks, opts)
}

/// Same cumulant by Möbius inversion of joint degree probabilities.
pub fn cumulant_via_moments<T: Scalar>(m: &TransferMatrix<T>, graph: &FiniteGraph, q: &CumulantQuery) -> Result<T> {
    q.validate()?;
    if q.points.len() > 6 {
        return Err(Error::guard("cumulant oracle points", q.points.len(), 6));
    }
    good_stars(graph, &q.vertices())?;
    cumulant_from_moments(q.points.len(), |b| {
        let dq = DegreeQuery::new(b.iter().map(|&i| q.points[i]).collect());
        degree_pmf_joint(m, graph, &dq, DEFAULT_MAX_ENUM_JOINT)
    })
}

fn neighbor_blocks<T: Scalar>(
    graph: &FiniteGraph,
    v: VertexId,
    w: VertexId,
    k_v: usize,
    k_w: usize,
    edge_in_tree: bool,
) -> Result<Vec<WeightedBlock<T>>> {
    graph.check_vertex(v)?;
    graph.check_vertex(w)?;
    if v == w || !graph.adjacent(v, w) {
        return Err(Error::NotAdjacent(v, w));
    }
    let shared = DirectedEdge::new(v, w).undirected();
    let star = |x: VertexId| -> Result<Vec<DirectedEdge>> {
        Ok(graph
            .edge_star(x)?
            .edges
            .into_iter()
            .filter(|e| e.undirected() != shared)
            .collect())
    };
    let shift = usize::from(edge_in_tree);
    if k_v < shift || k_w < shift {
        return Err(Error::InvalidInput(
            "degree 0 is impossible when the shared edge is present".into(),
        ));
    }
    Ok(vec![
        WeightedBlock::degree_indicator(star(v)?, k_v - shift),
        WeightedBlock::degree_indicator(star(w)?, k_w - shift),
        WeightedBlock::edge_indicator(DirectedEdge::new(v, w), edge_in_tree),
    ])
}

/// `κ(X'_v Y'_v, X'_w Y'_w, ζ(vw))` when `edge_in_tree`, with the primed
/// fields on the stars minus `{v,w}` at levels `k-1`; otherwise the same
/// with levels `k` and `1 - ζ(vw)`.
#[allow(clippy::too_many_arguments)]
pub fn neighbor_cumulant<T: Scalar>(
    m: &TransferMatrix<T>,
    graph: &FiniteGraph,
    v: VertexId,
    w: VertexId,
    k_v: usize,
    k_w: usize,
    edge_in_tree: bool,
    opts: CumulantOptions,
) -> Result<T> {
    let blocks = neighbor_blocks(graph, v, w, k_v, k_w, edge_in_tree)?;
    block_cumulant(m, &blocks, opts)
}

/// `P(D_v = k_v, D_w = k_w, {v,w} ∈ T)` (or `∉ T`), assembled from the
/// cumulants of every sub-family of the three neighbour fields.
#[allow(clippy::too_many_arguments)]
pub fn neighbor_probability<T: Scalar>(
    m: &TransferMatrix<T>,
    graph: &FiniteGraph,
    v: VertexId,
    w: VertexId,
    k_v: usize,
    k_w: usize,
    edge_in_tree: bool,
    opts: CumulantOptions,
) -> Result<T> {
    let blocks = neighbor_blocks(graph, v, w, k_v, k_w, edge_in_tree)?;
    let mut kappa = BTreeMap::new();
    for s in 1u32..8 {
        let key: Vec<usize> = (0..3).filter(|&i| s & (1 << i) != 0).collect();
        let sub: Vec<WeightedBlock<T>> = key.iter().map(|&i| blocks[i].clone()).collect();
        kappa.insert(key, block_cumulant(m, &sub, opts)?);
    }
    moments_from_cumulants(&kappa, &[0, 1, 2])
}
