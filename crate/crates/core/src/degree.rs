//! Exact UST degree distributions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, FiniteGraph, VertexId};
use crate::scalar::{binomial, parity_sign, Scalar};
use crate::transfer::{clamp_probability, raw_edge_probability, TransferMatrix};

pub const DEFAULT_MAX_ENUM_JOINT: usize = 24;

/// Target degrees `k_v` for a list of vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeQuery {
    pub points: Vec<(VertexId, usize)>,
}

impl DegreeQuery {
    pub fn new(points: Vec<(VertexId, usize)>) -> Self {
        DegreeQuery { points }
    }

    pub fn vertices(&self) -> Vec<VertexId> {
        self.points.iter().map(|p| p.0).collect()
    }
}

/// `k ↦ P(D_v = k)` for `k = 1..=deg(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreePmf<T> {
    pub vertex: VertexId,
    pub probs: Vec<T>,
}

impl<T: Scalar> DegreePmf<T> {
    pub fn get(&self, k: usize) -> T {
        if k == 0 || k > self.probs.len() {
            T::zero()
        } else {
            self.probs[k - 1]
        }
    }

    pub fn total(&self) -> T {
        self.probs.iter().copied().sum()
    }

    pub fn mean(&self) -> T {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| T::from_usize_lossy(i + 1) * p)
            .sum()
    }
}

/// Subset masks of `0..n`, in increasing order.
fn masks(n: usize) -> impl Iterator<Item = u32> {
    0..(1u32 << n)
}

fn select(edges: &[DirectedEdge], mask: u32) -> Vec<DirectedEdge> {
    (0..edges.len())
        .filter(|i| mask >> i & 1 == 1)
        .map(|i| edges[i])
        .collect()
}

/// `s_j = Σ_{E ⊆ E_v, |E| = j} det(M)_E` for `j = 0..=deg`.
fn star_minor_sums<T: Scalar>(m: &TransferMatrix<T>, star: &[DirectedEdge]) -> Result<Vec<T>> {
    let kernel = m.kernel(star)?;
    let all: Vec<u32> = masks(star.len()).collect();
    let dets: Vec<T> = all
        .par_iter()
        .map(|&mask| {
            let idx: Vec<usize> = (0..star.len()).filter(|i| mask >> i & 1 == 1).collect();
            kernel.principal(&idx).det().expect("square")
        })
        .collect();
    let mut sums = vec![T::zero(); star.len() + 1];
    for (mask, d) in all.iter().zip(dets) {
        let j = mask.count_ones() as usize;
        sums[j] = sums[j] + d;
    }
    Ok(sums)
}

fn star_of(graph: &FiniteGraph, v: VertexId, max_enum: usize) -> Result<Vec<DirectedEdge>> {
    let star = graph.edge_star(v)?;
    if star.len() > max_enum {
        return Err(Error::guard("star size", star.len(), max_enum));
    }
    Ok(star.edges)
}

fn pmf_from_sums<T: Scalar>(sums: &[T], k: usize) -> T {
    let mut acc = T::zero();
    for (j, &s) in sums.iter().enumerate().skip(k) {
        acc = acc + parity_sign::<T>(j) * binomial::<T>(j, k) * s;
    }
    parity_sign::<T>(k) * acc
}

/// `P(D_v = k) = (-1)^k Σ_{E ⊆ E_v, |E| ≥ k} (-1)^{|E|} C(|E|, k) det(M)_E`.
pub fn degree_pmf_single<T: Scalar>(
    m: &TransferMatrix<T>,
    graph: &FiniteGraph,
    v: VertexId,
    k: usize,
    max_enum: usize,
) -> Result<T> {
    if k == 0 {
        return Err(Error::InvalidInput("degree must be at least 1".into()));
    }
    let star = star_of(graph, v, max_enum)?;
    if k > star.len() {
        return Ok(T::zero());
    }
    let sums = star_minor_sums(m, &star)?;
    clamp_probability(pmf_from_sums(&sums, k))
}

/// The whole single-vertex PMF from one pass over the star's minors.
pub fn degree_pmf<T: Scalar>(
    m: &TransferMatrix<T>,
    graph: &FiniteGraph,
    v: VertexId,
    max_enum: usize,
) -> Result<DegreePmf<T>> {
    let star = star_of(graph, v, max_enum)?;
    let sums = star_minor_sums(m, &star)?;
    let probs = (1..=star.len())
        .map(|k| clamp_probability(pmf_from_sums(&sums, k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DegreePmf { vertex: v, probs })
}

/// Validates a good set of interior vertices and returns their stars.
pub(crate) fn good_stars(graph: &FiniteGraph, vertices: &[VertexId]) -> Result<Vec<Vec<DirectedEdge>>> {
    if let Some((u, v)) = graph.first_adjacent_pair(vertices)? {
        return Err(Error::NotGoodSet(u, v));
    }
    vertices.iter().map(|&v| Ok(graph.edge_star(v)?.edges)).collect()
}

/// `P(D_v = k_v ∀ v ∈ V)` as the sum over selections `η(v) ⊆ E_v`, `|η(v)| = k_v`,
/// of `P(η(V) ⊆ T, (E(V) ∖ η(V)) ∩ T = ∅)`.
pub fn degree_pmf_joint<T: Scalar>(
    m: &TransferMatrix<T>,
    graph: &FiniteGraph,
    q: &DegreeQuery,
    max_enum_joint: usize,
) -> Result<T> {
    let vertices = q.vertices();
    let stars = good_stars(graph, &vertices)?;
    let total: usize = stars.iter().map(|s| s.len()).sum();
    if total > max_enum_joint {
        return Err(Error::guard("joint star size", total, max_enum_joint));
    }
    for (&(_, k), star) in q.points.iter().zip(&stars) {
        if k == 0 {
            return Err(Error::InvalidInput("degree must be at least 1".into()));
        }
        if k > star.len() {
            return Ok(T::zero());
        }
    }
    if stars.is_empty() {
        return Ok(T::one());
    }
    let choices: Vec<Vec<u32>> = q
        .points
        .iter()
        .zip(&stars)
        .map(|(&(_, k), star)| masks(star.len()).filter(|m| m.count_ones() as usize == k).collect())
        .collect();
    let mut selections: Vec<Vec<u32>> = vec![Vec::new()];
    for c in &choices {
        selections = selections
            .into_iter()
            .flat_map(|s| {
                c.iter().map(move |&mask| {
                    let mut t = s.clone();
                    t.push(mask);
                    t
                })
            })
            .collect();
    }
    let terms: Vec<T> = selections
        .par_iter()
        .map(|sel| {
            let mut present = Vec::new();
            let mut absent = Vec::new();
            for (star, &mask) in stars.iter().zip(sel) {
                present.extend(select(star, mask));
                absent.extend(select(star, !mask & ((1u32 << star.len()) - 1)));
            }
            raw_edge_probability(m, &present, &absent)
        })
        .collect();
    clamp_probability(terms.into_iter().sum())
}

/// `P(D_v = k)` on `K_n`: `k n² C(n-1, k) (n-1)^{-(k+2)} ((n-1)/n)^n`, evaluated
/// as a sum of logarithms so that large `n` neither overflows nor cancels.
pub fn kn_degree_closed_form<T: Scalar>(n: usize, k: usize) -> Result<T> {
    if n < 2 {
        return Err(Error::InvalidInput("complete graph needs n >= 2".into()));
    }
    if k == 0 || k > n - 1 {
        return Err(Error::InvalidInput(format!("degree {k} outside 1..={}", n - 1)));
    }
    Ok(T::lit(kn_log_form(n, k).exp()))
}

fn kn_log_form(n: usize, k: usize) -> f64 {
    let nf = n as f64;
    let n1 = nf - 1.0;
    // C(n-1, k) / (n-1)^k = (1/k!) Π_{i<k} (1 - i/(n-1))
    let falling: f64 = (0..k).map(|i| (-(i as f64) / n1).ln_1p()).sum();
    let log_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    (k as f64).ln() + 2.0 * (nf / n1).ln() + falling - log_fact + nf * (-1.0 / nf).ln_1p()
}

/// `e^{-1} / (k-1)!`, the law of `1 + Poisson(1)` at `k`.
pub fn poisson_limit<T: Scalar>(k: usize) -> T {
    if k == 0 {
        return T::zero();
    }
    let log_fact: f64 = (1..k).map(|i| (i as f64).ln()).sum();
    T::lit((-1.0 - log_fact).exp())
}

/// `max_{1 ≤ k ≤ kmax} |P_{K_n}(D_v = k) - e^{-1}/(k-1)!|` (the closed form is zero for `k ≥ n`).
pub fn poisson_limit_gap<T: Scalar>(n: usize, kmax: usize) -> Result<T> {
    if n < 2 {
        return Err(Error::InvalidInput("complete graph needs n >= 2".into()));
    }
    let mut gap = T::zero();
    for k in 1..=kmax {
        let p = if k < n {
            kn_degree_closed_form::<T>(n, k)?
        } else {
            T::zero()
        };
        gap = gap.max((p - poisson_limit::<T>(k)).abs());
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{LatticeSpec, Region, Site};

    #[test]
    fn k3_single() {
        let g = FiniteGraph::complete(3).unwrap();
        let m = TransferMatrix::<f64>::for_graph(&g).unwrap();
        assert!((degree_pmf_single(&m, &g, 0, 1, 20).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((degree_pmf_single(&m, &g, 0, 2, 20).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(degree_pmf_single(&m, &g, 0, 3, 20).unwrap(), 0.0);
    }

    #[test]
    fn complete_graphs_match_closed_form() {
        for n in 3..8 {
            let g = FiniteGraph::complete(n).unwrap();
            let m = TransferMatrix::<f64>::for_graph(&g).unwrap();
            let pmf = degree_pmf(&m, &g, 0, 20).unwrap();
            for k in 1..n {
                let c = kn_degree_closed_form::<f64>(n, k).unwrap();
                assert!((pmf.get(k) - c).abs() < 1e-12, "n={n} k={k}");
            }
            assert!((pmf.total() - 1.0).abs() < 1e-12);
        }
        assert!((kn_degree_closed_form::<f64>(3, 1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(kn_degree_closed_form::<f64>(3, 3).is_err());
    }

    #[test]
    fn poisson_gaps_shrink() {
        let mut last = f64::INFINITY;
        for n in [100, 1000, 10_000, 100_000, 1_000_000] {
            let g = poisson_limit_gap::<f64>(n, 6).unwrap();
            assert!(g < last);
            last = g;
        }
        assert!(last < 1e-4);
        assert!((poisson_limit::<f64>(1) - (-1f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn mean_identity_on_grid() {
        let g = FiniteGraph::build_grid(&LatticeSpec::square(), &Region::Rectangle { width: 3, height: 3 }).unwrap();
        let m = TransferMatrix::<f64>::for_graph(&g).unwrap();
        let v = g.vertex_at(&Site::new(vec![1, 1])).unwrap();
        let pmf = degree_pmf(&m, &g, v, 20).unwrap();
        let star = g.edge_star(v).unwrap().edges;
        let mean: f64 = star.iter().map(|&e| m.entry(e, e).unwrap()).sum();
        assert!((pmf.mean() - mean).abs() < 1e-12);
        assert!((pmf.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn joint_reduces_and_normalizes() {
        let g = FiniteGraph::build_grid(&LatticeSpec::square(), &Region::Rectangle { width: 3, height: 3 }).unwrap();
        let m = TransferMatrix::<f64>::for_graph(&g).unwrap();
        let at = |x, y| g.vertex_at(&Site::new(vec![x, y])).unwrap();
        let (a, b) = (at(0, 0), at(1, 1));
        for k in 1..=4 {
            let s = degree_pmf_single(&m, &g, a, k, 20).unwrap();
            let j = degree_pmf_joint(&m, &g, &DegreeQuery::new(vec![(a, k)]), 24).unwrap();
            assert!((s - j).abs() < 1e-12);
        }
        let mut total = 0.0;
        for ka in 1..=4 {
            for kb in 1..=4 {
                total += degree_pmf_joint(&m, &g, &DegreeQuery::new(vec![(a, ka), (b, kb)]), 24).unwrap();
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
        let bad = DegreeQuery::new(vec![(a, 1), (at(1, 0), 1)]);
        assert!(matches!(degree_pmf_joint(&m, &g, &bad, 24), Err(Error::NotGoodSet(..))));
    }
}
