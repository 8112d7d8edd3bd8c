//! Transfer-current matrix and determinantal edge probabilities.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, FiniteGraph};
use crate::green::{green_auto, GreenFunction, GreenMode};
use crate::linalg::Matrix;
use crate::scalar::{parity_sign, Scalar};

pub const DEFAULT_MAX_ENUM: usize = 20;

/// `M(f,g) = ∇∇G(f⁻, g⁻)` on the edges of a finite graph.
///
/// Entries for any orientation are computed on demand from the Green's
/// function; [`matrix`](Self::matrix) caches the natural-orientation block.
#[derive(Debug, Clone)]
pub struct TransferMatrix<T> {
    green: GreenFunction<T>,
    edges: Vec<DirectedEdge>,
    members: HashSet<(usize, usize)>,
    matrix: Matrix<T>,
}

impl<T: Scalar> TransferMatrix<T> {
    /// Builds `M` over `edges`, which must be edges of `graph`.
    pub fn new(graph: &FiniteGraph, green: GreenFunction<T>, edges: &[DirectedEdge]) -> Result<Self> {
        if green.vertex_count() != graph.vertex_count() {
            return Err(Error::Dimension("Green's function built for another graph".into()));
        }
        let members: HashSet<_> = graph.edges().iter().map(|e| e.undirected()).collect();
        for e in edges {
            if !members.contains(&e.undirected()) {
                return Err(Error::UnknownEdge(e.tail, e.tip));
            }
        }
        let matrix = Matrix::from_fn(edges.len(), edges.len(), |i, j| entry(&green, edges[i], edges[j]));
        Ok(TransferMatrix {
            green,
            edges: edges.to_vec(),
            members,
            matrix,
        })
    }

    /// `M` over every edge of the graph in natural orientation, with the
    /// Dirichlet Green's function (grounded at vertex 0 without boundary).
    pub fn for_graph(graph: &FiniteGraph) -> Result<Self> {
        let g = green_auto(graph)?;
        Self::new(graph, g, graph.edges())
    }

    pub fn green(&self) -> &GreenFunction<T> {
        &self.green
    }

    pub fn edges(&self) -> &[DirectedEdge] {
        &self.edges
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn contains(&self, e: DirectedEdge) -> bool {
        self.members.contains(&e.undirected())
    }

    fn check(&self, e: DirectedEdge) -> Result<()> {
        if self.contains(e) {
            Ok(())
        } else {
            Err(Error::UnknownEdge(e.tail, e.tip))
        }
    }

    /// `M(f, g)` for edges in the orientation given.
    pub fn entry(&self, f: DirectedEdge, g: DirectedEdge) -> Result<T> {
        self.check(f)?;
        self.check(g)?;
        Ok(entry(&self.green, f, g))
    }

    /// `M` restricted to `edges`, in the orientations given.
    pub fn kernel(&self, edges: &[DirectedEdge]) -> Result<Matrix<T>> {
        for &e in edges {
            self.check(e)?;
        }
        Ok(Matrix::from_fn(edges.len(), edges.len(), |i, j| {
            entry(&self.green, edges[i], edges[j])
        }))
    }

    /// Number of edges of any spanning tree of the (wired) graph.
    pub fn tree_size(&self) -> usize {
        match self.green.mode() {
            GreenMode::Dirichlet => self.green.table().rows(),
            GreenMode::Grounded(_) => self.green.vertex_count() - 1,
        }
    }

    /// `Σ_e M(e, e)` over the cached edges.
    pub fn trace(&self) -> T {
        (0..self.matrix.rows()).map(|i| self.matrix[(i, i)]).sum()
    }
}

#[inline]
fn entry<T: Scalar>(g: &GreenFunction<T>, f: DirectedEdge, h: DirectedEdge) -> T {
    g.get(f.tip, h.tip) - g.get(f.tip, h.tail) - g.get(f.tail, h.tip) + g.get(f.tail, h.tail)
}

/// Required-present edges `F` and required-absent edges `G`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeProbQuery {
    pub present: Vec<DirectedEdge>,
    pub absent: Vec<DirectedEdge>,
}

impl EdgeProbQuery {
    pub fn new(present: Vec<DirectedEdge>, absent: Vec<DirectedEdge>) -> Self {
        EdgeProbQuery { present, absent }
    }

    fn validate<T: Scalar>(&self, m: &TransferMatrix<T>) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.present {
            m.check(*e)?;
            if !seen.insert(e.undirected()) {
                return Err(Error::InvalidInput(format!("edge {e} listed twice")));
            }
        }
        let present = seen.clone();
        for e in &self.absent {
            m.check(*e)?;
            if present.contains(&e.undirected()) {
                return Err(Error::OverlappingQuery(e.tail, e.tip));
            }
            if !seen.insert(e.undirected()) {
                return Err(Error::InvalidInput(format!("edge {e} listed twice")));
            }
        }
        Ok(())
    }
}

fn slack<T: Scalar>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(1e3))
}

/// Clamps a probability into `[0, 1]` when it is outside by round-off only.
pub fn clamp_probability<T: Scalar>(p: T) -> Result<T> {
    let s = slack::<T>();
    if p < -s || p > T::one() + s || p.is_nan() {
        return Err(Error::ProbabilityOutOfRange(p.to_f64_lossy()));
    }
    Ok(p.max(T::zero()).min(T::one()))
}

/// `P(F ⊆ T, G ∩ T = ∅)` as a single determinant: rows of `F` unchanged, rows
/// of `G` negated off the diagonal with `1 - M` on it.
pub fn edge_probability<T: Scalar>(m: &TransferMatrix<T>, q: &EdgeProbQuery) -> Result<T> {
    q.validate(m)?;
    clamp_probability(raw_edge_probability(m, &q.present, &q.absent))
}

/// Unclamped determinant; callers must have validated the edges.
pub(crate) fn raw_edge_probability<T: Scalar>(
    m: &TransferMatrix<T>,
    present: &[DirectedEdge],
    absent: &[DirectedEdge],
) -> T {
    let all: Vec<_> = present.iter().chain(absent).copied().collect();
    let nf = present.len();
    let mut k = Matrix::from_fn(all.len(), all.len(), |i, j| entry(&m.green, all[i], all[j]));
    for i in nf..all.len() {
        for j in 0..all.len() {
            k[(i, j)] = if i == j { T::one() - k[(i, j)] } else { -k[(i, j)] };
        }
    }
    k.det().expect("square")
}

/// Same probability via `Σ_{γ ⊆ G} (-1)^{|γ|} det(M)_{F ∪ γ}`.
pub fn inclusion_exclusion_probability<T: Scalar>(
    m: &TransferMatrix<T>,
    q: &EdgeProbQuery,
    max_enum: usize,
) -> Result<T> {
    q.validate(m)?;
    let g = q.absent.len();
    if g > max_enum {
        return Err(Error::guard("absent edge set", g, max_enum));
    }
    let mut total = T::zero();
    let mut set = q.present.clone();
    for mask in 0u64..(1u64 << g) {
        set.truncate(q.present.len());
        set.extend((0..g).filter(|i| mask >> i & 1 == 1).map(|i| q.absent[i]));
        let d = m.kernel(&set)?.det()?;
        total = total + parity_sign::<T>(mask.count_ones() as usize) * d;
    }
    clamp_probability(total)
}

/// `det(M)_{rows, cols}`.
pub fn det_submatrix<T: Scalar>(m: &TransferMatrix<T>, rows: &[DirectedEdge], cols: &[DirectedEdge]) -> Result<T> {
    if rows.len() != cols.len() {
        return Err(Error::Dimension(format!(
            "{} rows vs {} columns",
            rows.len(),
            cols.len()
        )));
    }
    for &e in rows.iter().chain(cols) {
        m.check(e)?;
    }
    Matrix::from_fn(rows.len(), cols.len(), |i, j| entry(&m.green, rows[i], cols[j])).det()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{LatticeSpec, Region};
    use crate::green::green_grounded;

    fn e(u: usize, v: usize) -> DirectedEdge {
        DirectedEdge::new(u, v)
    }

    #[test]
    fn complete_graph_entries() {
        for n in 3..7 {
            let g = FiniteGraph::complete(n).unwrap();
            let m = TransferMatrix::<f64>::for_graph(&g).unwrap();
            let nf = n as f64;
            assert!((m.entry(e(0, 1), e(0, 1)).unwrap() - 2.0 / nf).abs() < 1e-12);
            assert!((m.entry(e(0, 1), e(0, 2)).unwrap() - 1.0 / nf).abs() < 1e-12);
            assert!((m.trace() - (nf - 1.0)).abs() < 1e-10);
            let star: Vec<_> = (1..n).map(|w| e(0, w)).collect();
            for k in 1..n {
                let d = det_submatrix(&m, &star[..k], &star[..k]).unwrap();
                let want = (1.0 + k as f64) / nf.powi(k as i32);
                assert!((d - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn k3_probabilities() {
        let g = FiniteGraph::complete(3).unwrap();
        let m = TransferMatrix::<f64>::for_graph(&g).unwrap();
        let p = |f: Vec<DirectedEdge>, a: Vec<DirectedEdge>| edge_probability(&m, &EdgeProbQuery::new(f, a)).unwrap();
        assert_eq!(p(vec![], vec![]), 1.0);
        assert!((p(vec![e(0, 1)], vec![]) - 2.0 / 3.0).abs() < 1e-12);
        assert!((p(vec![], vec![e(0, 1)]) - 1.0 / 3.0).abs() < 1e-12);
        assert!((p(vec![e(0, 1), e(1, 2)], vec![]) - 1.0 / 3.0).abs() < 1e-12);
        // reversed orientation gives the same probability
        assert!((p(vec![e(1, 0)], vec![e(2, 1)]) - 1.0 / 3.0).abs() < 1e-12);
        assert!(p(vec![e(0, 1), e(1, 2), e(0, 2)], vec![]).abs() < 1e-12);
    }

    #[test]
    fn overlap_is_rejected() {
        let g = FiniteGraph::complete(3).unwrap();
        let m = TransferMatrix::<f64>::for_graph(&g).unwrap();
        let q = EdgeProbQuery::new(vec![e(0, 1)], vec![e(1, 0)]);
        assert!(matches!(edge_probability(&m, &q), Err(Error::OverlappingQuery(1, 0))));
        let q = EdgeProbQuery::new(vec![e(0, 5)], vec![]);
        assert!(edge_probability(&m, &q).is_err());
    }

    #[test]
    fn grounding_invariance() {
        let g = FiniteGraph::grid(3, 3).unwrap();
        let a = TransferMatrix::<f64>::new(&g, green_grounded(&g, 0).unwrap(), g.edges()).unwrap();
        let b = TransferMatrix::<f64>::new(&g, green_grounded(&g, 7).unwrap(), g.edges()).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-10);
    }

    #[test]
    fn dirichlet_trace_rule() {
        let g = FiniteGraph::build_grid(&LatticeSpec::square(), &Region::Rectangle { width: 3, height: 2 }).unwrap();
        let m = TransferMatrix::<f64>::for_graph(&g).unwrap();
        assert_eq!(m.tree_size(), 6);
        assert!((m.trace() - 6.0).abs() < 1e-10);
        assert!(m.matrix().is_symmetric(1e-12));
    }

    #[test]
    fn inclusion_exclusion_matches() {
        let g = FiniteGraph::grid(3, 3).unwrap();
        let m = TransferMatrix::<f64>::for_graph(&g).unwrap();
        let es = g.edges().to_vec();
        let q = EdgeProbQuery::new(vec![es[0], es[5]], vec![es[1], es[3], es[7]]);
        let a = edge_probability(&m, &q).unwrap();
        let b = inclusion_exclusion_probability(&m, &q, 20).unwrap();
        assert!((a - b).abs() < 1e-12);
        let big = EdgeProbQuery::new(vec![], es.clone());
        assert!(inclusion_exclusion_probability(&m, &big, 3).unwrap_err().is_guard());
    }
}
