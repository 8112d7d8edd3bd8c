//! Discrete Laplacian and finite-volume Green's functions.

use crate::error::{Error, Result};
use crate::graph::{FiniteGraph, VertexId};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// `Δ(u,u) = -deg(u)`, `Δ(u,v) = 1` for neighbours, zero otherwise.
pub fn laplacian<T: Scalar>(graph: &FiniteGraph) -> Matrix<T> {
    let n = graph.vertex_count();
    let mut l = Matrix::zeros(n, n);
    for v in 0..n {
        l[(v, v)] = -T::from_usize_lossy(graph.degree(v));
        for &w in graph.neighbors(v) {
            l[(v, w)] = T::one();
        }
    }
    l
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreenMode {
    Dirichlet,
    Grounded(VertexId),
}

/// `G(u, v)` on a finite graph, zero outside the solved block.
#[derive(Debug, Clone)]
pub struct GreenFunction<T> {
    mode: GreenMode,
    /// Position of each vertex in `table`, `None` where `G` vanishes.
    slot: Vec<Option<usize>>,
    table: Matrix<T>,
}

impl<T: Scalar> GreenFunction<T> {
    pub fn mode(&self) -> GreenMode {
        self.mode
    }

    pub fn vertex_count(&self) -> usize {
        self.slot.len()
    }

    #[inline]
    pub fn get(&self, u: VertexId, v: VertexId) -> T {
        match (self.slot[u], self.slot[v]) {
            (Some(i), Some(j)) => self.table[(i, j)],
            _ => T::zero(),
        }
    }

    /// The solved block (interior, or all vertices but the root).
    pub fn table(&self) -> &Matrix<T> {
        &self.table
    }

    /// Vertices indexing the rows of [`table`](Self::table), in order.
    pub fn support(&self) -> Vec<VertexId> {
        let mut out = vec![0; self.table.rows()];
        for (v, s) in self.slot.iter().enumerate() {
            if let Some(i) = s {
                out[*i] = v;
            }
        }
        out
    }

    /// Full `|V| x |V|` matrix, zero-extended.
    pub fn to_matrix(&self) -> Matrix<T> {
        let n = self.vertex_count();
        Matrix::from_fn(n, n, |u, v| self.get(u, v))
    }
}

fn solve_block<T: Scalar>(graph: &FiniteGraph, keep: &[VertexId], mode: GreenMode) -> Result<GreenFunction<T>> {
    let mut slot = vec![None; graph.vertex_count()];
    for (i, &v) in keep.iter().enumerate() {
        slot[v] = Some(i);
    }
    let m = keep.len();
    let mut a = Matrix::<T>::zeros(m, m);
    for (i, &v) in keep.iter().enumerate() {
        a[(i, i)] = T::from_usize_lossy(graph.degree(v));
        for &w in graph.neighbors(v) {
            if let Some(j) = slot[w] {
                a[(i, j)] = -T::one();
            }
        }
    }
    let table = a.inverse()?;
    Ok(GreenFunction { mode, slot, table })
}

/// `G = (-Δ_Λ)^{-1}` on the interior, zero on the boundary.
pub fn green_dirichlet<T: Scalar>(graph: &FiniteGraph) -> Result<GreenFunction<T>> {
    if !graph.has_boundary() {
        return Err(Error::NoBoundary);
    }
    let interior = graph.interior_vertices();
    solve_block(graph, &interior, GreenMode::Dirichlet)
}

/// Dirichlet `G` restricted to `sources × sources`, one conjugate-gradient
/// solve per interior source. `get` is only meaningful on `sources`.
pub fn green_dirichlet_restricted<T: Scalar>(
    graph: &FiniteGraph,
    sources: &[VertexId],
    tol: T,
) -> Result<GreenFunction<T>> {
    if !graph.has_boundary() {
        return Err(Error::NoBoundary);
    }
    for &s in sources {
        graph.check_vertex(s)?;
    }
    let interior = graph.interior_vertices();
    let mut pos = vec![None; graph.vertex_count()];
    for (i, &v) in interior.iter().enumerate() {
        pos[v] = Some(i);
    }
    let mut keep: Vec<VertexId> = sources.iter().copied().filter(|&s| pos[s].is_some()).collect();
    keep.sort_unstable();
    keep.dedup();
    let apply = |x: &[T], y: &mut [T]| {
        for (i, &v) in interior.iter().enumerate() {
            let mut s = T::from_usize_lossy(graph.degree(v)) * x[i];
            for &w in graph.neighbors(v) {
                if let Some(j) = pos[w] {
                    s = s - x[j];
                }
            }
            y[i] = s;
        }
    };
    let n = interior.len();
    let mut cols = Vec::with_capacity(keep.len());
    for &s in &keep {
        let mut b = vec![T::zero(); n];
        b[pos[s].expect("interior source")] = T::one();
        cols.push(conjugate_gradient(n, &apply, &b, tol)?);
    }
    let mut slot = vec![None; graph.vertex_count()];
    for (i, &v) in keep.iter().enumerate() {
        slot[v] = Some(i);
    }
    let half = T::lit(0.5);
    let table = Matrix::from_fn(keep.len(), keep.len(), |i, j| {
        let (pi, pj) = (pos[keep[i]].expect("interior"), pos[keep[j]].expect("interior"));
        half * (cols[j][pi] + cols[i][pj])
    });
    Ok(GreenFunction {
        mode: GreenMode::Dirichlet,
        slot,
        table,
    })
}

fn conjugate_gradient<T: Scalar>(n: usize, apply: &impl Fn(&[T], &mut [T]), b: &[T], tol: T) -> Result<Vec<T>> {
    let dot = |x: &[T], y: &[T]| x.iter().zip(y).fold(T::zero(), |a, (&p, &q)| a + p * q);
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![T::zero(); n];
    let mut rr = dot(&r, &r);
    let target = tol * tol * rr;
    for _ in 0..(10 * n + 100) {
        if rr <= target {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rr <= target * T::lit(1e4) {
        Ok(x)
    } else {
        Err(Error::Singular)
    }
}

/// Inverse of `-Δ` with the root row and column deleted, zero at the root.
pub fn green_grounded<T: Scalar>(graph: &FiniteGraph, root: VertexId) -> Result<GreenFunction<T>> {
    graph.check_vertex(root)?;
    if !graph.is_connected() {
        return Err(Error::Disconnected);
    }
    let keep: Vec<_> = (0..graph.vertex_count()).filter(|&v| v != root).collect();
    solve_block(graph, &keep, GreenMode::Grounded(root))
}

/// Dirichlet when the graph has a boundary, grounded at vertex 0 otherwise.
pub fn green_auto<T: Scalar>(graph: &FiniteGraph) -> Result<GreenFunction<T>> {
    if graph.has_boundary() {
        green_dirichlet(graph)
    } else {
        green_grounded(graph, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{LatticeSpec, Region};

    #[test]
    fn laplacian_k3() {
        let g = FiniteGraph::complete(3).unwrap();
        let l = laplacian::<f64>(&g);
        for i in 0..3 {
            assert_eq!(l[(i, i)], -2.0);
            assert_eq!((0..3).map(|j| l[(i, j)]).sum::<f64>(), 0.0);
        }
        assert_eq!(l[(0, 1)], 1.0);
    }

    #[test]
    fn single_site_dirichlet() {
        for (lat, want) in [(LatticeSpec::square(), 0.25), (LatticeSpec::triangular(), 1.0 / 6.0)] {
            let g = FiniteGraph::build_grid(
                &lat,
                &Region::Ball {
                    center: vec![0.0, 0.0],
                    radius: 0.5,
                },
            )
            .unwrap();
            let gf = green_dirichlet::<f64>(&g).unwrap();
            let v = g.interior_vertices()[0];
            assert!((gf.get(v, v) - want).abs() < 1e-15);
            assert_eq!(gf.get(v, g.boundary_vertices()[0]), 0.0);
        }
    }

    #[test]
    fn wired_path_segment() {
        // b - u - v - b'
        let g = FiniteGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)], &[0, 3]).unwrap();
        let gf = green_dirichlet::<f64>(&g).unwrap();
        assert!((gf.get(1, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((gf.get(1, 2) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn grounded_small() {
        let k2 = FiniteGraph::complete(2).unwrap();
        assert!((green_grounded::<f64>(&k2, 0).unwrap().get(1, 1) - 1.0).abs() < 1e-15);
        let k3 = FiniteGraph::complete(3).unwrap();
        let gf = green_grounded::<f64>(&k3, 2).unwrap();
        assert!((gf.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((gf.get(0, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(gf.get(2, 0), 0.0);
    }

    #[test]
    fn restricted_matches_dense() {
        let g = FiniteGraph::build_grid(
            &LatticeSpec::triangular(),
            &Region::Ball {
                center: vec![0.0, 0.0],
                radius: 4.5,
            },
        )
        .unwrap();
        let dense = green_dirichlet::<f64>(&g).unwrap();
        let src = [0, 3, 7, g.boundary_vertices()[0]];
        let sparse = green_dirichlet_restricted::<f64>(&g, &src, 1e-14).unwrap();
        for &a in &src {
            for &b in &src {
                assert!((dense.get(a, b) - sparse.get(a, b)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dirichlet_needs_boundary() {
        let k3 = FiniteGraph::complete(3).unwrap();
        assert!(matches!(green_dirichlet::<f64>(&k3), Err(Error::NoBoundary)));
    }

    #[test]
    fn residual_on_grid() {
        let g = FiniteGraph::build_grid(&LatticeSpec::square(), &Region::Rectangle { width: 4, height: 3 }).unwrap();
        let gf = green_dirichlet::<f64>(&g).unwrap();
        let int = g.interior_vertices();
        let lap = laplacian::<f64>(&g);
        for &u in &int {
            for &v in &int {
                let r: f64 = (0..g.vertex_count()).map(|w| -lap[(u, w)] * gf.get(w, v)).sum();
                let want = if u == v { 1.0 } else { 0.0 };
                assert!((r - want).abs() < 1e-10);
            }
        }
        assert!(gf.to_matrix().is_symmetric(1e-14));
    }
}
