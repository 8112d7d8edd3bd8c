//! Lattice constants `C_L^{(k)}`, the reflection pairing identity, cumulants
//! on the unit disk and `ε → 0` convergence reports.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::cumulant::{cumulant_direct, CumulantOptions, CumulantQuery};
use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, FiniteGraph, LatticeKind, LatticeSpec, Region, VertexId};
use crate::green::green_dirichlet_restricted;
use crate::linalg::Matrix;
use crate::perm::for_each_permutation;
use crate::potential::PotentialKernel;
use crate::scalar::{binomial, parity_sign, Scalar};
use crate::transfer::TransferMatrix;

/// `M̄` on the origin star together with its row-substituted variants.
#[derive(Debug, Clone)]
pub struct OriginStarKernel<T> {
    lattice: LatticeSpec,
    mbar: Matrix<T>,
}

impl<T: Scalar> OriginStarKernel<T> {
    pub fn new(lattice: &LatticeSpec) -> Result<Self> {
        Self::with_tol(lattice, T::lit(crate::potential::DEFAULT_QUAD_TOL))
    }

    pub fn with_tol(lattice: &LatticeSpec, quad_tol: T) -> Result<Self> {
        let pk = PotentialKernel::<T>::with_tol(lattice, quad_tol)?;
        Ok(OriginStarKernel {
            lattice: lattice.clone(),
            mbar: pk.mbar_matrix(),
        })
    }

    /// Uses a caller-supplied symmetric `M̄` (direction-indexed).
    pub fn from_matrix(lattice: &LatticeSpec, mbar: Matrix<T>) -> Result<Self> {
        if mbar.rows() != lattice.degree || !mbar.is_square() {
            return Err(Error::Dimension(format!("origin star has {} edges", lattice.degree)));
        }
        Ok(OriginStarKernel {
            lattice: lattice.clone(),
            mbar,
        })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn mbar(&self) -> &Matrix<T> {
        &self.mbar
    }

    /// `M̄^α`: row `entry + α` replaced by row `entry`.
    pub fn malpha(&self, entry: usize, alpha: usize) -> Matrix<T> {
        let deg = self.lattice.degree;
        let target = (entry + alpha) % deg;
        Matrix::from_fn(deg, deg, |i, j| {
            if i == target {
                self.mbar[(entry, j)]
            } else {
                self.mbar[(i, j)]
            }
        })
    }

    /// Number of origin-star subsets contributing to `C^{(k)}`.
    pub fn subset_count(&self, k: usize) -> usize {
        let deg = self.lattice.degree;
        (1u32..1 << deg)
            .filter(|m| m & 1 != 0 && m.count_ones() as usize >= k)
            .count()
    }

    /// `C_L^{(k)}` with entry edge `e_1`.
    pub fn constant(&self, k: usize) -> Result<T> {
        self.constant_from(k, 0)
    }

    /// `C_L^{(k)}` evaluated with the entry edge in direction `entry`.
    pub fn constant_from(&self, k: usize, entry: usize) -> Result<T> {
        let deg = self.lattice.degree;
        let p = self.lattice.p;
        if !self.lattice.is_planar() || p != deg {
            return Err(Error::UnsupportedLattice(self.lattice.name()));
        }
        if k == 0 || k > deg || entry >= deg {
            return Err(Error::InvalidInput(format!("need 1 <= k <= {deg} and entry < {deg}")));
        }
        let malphas: Vec<Matrix<T>> = (0..p).map(|a| self.malpha(entry, a)).collect();
        let mut acc = T::zero();
        for mask in 0u32..1 << deg {
            let size = mask.count_ones() as usize;
            if mask & (1 << entry) == 0 || size < k {
                continue;
            }
            let rest: Vec<usize> = (0..deg).filter(|&i| i != entry && mask & (1 << i) != 0).collect();
            let mut bracket = self.mbar.principal(&rest).det()?;
            for (alpha, ma) in malphas.iter().enumerate().skip(1) {
                if mask & (1 << ((entry + alpha) % deg)) != 0 {
                    bracket = bracket - self.lattice.gamma(alpha).value::<T>() * ma.principal(&rest).det()?;
                }
            }
            acc = acc + parity_sign::<T>(size) * binomial::<T>(size, k) * bracket;
        }
        Ok(parity_sign::<T>(k + 1) * T::lit(self.lattice.c_l_value()) * acc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeConstant {
    pub lattice: String,
    pub k: usize,
    pub value: f64,
}

fn kernel_cache() -> &'static Mutex<HashMap<String, Arc<OriginStarKernel<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<OriginStarKernel<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Shared `f64` origin-star kernel, built once per lattice.
pub fn origin_kernel(lattice: &LatticeSpec) -> Result<Arc<OriginStarKernel<f64>>> {
    let key = lattice.name();
    if let Some(k) = kernel_cache().lock().expect("cache lock").get(&key) {
        return Ok(k.clone());
    }
    let k = Arc::new(OriginStarKernel::new(lattice)?);
    kernel_cache().lock().expect("cache lock").insert(key, k.clone());
    Ok(k)
}

pub fn lattice_constant(lattice: &LatticeSpec, k: usize) -> Result<LatticeConstant> {
    let value = origin_kernel(lattice)?.constant(k)?;
    Ok(LatticeConstant {
        lattice: lattice.name(),
        k,
        value,
    })
}

/// Tabulated closed forms of `C_L^{(k)}` for Z², T and H.
pub fn reference_constant(lattice: &LatticeSpec, k: usize) -> Option<f64> {
    use std::f64::consts::PI;
    let s3 = 3f64.sqrt();
    let (p1, p2, p3, p4) = (PI, PI * PI, PI * PI * PI, PI.powi(4));
    match (lattice.kind, k) {
        (LatticeKind::Hypercubic(2), 1) => Some(8.0 / p1 - 16.0 / p2),
        (LatticeKind::Hypercubic(2), 2) => Some(18.0 - 72.0 / p1 + 96.0 / p2),
        (LatticeKind::Hypercubic(2), 3) => Some(2.0 + 16.0 / p1),
        (LatticeKind::Hypercubic(2), 4) => Some(-2.0),
        (LatticeKind::Triangular, 1) => {
            Some(-25.0 / 6.0 - 5.0 * s3 / (2.0 * p1) + 297.0 / p2 - 594.0 * s3 / p3 + 972.0 / p4)
        }
        (LatticeKind::Triangular, 2) => {
            Some(-35.0 / 8.0 + 611.0 * s3 / (4.0 * p1) - 4077.0 / (2.0 * p2) + 3159.0 * s3 / p3 - 4860.0 / p4)
        }
        (LatticeKind::Triangular, 3) => {
            Some(239.0 / 4.0 - 537.0 * s3 / p1 + 5031.0 / p2 - 6696.0 * s3 / p3 + 9720.0 / p4)
        }
        (LatticeKind::Triangular, 4) => {
            Some(-599.0 / 6.0 + 1433.0 * s3 / (2.0 * p1) - 5832.0 / p2 + 7074.0 * s3 / p3 - 9720.0 / p4)
        }
        (LatticeKind::Triangular, 5) => {
            Some(247.0 / 4.0 - 841.0 * s3 / (2.0 * p1) + 3240.0 / p2 - 3726.0 * s3 / p3 + 4860.0 / p4)
        }
        (LatticeKind::Triangular, 6) => {
            Some(-105.0 / 8.0 + 363.0 * s3 / (4.0 * p1) - 1395.0 / (2.0 * p2) + 783.0 * s3 / p3 - 972.0 / p4)
        }
        (LatticeKind::Hexagonal, 1) => Some(0.75),
        (LatticeKind::Hexagonal, 2) => Some(0.0),
        (LatticeKind::Hexagonal, 3) => Some(-0.75),
        _ => None,
    }
}

/// Closed-form Green's function of the unit disk and its mixed Hessian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumDomain {
    /// Step of the central differences.
    pub h: f64,
    /// Use the analytic mixed Hessian instead of differences.
    pub closed_form: bool,
}

impl Default for ContinuumDomain {
    fn default() -> Self {
        ContinuumDomain {
            h: 1e-4,
            closed_form: true,
        }
    }
}

type Hessian = [[f64; 2]; 2];

impl ContinuumDomain {
    pub fn unit_disk() -> Self {
        Self::default()
    }

    /// `g_U(x, y) = -(1/4π) [ln|x-y|² - ln(1 - 2x·y + |x|²|y|²)]`.
    pub fn green(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        let d = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
        let q = image_term(x, y);
        -(d.ln() - q.ln()) / (4.0 * std::f64::consts::PI)
    }

    /// `∂_{x_i} ∂_{y_j} g_U(x, y)`.
    pub fn hessian_exact(&self, x: [f64; 2], y: [f64; 2]) -> Hessian {
        let u = [x[0] - y[0], x[1] - y[1]];
        let d = u[0] * u[0] + u[1] * u[1];
        let (xx, yy) = (x[0] * x[0] + x[1] * x[1], y[0] * y[0] + y[1] * y[1]);
        let q = image_term(x, y);
        let qx = [2.0 * x[0] * yy - 2.0 * y[0], 2.0 * x[1] * yy - 2.0 * y[1]];
        let qy = [2.0 * y[0] * xx - 2.0 * x[0], 2.0 * y[1] * xx - 2.0 * x[1]];
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let delta = if i == j { 1.0 } else { 0.0 };
                let ln_d = (-2.0 * delta * d + 4.0 * u[i] * u[j]) / (d * d);
                let qij = -2.0 * delta + 4.0 * x[i] * y[j];
                let ln_q = qij / q - qx[i] * qy[j] / (q * q);
                h[i][j] = -(ln_d - ln_q) / (4.0 * std::f64::consts::PI);
            }
        }
        h
    }

    /// Central-difference mixed Hessian with step `h`.
    pub fn hessian_fd(&self, x: [f64; 2], y: [f64; 2], h: f64) -> Hessian {
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let shift = |p: [f64; 2], k: usize, s: f64| {
                    let mut q = p;
                    q[k] += s;
                    q
                };
                let g = |sx: f64, sy: f64| self.green(shift(x, i, sx), shift(y, j, sy));
                *cell = (g(h, h) - g(h, -h) - g(-h, h) + g(-h, -h)) / (4.0 * h * h);
            }
        }
        out
    }

    /// One Richardson step on the central differences.
    pub fn hessian_richardson(&self, x: [f64; 2], y: [f64; 2], h: f64) -> Hessian {
        let a = self.hessian_fd(x, y, h);
        let b = self.hessian_fd(x, y, h / 2.0);
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = (4.0 * b[i][j] - a[i][j]) / 3.0;
            }
        }
        out
    }

    pub fn hessian(&self, x: [f64; 2], y: [f64; 2]) -> Hessian {
        if self.closed_form {
            self.hessian_exact(x, y)
        } else {
            self.hessian_richardson(x, y, self.h)
        }
    }

    fn check_points(&self, points: &[[f64; 2]]) -> Result<()> {
        for (i, p) in points.iter().enumerate() {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            if 1.0 - r <= 10.0 * self.h {
                return Err(Error::NearBoundary);
            }
            if points[..i].iter().any(|q| q == p) {
                return Err(Error::InvalidInput("points must be distinct".into()));
            }
        }
        Ok(())
    }
}

fn image_term(x: [f64; 2], y: [f64; 2]) -> f64 {
    let xy = x[0] * y[0] + x[1] * y[1];
    let (xx, yy) = (x[0] * x[0] + x[1] * x[1], y[0] * y[0] + y[1] * y[1]);
    1.0 - 2.0 * xy + xx * yy
}

/// Every cyclic ordering of `0..n` as `σ` with `σ(c_i) = c_{i+1}`.
pub fn cyclic_permutations(n: usize) -> Vec<Vec<usize>> {
    if n < 2 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for_each_permutation(n - 1, |tail| {
        let order: Vec<usize> = std::iter::once(0).chain(tail.iter().map(|&t| t + 1)).collect();
        let mut sigma = vec![0; n];
        for i in 0..n {
            sigma[order[i]] = order[(i + 1) % n];
        }
        out.push(sigma);
    });
    out
}

/// `-Π C^{(k_v)} Σ_σ Σ_η Π_v ∂_{η(v)} ∂_{η(σ v)} g_U(v, σ v)` on the unit disk.
pub fn continuum_cumulant(
    domain: &ContinuumDomain,
    points: &[[f64; 2]],
    ks: &[usize],
    lattice: &LatticeSpec,
) -> Result<f64> {
    if points.len() < 2 || points.len() != ks.len() {
        return Err(Error::InvalidInput("need at least two points, one degree each".into()));
    }
    domain.check_points(points)?;
    let mut consts = 1.0;
    for &k in ks {
        consts *= lattice_constant(lattice, k)?.value;
    }
    let n = points.len();
    let mut sum = 0.0;
    for sigma in cyclic_permutations(n) {
        // Σ_η Π_v H(v, σv)[η(v)][η(σv)] is the trace of the product around the cycle
        let mut prod = [[1.0, 0.0], [0.0, 1.0]];
        let mut v = 0;
        for _ in 0..n {
            let h = domain.hessian(points[v], points[sigma[v]]);
            prod = matmul2(prod, h);
            v = sigma[v];
        }
        sum += prod[0][0] + prod[1][1];
    }
    Ok(-consts * sum)
}

fn matmul2(a: Hessian, b: Hessian) -> Hessian {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// `(lhs, rhs)` of `B(η^α, g) + B(R η^α, g) = 2 γ_α B(η, g)` where `B` is the
/// mixed Hessian of the disk Green's function at two separated points and
/// `R` reflects across the line of `η`. Directions index the origin star.
pub fn reflection_pairing_check(lattice: &LatticeSpec, eta: usize, alpha: usize, g: usize) -> Result<(f64, f64)> {
    if !lattice.is_planar() {
        return Err(Error::UnsupportedLattice(lattice.name()));
    }
    let star = lattice.star_vectors(0);
    let deg = star.len();
    if eta >= deg || g >= deg || alpha >= lattice.p {
        return Err(Error::InvalidInput("direction out of range".into()));
    }
    let e = [star[eta][0], star[eta][1]];
    let ea = [star[(eta + alpha) % deg][0], star[(eta + alpha) % deg][1]];
    let dot = ea[0] * e[0] + ea[1] * e[1];
    let refl = [2.0 * dot * e[0] - ea[0], 2.0 * dot * e[1] - ea[1]];
    let r = star
        .iter()
        .position(|s| (s[0] - refl[0]).abs() < 1e-9 && (s[1] - refl[1]).abs() < 1e-9)
        .ok_or_else(|| Error::InvalidInput("reflected exit edge is not a lattice edge".into()))?;
    let rv = [star[r][0], star[r][1]];
    let gv = [star[g][0], star[g][1]];
    let h = ContinuumDomain::unit_disk().hessian_exact([0.12, -0.05], [-0.31, 0.22]);
    let b = |a: [f64; 2]| {
        (0..2)
            .map(|i| (0..2).map(|j| a[i] * h[i][j] * gv[j]).sum::<f64>())
            .sum::<f64>()
    };
    let gamma: f64 = lattice.gamma(alpha).value();
    Ok((b(ea) + b(rv), 2.0 * gamma * b(e)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    /// Number of interior lattice sites of `U_ε`.
    pub sites: usize,
    pub kappa: f64,
    pub rescaled: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub lattice: String,
    pub ks: Vec<usize>,
    pub target: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn gaps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.gap).collect()
    }

    pub fn gaps_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].gap < w[0].gap)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,sites,kappa,rescaled,target,gap\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{:e},{:.12},{:.12},{:e}\n",
                r.eps, r.sites, r.kappa, r.rescaled, self.target, r.gap
            ));
        }
        s
    }
}

/// Lattice cumulant on `U_ε = U/ε ∩ L` at `v_ε`, from Dirichlet data.
pub fn discrete_cumulant(
    lattice: &LatticeSpec,
    points: &[[f64; 2]],
    ks: &[usize],
    eps: f64,
    opts: CumulantOptions,
) -> Result<(f64, usize)> {
    let graph = FiniteGraph::build_grid(
        lattice,
        &Region::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0 / eps,
        },
    )?;
    let mut vs: Vec<VertexId> = Vec::with_capacity(points.len());
    for p in points {
        let site = lattice.nearest_site(&[p[0] / eps, p[1] / eps]);
        let v = graph
            .vertex_at(&site)
            .filter(|&v| !graph.is_boundary(v))
            .ok_or(Error::NearBoundary)?;
        vs.push(v);
    }
    let mut edges: Vec<DirectedEdge> = Vec::new();
    for &v in &vs {
        edges.extend(graph.edge_star(v).map_err(|_| Error::NearBoundary)?.edges);
    }
    let mut sources: Vec<VertexId> = edges.iter().flat_map(|e| [e.tail, e.tip]).collect();
    sources.sort_unstable();
    sources.dedup();
    let green = green_dirichlet_restricted::<f64>(&graph, &sources, 1e-13)?;
    let m = TransferMatrix::new(&graph, green, &edges)?;
    let q = CumulantQuery::new(vs.into_iter().zip(ks.iter().copied()).collect());
    let kappa = cumulant_direct(&m, &graph, &q, opts)?;
    Ok((kappa, graph.interior_vertices().len()))
}

pub fn convergence_study(
    domain: &ContinuumDomain,
    points: &[[f64; 2]],
    ks: &[usize],
    lattice: &LatticeSpec,
    ladder: &[f64],
    opts: CumulantOptions,
) -> Result<ConvergenceReport> {
    if ladder.is_empty() || ladder.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::InvalidInput(
            "eps ladder must be non-empty with 0 < eps < 1".into(),
        ));
    }
    if ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("eps ladder must be strictly decreasing".into()));
    }
    let target = continuum_cumulant(domain, points, ks, lattice)?;
    let d = lattice.dim() as i32;
    let n = points.len() as i32;
    let rows = ladder
        .par_iter()
        .map(|&eps| {
            let (kappa, sites) = discrete_cumulant(lattice, points, ks, eps, opts)?;
            let rescaled = kappa * eps.powi(-d * n);
            Ok(ConvergenceRow {
                eps,
                sites,
                kappa,
                rescaled,
                gap: (rescaled - target).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport {
        lattice: lattice.name(),
        ks: ks.to_vec(),
        target,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hexagonal_constants() {
        let h = LatticeSpec::hexagonal();
        for (k, want) in [(1, 0.75), (2, 0.0), (3, -0.75)] {
            let c = lattice_constant(&h, k).unwrap().value;
            assert!((c - want).abs() < 1e-6, "k={k}: {c}");
        }
    }

    #[test]
    fn first_square_constant() {
        let c = lattice_constant(&LatticeSpec::square(), 1).unwrap().value;
        let want = reference_constant(&LatticeSpec::square(), 1).unwrap();
        assert!((c - want).abs() < 1e-6, "{c} vs {want}");
    }

    #[test]
    fn constants_sum_to_zero() {
        for lat in [
            LatticeSpec::square(),
            LatticeSpec::triangular(),
            LatticeSpec::hexagonal(),
        ] {
            let s: f64 = (1..=lat.degree).map(|k| lattice_constant(&lat, k).unwrap().value).sum();
            assert!(s.abs() < 1e-8, "{}: {s}", lat.name());
        }
    }

    #[test]
    fn top_degree_has_one_subset() {
        for lat in [
            LatticeSpec::square(),
            LatticeSpec::triangular(),
            LatticeSpec::hexagonal(),
        ] {
            let k = origin_kernel(&lat).unwrap();
            assert_eq!(k.subset_count(lat.degree), 1);
        }
    }

    #[test]
    fn entry_rotation_invariance() {
        for lat in [
            LatticeSpec::square(),
            LatticeSpec::triangular(),
            LatticeSpec::hexagonal(),
        ] {
            let k = origin_kernel(&lat).unwrap();
            for kk in 1..=lat.degree {
                let a = k.constant_from(kk, 0).unwrap();
                let b = k.constant_from(kk, 1).unwrap();
                assert!((a - b).abs() < 1e-8, "{} k={kk}", lat.name());
            }
        }
    }

    #[test]
    fn reflection_pairing() {
        for lat in [
            LatticeSpec::square(),
            LatticeSpec::triangular(),
            LatticeSpec::hexagonal(),
        ] {
            for eta in 0..lat.degree {
                for alpha in 0..lat.p {
                    for g in 0..lat.degree {
                        let (l, r) = reflection_pairing_check(&lat, eta, alpha, g).unwrap();
                        assert!((l - r).abs() < 1e-8);
                    }
                }
            }
        }
        // γ = 0 on Z²: the pair cancels
        let (l, _) = reflection_pairing_check(&LatticeSpec::square(), 0, 1, 1).unwrap();
        assert!(l.abs() < 1e-12);
    }

    #[test]
    fn disk_green_properties() {
        let d = ContinuumDomain::unit_disk();
        let (x, y) = ([0.2, -0.1], [-0.35, 0.4]);
        assert!((d.green(x, y) - d.green(y, x)).abs() < 1e-14);
        assert!(d.green(x, [0.999999, 0.0]).abs() < 1e-5);
        let ex = d.hessian_exact(x, y);
        let rich = d.hessian_richardson(x, y, 1e-3);
        for i in 0..2 {
            for j in 0..2 {
                assert!((ex[i][j] - rich[i][j]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn central_differences_second_order() {
        let d = ContinuumDomain::unit_disk();
        let (x, y) = ([0.2, -0.1], [-0.35, 0.4]);
        let ex = d.hessian_exact(x, y)[0][1];
        let e1 = (d.hessian_fd(x, y, 2e-2)[0][1] - ex).abs();
        let e2 = (d.hessian_fd(x, y, 1e-2)[0][1] - ex).abs();
        assert!(e2 < e1 / 3.0, "{e1} {e2}");
    }

    #[test]
    fn two_point_structure() {
        let lat = LatticeSpec::square();
        let d = ContinuumDomain::unit_disk();
        let pts = [[0.3, 0.1], [-0.2, -0.25]];
        let v = continuum_cumulant(&d, &pts, &[1, 1], &lat).unwrap();
        let h = d.hessian_exact(pts[0], pts[1]);
        let c1 = lattice_constant(&lat, 1).unwrap().value;
        let s: f64 = h.iter().flatten().map(|x| x * x).sum();
        assert!((v + c1 * c1 * s).abs() < 1e-12);
        let swapped = continuum_cumulant(&d, &[pts[1], pts[0]], &[1, 1], &lat).unwrap();
        assert!((v - swapped).abs() < 1e-12);
        assert!(matches!(
            continuum_cumulant(&d, &[[0.9999, 0.0], [0.0, 0.0]], &[1, 1], &lat),
            Err(Error::NearBoundary)
        ));
    }

    #[test]
    fn cyclic_counts() {
        assert_eq!(cyclic_permutations(2), vec![vec![1, 0]]);
        assert_eq!(cyclic_permutations(4).len(), 6);
    }
}
