//! Potential kernel of planar lattices and the origin-star kernel `M̄`.
//!
//! The double Fourier integral is reduced to one dimension analytically
//! (the inner integral of `cos(nφ) / (A - B cos φ)` is closed form) and the
//! remaining angle is integrated by adaptive Gauss-Kronrod on `[0, π]`.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::graph::{LatticeKind, LatticeSpec, Site};
use crate::linalg::Matrix;
use crate::quad::integrate;
use crate::scalar::Scalar;

pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

/// `a(x - y)` on Z², T or H, cached per lattice vector.
#[derive(Debug)]
pub struct PotentialKernel<T> {
    lattice: LatticeSpec,
    quad_tol: T,
    cache: Mutex<HashMap<(i64, i64), T>>,
}

impl<T: Scalar> PotentialKernel<T> {
    pub fn new(lattice: &LatticeSpec) -> Result<Self> {
        Self::with_tol(lattice, T::lit(DEFAULT_QUAD_TOL))
    }

    pub fn with_tol(lattice: &LatticeSpec, quad_tol: T) -> Result<Self> {
        match lattice.kind {
            LatticeKind::Hypercubic(2) | LatticeKind::Triangular | LatticeKind::Hexagonal => {}
            _ => {
                return Err(Error::UnsupportedLattice(format!(
                    "{} has no planar potential kernel",
                    lattice.name()
                )))
            }
        }
        if quad_tol.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidInput("quadrature tolerance must be positive".into()));
        }
        Ok(PotentialKernel {
            lattice: lattice.clone(),
            quad_tol: quad_tol.max(T::epsilon() * T::lit(100.0)),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn quad_tol(&self) -> T {
        self.quad_tol
    }

    /// `a(u)` for a site measured from the origin (sublattice 0 for H).
    pub fn value(&self, u: &Site) -> T {
        self.between(u, &Site::origin(2))
    }

    /// `a(x - y)`; for the hexagonal lattice this depends on both sublattices.
    pub fn between(&self, x: &Site, y: &Site) -> T {
        let d = (x.coords[0] - y.coords[0], x.coords[1] - y.coords[1]);
        match self.lattice.kind {
            LatticeKind::Hexagonal => {
                let half = T::lit(0.5);
                match (x.sublattice, y.sublattice) {
                    (a, b) if a == b => T::lit(1.5) * self.bravais(d),
                    (sx, _) => {
                        // cells of the B neighbours of an A site
                        const OFF: [(i64, i64); 3] = [(0, 0), (0, -1), (-1, 0)];
                        // r = cell(B) - cell(A)
                        let r = if sx == 1 { d } else { (-d.0, -d.1) };
                        let s: T = OFF.iter().map(|o| self.bravais((r.0 - o.0, r.1 - o.1))).sum();
                        half * s
                    }
                }
            }
            _ => self.bravais(d),
        }
    }

    /// Kernel of the underlying Bravais lattice (triangular for H).
    fn bravais(&self, d: (i64, i64)) -> T {
        if d == (0, 0) {
            return T::zero();
        }
        let key = match self.lattice.kind {
            LatticeKind::Hypercubic(_) => {
                let (a, b) = (d.0.abs(), d.1.abs());
                (a.max(b), a.min(b))
            }
            _ => d.max((-d.0, -d.1)),
        };
        if let Some(&v) = self.cache.lock().expect("cache lock").get(&key) {
            return v;
        }
        let v = match self.lattice.kind {
            LatticeKind::Hypercubic(_) => square_kernel(key.0, key.1, self.quad_tol),
            _ => triangular_kernel(key.0, key.1, self.quad_tol),
        };
        self.cache.lock().expect("cache lock").insert(key, v);
        v
    }

    /// `Δa(u) = Σ_{w ~ u} a(w) - deg·a(u)`.
    pub fn laplacian_at(&self, u: &Site) -> T {
        let deg = self.lattice.degree;
        let s: T = (0..deg).map(|d| self.value(&self.lattice.neighbor(u, d))).sum();
        s - T::from_usize_lossy(deg) * self.value(u)
    }

    /// `M̄(e_i, e_j) = ∇∇G_0` at the origin star, with `G_0 = -a / deg`.
    pub fn mbar(&self, i: usize, j: usize) -> Result<T> {
        let deg = self.lattice.degree;
        if i >= deg || j >= deg {
            return Err(Error::InvalidInput(format!("origin star has {deg} edges")));
        }
        let o = Site::origin(2);
        let fp = self.lattice.neighbor(&o, i);
        let gp = self.lattice.neighbor(&o, j);
        let a = |x: &Site, y: &Site| self.between(x, y);
        let s = a(&fp, &gp) - a(&fp, &o) - a(&o, &gp) + a(&o, &o);
        Ok(-s / T::from_usize_lossy(deg))
    }

    /// `M̄` over the whole origin star, in direction order.
    pub fn mbar_matrix(&self) -> Matrix<T> {
        let deg = self.lattice.degree;
        let mut m = Matrix::zeros(deg, deg);
        for i in 0..deg {
            for j in i..deg {
                let v = self.mbar(i, j).expect("in range");
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}

// a(m, n) = (2/π) ∫_0^π (1 - cos(mθ) r^|n|) / sqrt(c² - 1) dθ, c = 2 - cos θ
fn square_kernel<T: Scalar>(m: i64, n: i64, tol: T) -> T {
    let two = T::lit(2.0);
    let (mt, nn) = (T::lit(m as f64), n.unsigned_abs() as i32);
    let f = |t: T| {
        let s = (t / two).sin();
        if s <= T::zero() {
            // finite limit at θ = 0 is |n|
            return T::lit(nn as f64);
        }
        let c = two - t.cos();
        let root = two.sqrt() * s * (T::lit(3.0) - t.cos()).sqrt();
        let r = (c + root).recip();
        (T::one() - (mt * t).cos() * r.powi(nn)) / root
    };
    let res = integrate(f, T::zero(), T::PI(), tol * T::PI() / two);
    res.value * two / T::PI()
}

// a_T(m, n) = (3/π) ∫_0^π (1 - cos((m + n/2)θ) ρ^|n|) / sqrt(A² - B²) dθ,
// A = 3 - cos θ, B = 2 cos(θ/2)
fn triangular_kernel<T: Scalar>(m: i64, n: i64, tol: T) -> T {
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let phase = T::lit(m as f64 + n as f64 / 2.0);
    let nn = n.unsigned_abs() as i32;
    let f = |t: T| {
        let s = (t / two).sin();
        if s <= T::zero() {
            return T::lit(nn as f64 / 2.0);
        }
        let a = three - t.cos();
        let b = two * (t / two).cos();
        let root = two.sqrt() * s * (T::lit(7.0) - t.cos()).sqrt();
        let rho = b / (a + root);
        (T::one() - (phase * t).cos() * rho.powi(nn)) / root
    };
    let res = integrate(f, T::zero(), T::PI(), tol * T::PI() / three);
    res.value * three / T::PI()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn site(m: i64, n: i64) -> Site {
        Site::new(vec![m, n])
    }

    #[test]
    fn square_known_values() {
        let k = PotentialKernel::<f64>::new(&LatticeSpec::square()).unwrap();
        let pi = std::f64::consts::PI;
        assert_eq!(k.value(&site(0, 0)), 0.0);
        assert!((k.value(&site(1, 0)) - 1.0).abs() < 1e-9);
        assert!((k.value(&site(1, 1)) - 4.0 / pi).abs() < 1e-9);
        assert!((k.value(&site(2, 0)) - (4.0 - 8.0 / pi)).abs() < 1e-9);
        assert!((k.value(&site(0, -1)) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn square_mbar() {
        let k = PotentialKernel::<f64>::new(&LatticeSpec::square()).unwrap();
        let pi = std::f64::consts::PI;
        let m = k.mbar_matrix();
        assert!((m[(0, 0)] - 0.5).abs() < 1e-9);
        assert!((m[(0, 1)] - (0.5 - 1.0 / pi)).abs() < 1e-9);
        assert!((m[(0, 2)] - (2.0 / pi - 0.5)).abs() < 1e-9);
        assert!(m.is_symmetric(0.0));
    }

    #[test]
    fn triangular_harmonic() {
        let k = PotentialKernel::<f64>::new(&LatticeSpec::triangular()).unwrap();
        assert!((k.value(&site(1, 0)) - 1.0).abs() < 1e-9);
        assert!((k.laplacian_at(&site(0, 0)) - 6.0).abs() < 1e-8);
        for (m, n) in [(1, 0), (2, -1), (1, 1), (3, 2), (-2, 0)] {
            assert!(k.laplacian_at(&site(m, n)).abs() < 1e-8, "({m},{n})");
        }
    }

    #[test]
    fn hexagonal_two_band() {
        let k = PotentialKernel::<f64>::new(&LatticeSpec::hexagonal()).unwrap();
        let lat = LatticeSpec::hexagonal();
        let o = Site::origin(2);
        for d in 0..3 {
            let b = lat.neighbor(&o, d);
            assert!((k.between(&b, &o) - 1.0).abs() < 1e-9);
        }
        let m = k.mbar_matrix();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 2.0 / 3.0 } else { 1.0 / 6.0 };
                assert!((m[(i, j)] - want).abs() < 1e-9);
            }
        }
        // harmonic at a B site away from the origin
        let b = Site {
            coords: vec![2, 1],
            sublattice: 1,
        };
        assert!(k.laplacian_at(&b).abs() < 1e-8);
        assert!((k.laplacian_at(&o) - 3.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_other_dimensions() {
        assert!(PotentialKernel::<f64>::new(&LatticeSpec::hypercubic(3)).is_err());
    }
}
