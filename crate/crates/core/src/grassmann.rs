//! Finite Grassmann algebra, Berezin integration and the fermionic Gaussian
//! free field. Exponential in size by design: this is the slow exact oracle.
//!
//! Generators are ordered `ψ_0, ψ̄_0, ψ_1, ψ̄_1, …` (`ψ_i ↦ 2i`, `ψ̄_i ↦ 2i+1`)
//! and a monomial is the bitmask of its generators in ascending order.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, FiniteGraph, VertexId};
use crate::green::laplacian;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub const MAX_PAIRS: usize = 14;
const DENSE_PAIRS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
enum Store<T> {
    Dense(Vec<T>),
    Sparse(BTreeMap<u32, T>),
}

/// Element of the Grassmann algebra on `2m` generators.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannElement<T> {
    m: usize,
    store: Store<T>,
}

/// Sign of `a·b` for ascending monomials `a`, `b` with disjoint support.
#[inline]
fn merge_sign(a: u32, b: u32) -> bool {
    // count pairs (i in a, j in b) with i > j
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        inversions += (a >> j >> 1).count_ones();
        rest &= rest - 1;
    }
    inversions % 2 == 1
}

impl<T: Scalar> GrassmannElement<T> {
    pub fn zero(m: usize) -> Self {
        assert!(m <= MAX_PAIRS, "at most {MAX_PAIRS} generator pairs");
        let store = if m <= DENSE_PAIRS {
            Store::Dense(vec![T::zero(); 1 << (2 * m)])
        } else {
            Store::Sparse(BTreeMap::new())
        };
        GrassmannElement { m, store }
    }

    pub fn scalar(m: usize, c: T) -> Self {
        let mut z = Self::zero(m);
        z.add_at(0, c);
        z
    }

    pub fn one(m: usize) -> Self {
        Self::scalar(m, T::one())
    }

    /// Single generator by raw index `0..2m`.
    pub fn generator(m: usize, idx: usize) -> Self {
        assert!(idx < 2 * m, "generator index out of range");
        let mut z = Self::zero(m);
        z.add_at(1 << idx, T::one());
        z
    }

    pub fn psi(m: usize, i: usize) -> Self {
        Self::generator(m, 2 * i)
    }

    pub fn psibar(m: usize, i: usize) -> Self {
        Self::generator(m, 2 * i + 1)
    }

    /// Number of generator pairs.
    pub fn pairs(&self) -> usize {
        self.m
    }

    pub fn coefficient(&self, mask: u32) -> T {
        match &self.store {
            Store::Dense(v) => v[mask as usize],
            Store::Sparse(s) => s.get(&mask).copied().unwrap_or_else(T::zero),
        }
    }

    fn add_at(&mut self, mask: u32, c: T) {
        match &mut self.store {
            Store::Dense(v) => v[mask as usize] = v[mask as usize] + c,
            Store::Sparse(s) => {
                let e = s.entry(mask).or_insert_with(T::zero);
                *e = *e + c;
            }
        }
    }

    /// Non-zero terms in increasing mask order.
    pub fn terms(&self) -> Vec<(u32, T)> {
        match &self.store {
            Store::Dense(v) => v
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != T::zero())
                .map(|(i, &c)| (i as u32, c))
                .collect(),
            Store::Sparse(s) => s
                .iter()
                .filter(|(_, c)| **c != T::zero())
                .map(|(&k, &c)| (k, c))
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms().is_empty()
    }

    pub fn scale(&self, c: T) -> Self {
        let mut out = Self::zero(self.m);
        for (k, v) in self.terms() {
            out.add_at(k, v * c);
        }
        out
    }

    fn combine(&self, other: &Self, sign: T) -> Result<Self> {
        if self.m != other.m {
            return Err(Error::Dimension(format!(
                "algebras with {} and {} pairs",
                self.m, other.m
            )));
        }
        let mut out = self.clone();
        for (k, v) in other.terms() {
            out.add_at(k, v * sign);
        }
        Ok(out)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.combine(other, T::one())
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -T::one())
    }

    /// Product with parity signs; overlapping monomials vanish.
    pub fn gmul(&self, other: &Self) -> Result<Self> {
        if self.m != other.m {
            return Err(Error::Dimension(format!(
                "algebras with {} and {} pairs",
                self.m, other.m
            )));
        }
        let mut out = Self::zero(self.m);
        let rhs = other.terms();
        for (a, ca) in self.terms() {
            for &(b, cb) in &rhs {
                if a & b != 0 {
                    continue;
                }
                let p = ca * cb;
                out.add_at(a | b, if merge_sign(a, b) { -p } else { p });
            }
        }
        Ok(out)
    }

    /// `∂_{ξ_{2m}} ⋯ ∂_{ξ_1} F`: the coefficient of `ξ_1 ξ_2 ⋯ ξ_{2m}`.
    ///
    /// The fermionic-field order `Π_v ∂_{ψ̄_v} ∂_{ψ_v}` gives the same value,
    /// since each pair of derivatives is even.
    pub fn berezin(&self) -> T {
        let top = if self.m == 0 {
            0
        } else {
            (1u64 << (2 * self.m)) as u32 - 1
        };
        self.coefficient(top)
    }
}

macro_rules! op {
    ($tr:ident, $f:ident, $via:ident) => {
        impl<T: Scalar> $tr for &GrassmannElement<T> {
            type Output = GrassmannElement<T>;
            fn $f(self, rhs: Self) -> GrassmannElement<T> {
                self.$via(rhs).expect("same algebra")
            }
        }
        impl<T: Scalar> $tr for GrassmannElement<T> {
            type Output = GrassmannElement<T>;
            fn $f(self, rhs: Self) -> GrassmannElement<T> {
                (&self).$via(&rhs).expect("same algebra")
            }
        }
    };
}
op!(Add, add, try_add);
op!(Sub, sub, try_sub);
op!(Mul, mul, gmul);

impl<T: Scalar> Neg for GrassmannElement<T> {
    type Output = GrassmannElement<T>;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

/// Free function form of the product.
pub fn gmul<T: Scalar>(a: &GrassmannElement<T>, b: &GrassmannElement<T>) -> Result<GrassmannElement<T>> {
    a.gmul(b)
}

pub fn berezin<T: Scalar>(f: &GrassmannElement<T>) -> T {
    f.berezin()
}

/// Multiplies `acc` in place by `1 + c·ξ_a ξ_b` (`a < b`), which is linear in the store.
fn mul_pair_factor<T: Scalar>(acc: &GrassmannElement<T>, a: usize, b: usize, c: T) -> GrassmannElement<T> {
    let pair = (1u32 << a) | (1u32 << b);
    let mut out = acc.clone();
    for (k, v) in acc.terms() {
        if k & pair != 0 {
            continue;
        }
        let p = v * c;
        out.add_at(k | pair, if merge_sign(k, pair) { -p } else { p });
    }
    out
}

/// `exp(Σ_ij A_ij ψ_i ψ̄_j)`, expanded exactly as `Π_ij (1 + A_ij ψ_i ψ̄_j)`.
pub fn exp_bilinear<T: Scalar>(a: &Matrix<T>) -> Result<GrassmannElement<T>> {
    if !a.is_square() {
        return Err(Error::Dimension("bilinear form must be square".into()));
    }
    let m = a.rows();
    if m > MAX_PAIRS {
        return Err(Error::guard("Grassmann generator pairs", m, MAX_PAIRS));
    }
    let mut acc = GrassmannElement::one(m);
    for i in 0..m {
        for j in 0..m {
            let c = a[(i, j)];
            if c != T::zero() {
                // ψ_i ψ̄_j with indices 2i, 2j+1; reorder if needed
                let (x, y) = (2 * i, 2 * j + 1);
                let (lo, hi, s) = if x < y { (x, y, c) } else { (y, x, -c) };
                acc = mul_pair_factor(&acc, lo, hi, s);
            }
        }
    }
    Ok(acc)
}

/// `Σ_i ψ_i v_i` and `Σ_j ψ̄_j v_j`.
fn psi_comb<T: Scalar>(m: usize, coeffs: impl Iterator<Item = T>, bar: bool) -> GrassmannElement<T> {
    let mut out = GrassmannElement::zero(m);
    for (i, c) in coeffs.enumerate() {
        if c != T::zero() {
            out.add_at(1 << (2 * i + usize::from(bar)), c);
        }
    }
    out
}

/// Both sides of Wick's theorem, part 1:
/// `∫ Π_α ψ_{i_α} ψ̄_{j_α} exp((ψ, Aψ̄))` and `det(A)·det(A^{-T})_{IJ}`.
pub fn wick_check<T: Scalar>(a: &Matrix<T>, i: &[usize], j: &[usize]) -> Result<(T, T)> {
    let m = a.rows();
    if i.iter().chain(j).any(|&x| x >= m) {
        return Err(Error::InvalidInput("index outside the matrix".into()));
    }
    let w = exp_bilinear(a)?;
    let mut f = GrassmannElement::one(m);
    let r = i.len().max(j.len());
    for k in 0..r {
        if let Some(&x) = i.get(k) {
            f = f.gmul(&GrassmannElement::psi(m, x))?;
        }
        if let Some(&y) = j.get(k) {
            f = f.gmul(&GrassmannElement::psibar(m, y))?;
        }
    }
    let lhs = f.gmul(&w)?.berezin();
    if i.len() != j.len() {
        return Ok((lhs, T::zero()));
    }
    let lu = a.lu()?;
    let inv_t = lu.inverse()?.transpose();
    let rhs = lu.det() * inv_t.submatrix(i, j).det()?;
    Ok((lhs, rhs))
}

/// Both sides of Wick's theorem, part 2:
/// `∫ Π_α (ψᵀC)_α (Bψ̄)_α exp((ψ, Aψ̄))` and `det(A)·det(B A^{-1} C)`.
pub fn wick_check_bilinear<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, c: &Matrix<T>) -> Result<(T, T)> {
    let m = a.rows();
    let r = b.rows();
    if b.cols() != m || c.rows() != m || c.cols() != r {
        return Err(Error::Dimension("B must be r x m and C m x r".into()));
    }
    let w = exp_bilinear(a)?;
    let mut f = GrassmannElement::one(m);
    for al in 0..r {
        let left = psi_comb(m, (0..m).map(|i| c[(i, al)]), false);
        let right = psi_comb(m, (0..m).map(|j| b[(al, j)]), true);
        f = f.gmul(&left)?.gmul(&right)?;
    }
    let lhs = f.gmul(&w)?.berezin();
    let lu = a.lu()?;
    let rhs = lu.det() * b.matmul(&lu.inverse()?).matmul(c).det()?;
    Ok((lhs, rhs))
}

/// Worst deviations of both Wick identities over seeded random instances.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct WickAudit {
    pub m: usize,
    pub trials: usize,
    pub max_dev_minor: f64,
    pub max_dev_bilinear: f64,
}

impl WickAudit {
    pub fn max_dev(&self) -> f64 {
        self.max_dev_minor.max(self.max_dev_bilinear)
    }
}

/// `trials` instances with `A = I + U(-½, ½)^{m×m}`, random equal-size index
/// sets `I, J`, and random `B` (`r × m`), `C` (`m × r`) with `1 ≤ r ≤ m`.
/// Deviations are relative to `max(1, |rhs|)`.
pub fn wick_audit(m: usize, trials: usize, seed: u64) -> Result<WickAudit> {
    use rand::seq::index::sample;
    use rand::{Rng, SeedableRng};
    if m == 0 || m > MAX_PAIRS {
        return Err(Error::InvalidInput(format!("m must lie in 1..={MAX_PAIRS}")));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (mut d1, mut d2) = (0f64, 0f64);
    let dev = |(l, r): (f64, f64)| (l - r).abs() / r.abs().max(1.0);
    for _ in 0..trials {
        let a = Matrix::from_fn(
            m,
            m,
            |i, j| if i == j { 1.0 } else { 0.0 } + rng.random_range(-0.5..0.5),
        );
        let k = rng.random_range(0..=m);
        let i = sample(&mut rng, m, k).into_vec();
        let j = sample(&mut rng, m, k).into_vec();
        d1 = d1.max(dev(wick_check(&a, &i, &j)?));
        let r = rng.random_range(1..=m);
        let b = Matrix::from_fn(r, m, |_, _| rng.random_range(-1.0..1.0));
        let c = Matrix::from_fn(m, r, |_, _| rng.random_range(-1.0..1.0));
        d2 = d2.max(dev(wick_check_bilinear(&a, &b, &c)?));
    }
    Ok(WickAudit {
        m,
        trials,
        max_dev_minor: d1,
        max_dev_bilinear: d2,
    })
}

/// The normalized state `⟨F⟩ = det(-Δ_Λ)^{-1} ∫ exp((ψ, -Δ_Λ ψ̄)) F`.
///
/// Generator pairs sit on the interior vertices; `ψ` vanishes on the boundary.
#[derive(Debug, Clone)]
pub struct FermionicGff<T> {
    pair_of: Vec<Option<usize>>,
    weight: GrassmannElement<T>,
    norm: T,
}

impl<T: Scalar> FermionicGff<T> {
    /// Dirichlet state on a graph with boundary.
    pub fn new(graph: &FiniteGraph) -> Result<Self> {
        if !graph.has_boundary() {
            return Err(Error::NoBoundary);
        }
        Self::build(graph, &graph.interior_vertices())
    }

    /// State with `ψ` pinned to zero at `root`, for graphs without boundary.
    pub fn grounded(graph: &FiniteGraph, root: VertexId) -> Result<Self> {
        graph.check_vertex(root)?;
        if graph.has_boundary() {
            return Err(Error::InvalidInput(
                "graph has a boundary; use the Dirichlet state".into(),
            ));
        }
        let keep: Vec<_> = (0..graph.vertex_count()).filter(|&v| v != root).collect();
        Self::build(graph, &keep)
    }

    fn build(graph: &FiniteGraph, keep: &[VertexId]) -> Result<Self> {
        if keep.len() > MAX_PAIRS {
            return Err(Error::guard("Grassmann generator pairs", keep.len(), MAX_PAIRS));
        }
        let mut pair_of = vec![None; graph.vertex_count()];
        for (i, &v) in keep.iter().enumerate() {
            pair_of[v] = Some(i);
        }
        let lap = laplacian::<T>(graph);
        let a = Matrix::from_fn(keep.len(), keep.len(), |i, j| -lap[(keep[i], keep[j])]);
        let norm = a.det()?;
        if norm == T::zero() {
            return Err(Error::Singular);
        }
        Ok(FermionicGff {
            pair_of,
            weight: exp_bilinear(&a)?,
            norm,
        })
    }

    pub fn pairs(&self) -> usize {
        self.weight.pairs()
    }

    pub fn psi(&self, v: VertexId) -> GrassmannElement<T> {
        match self.pair_of[v] {
            Some(i) => GrassmannElement::psi(self.pairs(), i),
            None => GrassmannElement::zero(self.pairs()),
        }
    }

    pub fn psibar(&self, v: VertexId) -> GrassmannElement<T> {
        match self.pair_of[v] {
            Some(i) => GrassmannElement::psibar(self.pairs(), i),
            None => GrassmannElement::zero(self.pairs()),
        }
    }

    /// `ζ(e) = (ψ(e⁺) - ψ(e⁻))(ψ̄(e⁺) - ψ̄(e⁻))`.
    pub fn zeta(&self, e: DirectedEdge) -> GrassmannElement<T> {
        let d = self.psi(e.tip) - self.psi(e.tail);
        let db = self.psibar(e.tip) - self.psibar(e.tail);
        d * db
    }

    /// `Π_{f ∈ S} ζ(f) Π_{g ∈ G} (1 - ζ(g))`.
    pub fn edge_event(&self, present: &[DirectedEdge], absent: &[DirectedEdge]) -> GrassmannElement<T> {
        let one = GrassmannElement::one(self.pairs());
        let mut f = one.clone();
        for &e in present {
            f = f * self.zeta(e);
        }
        for &e in absent {
            f = f * (&one - &self.zeta(e));
        }
        f
    }

    /// `X_v^{(k)} = Σ_{E ⊆ E_v, |E| = k} Π_{e ∈ E} ζ(e)`.
    pub fn x_field(&self, star: &[DirectedEdge], k: usize) -> GrassmannElement<T> {
        let mut out = GrassmannElement::zero(self.pairs());
        for mask in 0u32..(1 << star.len()) {
            if mask.count_ones() as usize == k {
                let sel: Vec<_> = (0..star.len())
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| star[i])
                    .collect();
                out = out + self.edge_event(&sel, &[]);
            }
        }
        out
    }

    /// `Y_v = Π_{e ∈ E_v} (1 - ζ(e))`.
    pub fn y_field(&self, star: &[DirectedEdge]) -> GrassmannElement<T> {
        self.edge_event(&[], star)
    }

    /// `(Σ_{e ∈ E_v} ζ(e))^m`.
    pub fn x_power(&self, star: &[DirectedEdge], m: usize) -> GrassmannElement<T> {
        let mut x = GrassmannElement::zero(self.pairs());
        for &e in star {
            x = x + self.zeta(e);
        }
        let mut out = GrassmannElement::one(self.pairs());
        for _ in 0..m {
            out = out * x.clone();
        }
        out
    }

    pub fn expectation(&self, f: &GrassmannElement<T>) -> Result<T> {
        Ok(self.weight.gmul(f)?.berezin() / self.norm)
    }
}

/// `⟨F⟩` on a graph with Dirichlet boundary.
pub fn fgff_expectation<T: Scalar>(graph: &FiniteGraph, f: &GrassmannElement<T>) -> Result<T> {
    FermionicGff::new(graph)?.expectation(f)
}
