//! Permutations of star-tagged edge sets: the multigraph `V_τ`,
//! connected/bare classification, compatible bare permutations and surgery.
//!
//! Edges are abstract elements `0..n`; each carries the index of the star
//! (vertex) it belongs to and a direction label within that star.

use crate::error::{Error, Result};
use crate::scalar::RationalCosine;

pub const DEFAULT_MAX_PERM: usize = 9;

/// Star membership and direction labels of a finite edge set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarSet {
    owner: Vec<usize>,
    dir: Vec<usize>,
    p: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl StarSet {
    /// `owner[i]` is the star of element `i`, `dir[i]` its direction, and
    /// `p[v]` the number of directions of star `v` in its plane.
    pub fn new(owner: Vec<usize>, dir: Vec<usize>, p: Vec<usize>) -> Result<Self> {
        if owner.len() != dir.len() {
            return Err(Error::Dimension("owner and direction lists differ in length".into()));
        }
        let nv = p.len();
        let mut members = vec![Vec::new(); nv];
        for (i, (&o, &d)) in owner.iter().zip(&dir).enumerate() {
            if o >= nv {
                return Err(Error::InvalidInput(format!("element {i} tagged with unknown star {o}")));
            }
            if d >= p[o] {
                return Err(Error::InvalidInput(format!(
                    "element {i} has direction {d} outside 0..{}",
                    p[o]
                )));
            }
            if members[o].iter().any(|&j| dir[j] == d) {
                return Err(Error::InvalidInput(format!("direction {d} repeated in star {o}")));
            }
            members[o].push(i);
        }
        if members.iter().any(|m| m.is_empty()) {
            return Err(Error::InvalidInput("every star must be non-empty".into()));
        }
        Ok(StarSet { owner, dir, p, members })
    }

    /// Full stars of the given sizes, elements numbered star by star,
    /// direction `i` for the `i`-th element and `p` equal to the size.
    pub fn uniform(sizes: &[usize]) -> Result<Self> {
        let mut owner = Vec::new();
        let mut dir = Vec::new();
        for (v, &s) in sizes.iter().enumerate() {
            owner.extend(std::iter::repeat_n(v, s));
            dir.extend(0..s);
        }
        Self::new(owner, dir, sizes.to_vec())
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    pub fn vertices(&self) -> usize {
        self.members.len()
    }

    pub fn owner(&self, i: usize) -> usize {
        self.owner[i]
    }

    pub fn dir(&self, i: usize) -> usize {
        self.dir[i]
    }

    pub fn plane(&self, v: usize) -> usize {
        self.p[v]
    }

    pub fn star(&self, v: usize) -> &[usize] {
        &self.members[v]
    }

    /// Element of star `v` with direction `d`, if present.
    pub fn find(&self, v: usize, d: usize) -> Option<usize> {
        self.members[v].iter().copied().find(|&i| self.dir[i] == d)
    }
}

/// Bijection on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgePermutation {
    map: Vec<usize>,
}

impl EdgePermutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &x in &map {
            if x >= map.len() || std::mem::replace(&mut seen[x], true) {
                return Err(Error::InvalidInput("not a bijection".into()));
            }
        }
        Ok(EdgePermutation { map })
    }

    pub fn identity(n: usize) -> Self {
        EdgePermutation { map: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &x) in self.map.iter().enumerate() {
            inv[x] = i;
        }
        EdgePermutation { map: inv }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        EdgePermutation {
            map: other.map.iter().map(|&x| self.map[x]).collect(),
        }
    }

    pub fn cycle_count(&self) -> usize {
        cycle_count(&self.map)
    }

    /// `(-1)^{n - #cycles}`.
    pub fn sign(&self) -> i32 {
        if (self.map.len() - self.cycle_count()).is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

fn cycle_count(map: &[usize]) -> usize {
    let mut seen = vec![false; map.len()];
    let mut cycles = 0;
    for s in 0..map.len() {
        if !seen[s] {
            cycles += 1;
            let mut x = s;
            while !seen[x] {
                seen[x] = true;
                x = map[x];
            }
        }
    }
    cycles
}

/// Permutation of a subset of elements, stored as parallel domain/image lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialPerm {
    pub domain: Vec<usize>,
    pub image: Vec<usize>,
}

impl PartialPerm {
    pub fn get(&self, f: usize) -> Option<usize> {
        self.domain.iter().position(|&d| d == f).map(|i| self.image[i])
    }

    /// Sign as a permutation of its own domain.
    pub fn sign(&self) -> i32 {
        let pos = |x: usize| self.domain.iter().position(|&d| d == x).expect("closed under the map");
        let local: Vec<usize> = self.image.iter().map(|&x| pos(x)).collect();
        if (local.len() - cycle_count(&local)).is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    fn is_permutation(&self) -> bool {
        let mut a = self.domain.clone();
        let mut b = self.image.clone();
        a.sort_unstable();
        b.sort_unstable();
        a == b && a.windows(2).all(|w| w[0] != w[1])
    }
}

/// Multi-edge counts of `V_τ`: one edge per cross-star mapping `f ↦ τ(f)`.
pub fn tau_multigraph(stars: &StarSet, tau: &EdgePermutation) -> Vec<Vec<usize>> {
    let nv = stars.vertices();
    let mut adj = vec![vec![0; nv]; nv];
    for f in 0..tau.len() {
        let (a, b) = (stars.owner(f), stars.owner(tau.apply(f)));
        if a != b {
            adj[a][b] += 1;
            adj[b][a] += 1;
        }
    }
    adj
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub connected: bool,
    pub bare: bool,
    /// Induced cyclic vertex permutation, for bare `τ` on two or more vertices.
    pub sigma: Option<Vec<usize>>,
    /// Number of cross-star mappings (edges of `V_τ`).
    pub cross: usize,
}

fn check_len(stars: &StarSet, tau: &EdgePermutation) -> Result<()> {
    if stars.len() != tau.len() {
        return Err(Error::Dimension(format!(
            "{} tagged edges, permutation on {}",
            stars.len(),
            tau.len()
        )));
    }
    Ok(())
}

fn multigraph_connected(adj: &[Vec<usize>]) -> bool {
    let nv = adj.len();
    let mut seen = vec![false; nv];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for w in 0..nv {
            if adj[v][w] > 0 && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

pub fn classify(stars: &StarSet, tau: &EdgePermutation) -> Result<Classification> {
    check_len(stars, tau)?;
    let nv = stars.vertices();
    let adj = tau_multigraph(stars, tau);
    let cross = adj.iter().map(|r| r.iter().sum::<usize>()).sum::<usize>() / 2;
    if nv == 1 {
        return Ok(Classification {
            connected: true,
            bare: true,
            sigma: None,
            cross,
        });
    }
    let connected = multigraph_connected(&adj);
    let bare = connected && adj.iter().all(|r| r.iter().sum::<usize>() == 2);
    let sigma = bare.then(|| {
        let mut s = vec![0; nv];
        for f in 0..tau.len() {
            let (a, b) = (stars.owner(f), stars.owner(tau.apply(f)));
            if a != b {
                s[a] = b;
            }
        }
        s
    });
    Ok(Classification {
        connected,
        bare,
        sigma,
        cross,
    })
}

/// Visits every permutation of `0..n` in lexicographic order.
pub fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize])) {
    let mut map = vec![0; n];
    let mut used = vec![false; n];
    fn go(i: usize, map: &mut Vec<usize>, used: &mut Vec<bool>, visit: &mut impl FnMut(&[usize])) {
        if i == map.len() {
            visit(map);
            return;
        }
        for x in 0..map.len() {
            if !used[x] {
                used[x] = true;
                map[i] = x;
                go(i + 1, map, used, visit);
                used[x] = false;
            }
        }
    }
    go(0, &mut map, &mut used, &mut visit);
}

/// All connected permutations of the star-tagged set.
pub fn enum_connected(stars: &StarSet, max_perm: usize) -> Result<Vec<EdgePermutation>> {
    if stars.len() > max_perm {
        return Err(Error::guard("permutation domain", stars.len(), max_perm));
    }
    let mut out = Vec::new();
    for_each_permutation(stars.len(), |m| {
        let tau = EdgePermutation { map: m.to_vec() };
        if classify(stars, &tau).expect("sizes match").connected {
            out.push(tau);
        }
    });
    Ok(out)
}

/// Entry directions `η(v)`, angle indices `α(v)` and the cyclic `σ`.
///
/// The exit edge of `v` is the one with direction `η(v) + α(v) mod p_v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prescription {
    pub entry_dir: Vec<usize>,
    pub alpha: Vec<usize>,
    pub sigma: Vec<usize>,
}

impl Prescription {
    fn endpoints(&self, stars: &StarSet) -> Result<Option<Vec<(usize, usize)>>> {
        let nv = stars.vertices();
        if self.entry_dir.len() != nv || self.alpha.len() != nv || self.sigma.len() != nv {
            return Err(Error::Dimension("prescription does not cover every star".into()));
        }
        if nv < 2 || !is_cyclic(&self.sigma) {
            return Err(Error::InvalidInput(
                "sigma must be a single cycle through all vertices".into(),
            ));
        }
        let mut out = Vec::with_capacity(nv);
        for v in 0..nv {
            let p = stars.plane(v);
            let entry = stars.find(v, self.entry_dir[v] % p);
            let exit = stars.find(v, (self.entry_dir[v] + self.alpha[v]) % p);
            match (entry, exit) {
                (Some(a), Some(b)) => out.push((a, b)),
                _ => return Ok(None),
            }
        }
        Ok(Some(out))
    }
}

/// True iff `sigma` is one cycle through every vertex.
pub fn is_cyclic(sigma: &[usize]) -> bool {
    let n = sigma.len();
    if n == 0 || sigma.iter().any(|&x| x >= n) {
        return false;
    }
    let mut x = 0;
    for step in 1..=n {
        x = sigma[x];
        if x == 0 {
            return step == n;
        }
    }
    false
}

/// Bare permutations entering each `v` at `η(v)`, leaving at `η^α(v)` towards
/// `σ(v)`. Empty when a prescribed edge is missing from the set.
pub fn enum_bare_compatible(stars: &StarSet, presc: &Prescription, max_perm: usize) -> Result<Vec<EdgePermutation>> {
    if stars.len() > max_perm {
        return Err(Error::guard("permutation domain", stars.len(), max_perm));
    }
    let ends = match presc.endpoints(stars)? {
        Some(e) => e,
        None => return Ok(Vec::new()),
    };
    let nv = stars.vertices();
    // per star: all bijections E_v∖{exit} -> E_v∖{entry}
    let mut local: Vec<Vec<Vec<(usize, usize)>>> = Vec::with_capacity(nv);
    for (v, &(entry, exit)) in ends.iter().enumerate().take(nv) {
        let from: Vec<usize> = stars.star(v).iter().copied().filter(|&f| f != exit).collect();
        let to: Vec<usize> = stars.star(v).iter().copied().filter(|&f| f != entry).collect();
        let mut maps = Vec::new();
        for_each_permutation(from.len(), |m| {
            maps.push(from.iter().zip(m).map(|(&f, &j)| (f, to[j])).collect());
        });
        local.push(maps);
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; nv];
    loop {
        let mut map = vec![usize::MAX; stars.len()];
        for v in 0..nv {
            for &(f, g) in &local[v][idx[v]] {
                map[f] = g;
            }
            map[ends[v].1] = ends[presc.sigma[v]].0;
        }
        out.push(EdgePermutation { map });
        let mut k = 0;
        loop {
            if k == nv {
                return Ok(out);
            }
            idx[k] += 1;
            if idx[k] < local[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Local/global decomposition of a bare permutation at one vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurgeryData {
    pub v: usize,
    /// `η(v)`: the element of `E_v` entered from outside.
    pub entry: usize,
    /// `η^α(v)`: the element of `E_v` mapped outside.
    pub exit: usize,
    pub alpha: usize,
    /// `ω_v^τ` on `E_v ∖ {η(v)}`.
    pub omega: PartialPerm,
    /// `τ ∖ ω_v^τ` on `(E ∖ E_v) ∪ {η(v)}`.
    pub tau_minus: PartialPerm,
}

pub fn surgery(stars: &StarSet, tau: &EdgePermutation, v: usize) -> Result<SurgeryData> {
    let c = classify(stars, tau)?;
    if !c.bare || stars.vertices() < 2 {
        return Err(Error::NotBare);
    }
    if v >= stars.vertices() {
        return Err(Error::InvalidInput(format!("no star {v}")));
    }
    let inv = tau.inverse();
    let star = stars.star(v);
    let exit = *star.iter().find(|&&f| stars.owner(tau.apply(f)) != v).expect("bare");
    let entry = *star.iter().find(|&&f| stars.owner(inv.apply(f)) != v).expect("bare");
    let p = stars.plane(v);
    let alpha = (stars.dir(exit) + p - stars.dir(entry)) % p;

    let dom: Vec<usize> = star.iter().copied().filter(|&f| f != entry).collect();
    let img = dom
        .iter()
        .map(|&f| {
            if f == exit && alpha != 0 {
                tau.apply(entry)
            } else {
                tau.apply(f)
            }
        })
        .collect();
    let omega = PartialPerm {
        domain: dom,
        image: img,
    };

    let mut dom: Vec<usize> = (0..tau.len()).filter(|&f| stars.owner(f) != v).collect();
    dom.push(entry);
    let img = dom
        .iter()
        .map(|&f| if f == entry { tau.apply(exit) } else { tau.apply(f) })
        .collect();
    let tau_minus = PartialPerm {
        domain: dom,
        image: img,
    };
    debug_assert!(omega.is_permutation() && tau_minus.is_permutation());
    Ok(SurgeryData {
        v,
        entry,
        exit,
        alpha,
        omega,
        tau_minus,
    })
}

/// Rebuilds `τ` from its surgery data.
pub fn recombine(stars: &StarSet, s: &SurgeryData) -> EdgePermutation {
    let mut map = vec![usize::MAX; stars.len()];
    for (&f, &g) in s.tau_minus.domain.iter().zip(&s.tau_minus.image) {
        if f != s.entry {
            map[f] = g;
        }
    }
    for (&f, &g) in s.omega.domain.iter().zip(&s.omega.image) {
        if f != s.exit || s.alpha == 0 {
            map[f] = g;
        }
    }
    if s.alpha != 0 {
        map[s.entry] = s.omega.get(s.exit).expect("exit in domain");
    }
    map[s.exit] = s.tau_minus.get(s.entry).expect("entry in domain");
    EdgePermutation { map }
}

/// `sign(τ) = (-1)^{1_{α≠0}} sign(τ∖ω) sign(ω)`.
pub fn sign_identity_holds(tau: &EdgePermutation, s: &SurgeryData) -> bool {
    let extra = if s.alpha != 0 { -1 } else { 1 };
    tau.sign() == extra * s.tau_minus.sign() * s.omega.sign()
}

/// Factor multisets of `Π_{f ∈ E_v∖{η^α}} K(f, τ(f))` and
/// `Π_{f ∈ E_v∖{η}} K^α(f, ω(f))`, where `K^α` replaces the row of `η^α` by
/// the row of `η`. `kernel` is indexed by direction.
pub fn surgery_factor_lists(
    stars: &StarSet,
    tau: &EdgePermutation,
    s: &SurgeryData,
    kernel: &[Vec<f64>],
) -> (Vec<f64>, Vec<f64>) {
    let k = |f: usize, g: usize| kernel[stars.dir(f)][stars.dir(g)];
    let k_alpha = |f: usize, g: usize| if f == s.exit { k(s.entry, g) } else { k(f, g) };
    let mut lhs: Vec<f64> = stars
        .star(s.v)
        .iter()
        .filter(|&&f| f != s.exit)
        .map(|&f| k(f, tau.apply(f)))
        .collect();
    let mut rhs: Vec<f64> = s
        .omega
        .domain
        .iter()
        .zip(&s.omega.image)
        .map(|(&f, &g)| k_alpha(f, g))
        .collect();
    lhs.sort_by(f64::total_cmp);
    rhs.sort_by(f64::total_cmp);
    (lhs, rhs)
}

/// `γ_α = cos(2πα/p)` for the star of `v`.
pub fn gamma(stars: &StarSet, v: usize, alpha: usize) -> Option<RationalCosine> {
    RationalCosine::of_turn(alpha, stars.plane(v))
}

/// Checks that `τ ↦ ω_v^τ` over compatible `τ` hits every permutation of
/// `E_v ∖ {η(v)}`, with equal fibres, and that `τ` restricted to `E_v` is
/// recovered from `ω` and the prescription alone.
pub fn omega_bijection_check(stars: &StarSet, presc: &Prescription, v: usize, max_perm: usize) -> Result<bool> {
    let taus = enum_bare_compatible(stars, presc, max_perm)?;
    let ends = match presc.endpoints(stars)? {
        Some(e) => e,
        None => return Ok(taus.is_empty()),
    };
    let (entry, exit) = ends[v];
    let target = ends[presc.sigma[v]].0;
    let mut counts: std::collections::BTreeMap<Vec<usize>, usize> = Default::default();
    for tau in &taus {
        let s = surgery(stars, tau, v)?;
        if s.entry != entry || s.exit != exit {
            return Ok(false);
        }
        // local reconstruction of τ on E_v
        for &f in stars.star(v) {
            let want = tau.apply(f);
            let got = if f == exit {
                target
            } else if f == entry && s.alpha != 0 {
                s.omega.get(exit).expect("exit in domain")
            } else {
                s.omega.get(f).expect("in domain")
            };
            if got != want {
                return Ok(false);
            }
        }
        *counts.entry(s.omega.image.clone()).or_default() += 1;
    }
    let size = stars.star(v).len();
    let expect_images: usize = (1..size).product();
    let fibre: usize = (0..stars.vertices())
        .filter(|&w| w != v)
        .map(|w| (1..stars.star(w).len()).product::<usize>())
        .product();
    Ok(counts.len() == expect_images && counts.values().all(|&c| c == fibre))
}

/// Outcome of an exhaustive identity sweep.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct AuditReport {
    pub check: String,
    pub cases: usize,
    pub failures: usize,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

/// Every bare permutation of the set, at every vertex: surgery round trip,
/// the sign identity and the factor identity for the direction kernel.
pub fn audit_surgery(stars: &StarSet, kernel: &[Vec<f64>], max_perm: usize) -> Result<AuditReport> {
    if stars.len() > max_perm {
        return Err(Error::guard("permutation domain", stars.len(), max_perm));
    }
    let pmax = (0..stars.vertices()).map(|v| stars.plane(v)).max().unwrap_or(0);
    if kernel.len() < pmax || kernel.iter().any(|r| r.len() < pmax) {
        return Err(Error::Dimension(format!(
            "direction kernel must be at least {pmax} x {pmax}"
        )));
    }
    let (mut cases, mut failures) = (0, 0);
    let mut err = None;
    for_each_permutation(stars.len(), |m| {
        let tau = EdgePermutation { map: m.to_vec() };
        match classify(stars, &tau) {
            Ok(c) if c.bare && stars.vertices() >= 2 => {}
            Ok(_) => return,
            Err(e) => {
                err.get_or_insert(e);
                return;
            }
        }
        for v in 0..stars.vertices() {
            cases += 1;
            let s = match surgery(stars, &tau, v) {
                Ok(s) => s,
                Err(e) => {
                    err.get_or_insert(e);
                    return;
                }
            };
            let (l, r) = surgery_factor_lists(stars, &tau, &s, kernel);
            if recombine(stars, &s) != tau || !sign_identity_holds(&tau, &s) || l != r {
                failures += 1;
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(AuditReport {
            check: "surgery".into(),
            cases,
            failures,
        }),
    }
}

/// Every prescription `(η, α, σ)` and vertex: the `ω` bijection check.
pub fn audit_bijection(stars: &StarSet) -> Result<AuditReport> {
    let nv = stars.vertices();
    if nv < 2 {
        return Err(Error::InvalidInput("need at least two stars".into()));
    }
    let mut sigmas = Vec::new();
    for_each_permutation(nv, |s| {
        if is_cyclic(s) {
            sigmas.push(s.to_vec());
        }
    });
    // mixed-radix sweep over entry directions and angle indices
    let radix: Vec<usize> = (0..nv)
        .map(|v| stars.plane(v))
        .chain((0..nv).map(|v| stars.plane(v)))
        .collect();
    let (mut cases, mut failures) = (0, 0);
    let mut digits = vec![0usize; 2 * nv];
    loop {
        for sigma in &sigmas {
            let presc = Prescription {
                entry_dir: digits[..nv].to_vec(),
                alpha: digits[nv..].to_vec(),
                sigma: sigma.clone(),
            };
            for v in 0..nv {
                cases += 1;
                if !omega_bijection_check(stars, &presc, v, usize::MAX)? {
                    failures += 1;
                }
            }
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                return Ok(AuditReport {
                    check: "bijection".into(),
                    cases,
                    failures,
                });
            }
            digits[i] += 1;
            if digits[i] < radix[i] {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}
