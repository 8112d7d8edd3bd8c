//! Finite graphs, directed edges, lattice geometry and good sets.
//!
//! Vertices are dense indices `0..n` assigned at construction. Lattice-built
//! graphs additionally remember the lattice site of every vertex and the
//! direction index of every neighbour slot, so that the edge star `E_v` comes
//! out in the lattice's natural (counter-clockwise) order.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::RationalCosine;

pub type VertexId = usize;

/// Ordered pair `(tail, tip)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DirectedEdge {
    pub tail: VertexId,
    pub tip: VertexId,
}

impl DirectedEdge {
    pub fn new(tail: VertexId, tip: VertexId) -> Self {
        DirectedEdge { tail, tip }
    }

    pub fn reverse(self) -> Self {
        DirectedEdge {
            tail: self.tip,
            tip: self.tail,
        }
    }

    /// Unordered key `(min, max)`.
    pub fn undirected(self) -> (VertexId, VertexId) {
        (self.tail.min(self.tip), self.tail.max(self.tip))
    }
}

impl std::fmt::Display for DirectedEdge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.tail, self.tip)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LatticeKind {
    Hypercubic(usize),
    Triangular,
    Hexagonal,
}

/// A lattice site: integer coordinates plus a sublattice tag (hexagonal only).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub coords: Vec<i64>,
    pub sublattice: u8,
}

impl Site {
    pub fn new(coords: Vec<i64>) -> Self {
        Site { coords, sublattice: 0 }
    }

    pub fn origin(dim: usize) -> Self {
        Site::new(vec![0; dim])
    }
}

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// Geometry of one of the supported regular lattices.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub degree: usize,
    /// Unit steps `e_1..e_deg` of the origin star, in real space.
    pub edge_vectors: Vec<Vec<f64>>,
    /// Number of edges in a plane through a vertex.
    pub p: usize,
    /// `c_L` as `(numerator, denominator)`.
    pub c_l: (i64, i64),
}

impl LatticeSpec {
    pub fn hypercubic(d: usize) -> Self {
        assert!(d >= 1, "dimension must be positive");
        let mut edge_vectors = Vec::with_capacity(2 * d);
        for sign in [1.0, -1.0] {
            for i in 0..d {
                let mut v = vec![0.0; d];
                v[i] = sign;
                edge_vectors.push(v);
            }
        }
        LatticeSpec {
            kind: LatticeKind::Hypercubic(d),
            degree: 2 * d,
            edge_vectors,
            p: 4,
            c_l: (2, 1),
        }
    }

    pub fn square() -> Self {
        Self::hypercubic(2)
    }

    pub fn triangular() -> Self {
        LatticeSpec {
            kind: LatticeKind::Triangular,
            degree: 6,
            edge_vectors: polar_star(6, 0),
            p: 6,
            c_l: (3, 1),
        }
    }

    pub fn hexagonal() -> Self {
        LatticeSpec {
            kind: LatticeKind::Hexagonal,
            degree: 3,
            edge_vectors: polar_star(3, 0),
            p: 3,
            c_l: (3, 2),
        }
    }

    /// Parses the short names used by the CLI and JSON: `Z2`, `Z3`, `tri`, `hex`.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "Z2" | "z2" | "square" => Ok(Self::square()),
            "tri" | "T" | "triangular" => Ok(Self::triangular()),
            "hex" | "H" | "hexagonal" => Ok(Self::hexagonal()),
            other => {
                if let Some(d) = other.strip_prefix('Z').and_then(|s| s.parse::<usize>().ok()) {
                    if d >= 1 {
                        return Ok(Self::hypercubic(d));
                    }
                }
                Err(Error::UnsupportedLattice(other.to_string()))
            }
        }
    }

    pub fn name(&self) -> String {
        match self.kind {
            LatticeKind::Hypercubic(d) => format!("Z{d}"),
            LatticeKind::Triangular => "tri".into(),
            LatticeKind::Hexagonal => "hex".into(),
        }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            LatticeKind::Hypercubic(d) => d,
            _ => 2,
        }
    }

    pub fn is_planar(&self) -> bool {
        self.dim() == 2
    }

    pub fn c_l_value(&self) -> f64 {
        self.c_l.0 as f64 / self.c_l.1 as f64
    }

    /// `gamma(alpha) = cos(2 pi alpha / p)` as an exact rational.
    pub fn gamma(&self, alpha: usize) -> RationalCosine {
        RationalCosine::of_turn(alpha, self.p).expect("supported planar count")
    }

    /// Number of sublattices (two for the hexagonal lattice).
    pub fn sublattices(&self) -> u8 {
        match self.kind {
            LatticeKind::Hexagonal => 2,
            _ => 1,
        }
    }

    /// Unit steps of the star at a site of the given sublattice.
    ///
    /// Hexagonal sublattice 0 has edges at 0, 2pi/3, 4pi/3 and sublattice 1 at
    /// pi/3, pi, 5pi/3.
    pub fn star_vectors(&self, sublattice: u8) -> Vec<Vec<f64>> {
        match (self.kind, sublattice) {
            (LatticeKind::Hexagonal, 1) => polar_star(3, 1),
            _ => self.edge_vectors.clone(),
        }
    }

    /// Index of the star direction opposite to `dir`, when the star is closed
    /// under negation.
    pub fn opposite(&self, dir: usize) -> Option<usize> {
        match self.kind {
            LatticeKind::Hexagonal => None,
            _ => Some((dir + self.degree / 2) % self.degree),
        }
    }

    /// The neighbour of `site` in star direction `dir`.
    pub fn neighbor(&self, site: &Site, dir: usize) -> Site {
        assert!(dir < self.degree, "direction out of range");
        match self.kind {
            LatticeKind::Hypercubic(d) => {
                let mut c = site.coords.clone();
                if dir < d {
                    c[dir] += 1;
                } else {
                    c[dir - d] -= 1;
                }
                Site::new(c)
            }
            LatticeKind::Triangular => {
                const STEPS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];
                let (dm, dn) = STEPS[dir];
                Site::new(vec![site.coords[0] + dm, site.coords[1] + dn])
            }
            LatticeKind::Hexagonal => {
                // A(m,n) -> B(m,n), B(m,n-1), B(m-1,n); B(m,n) -> A(m+1,n), A(m,n), A(m,n+1)
                const A_STEPS: [(i64, i64); 3] = [(0, 0), (0, -1), (-1, 0)];
                const B_STEPS: [(i64, i64); 3] = [(1, 0), (0, 0), (0, 1)];
                let (steps, target) = if site.sublattice == 0 {
                    (A_STEPS, 1)
                } else {
                    (B_STEPS, 0)
                };
                let (dm, dn) = steps[dir];
                Site {
                    coords: vec![site.coords[0] + dm, site.coords[1] + dn],
                    sublattice: target,
                }
            }
        }
    }

    /// Real-space position of a site.
    pub fn position(&self, site: &Site) -> Vec<f64> {
        match self.kind {
            LatticeKind::Hypercubic(_) => site.coords.iter().map(|&c| c as f64).collect(),
            LatticeKind::Triangular => {
                let (m, n) = (site.coords[0] as f64, site.coords[1] as f64);
                vec![m + 0.5 * n, SQRT3_2 * n]
            }
            LatticeKind::Hexagonal => {
                let (m, n) = (site.coords[0] as f64, site.coords[1] as f64);
                let x = 1.5 * (m + n) + if site.sublattice == 1 { 1.0 } else { 0.0 };
                vec![x, SQRT3_2 * (m - n)]
            }
        }
    }

    /// Lattice site closest to a real-space point (used to discretize continuum points).
    pub fn nearest_site(&self, x: &[f64]) -> Site {
        match self.kind {
            LatticeKind::Hypercubic(_) => Site::new(x.iter().map(|v| v.floor() as i64).collect()),
            _ => {
                let guess = match self.kind {
                    LatticeKind::Triangular => {
                        let n = x[1] / SQRT3_2;
                        let m = x[0] - 0.5 * n;
                        (m.round() as i64, n.round() as i64)
                    }
                    _ => {
                        let s = x[0] / 1.5;
                        let t = x[1] / SQRT3_2;
                        (((s + t) / 2.0).round() as i64, ((s - t) / 2.0).round() as i64)
                    }
                };
                let mut best = Site::new(vec![guess.0, guess.1]);
                let mut best_d = f64::INFINITY;
                for dm in -2..=2 {
                    for dn in -2..=2 {
                        for sub in 0..self.sublattices() {
                            let s = Site {
                                coords: vec![guess.0 + dm, guess.1 + dn],
                                sublattice: sub,
                            };
                            let p = self.position(&s);
                            let d = (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2);
                            if d < best_d - 1e-12 {
                                best_d = d;
                                best = s;
                            }
                        }
                    }
                }
                best
            }
        }
    }

    /// Whether the directed lattice edge leaving a site of `sublattice` in
    /// direction `dir` is in natural orientation.
    pub fn is_natural(&self, sublattice: u8, dir: usize) -> bool {
        match self.kind {
            LatticeKind::Hexagonal => sublattice == 0,
            _ => dir < self.degree / 2,
        }
    }
}

fn polar_star(count: usize, half_offset: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let turn = (2 * i + half_offset) as f64 / (2 * count) as f64;
            let t = 2.0 * std::f64::consts::PI * turn;
            let (s, c) = t.sin_cos();
            vec![clean(c), clean(s)]
        })
        .collect()
}

fn clean(x: f64) -> f64 {
    let r = (2.0 * x).round() / 2.0;
    if (x - r).abs() < 1e-12 {
        r
    } else if (x.abs() - SQRT3_2).abs() < 1e-12 {
        SQRT3_2.copysign(x)
    } else {
        x
    }
}

/// Region of lattice sites forming the interior of a grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// `width x height` sites (cells for the hexagonal lattice), rows offset
    /// so the triangular patch is roughly rectangular.
    Rectangle { width: usize, height: usize },
    /// Axis-aligned box for `Z^d`.
    Box(Vec<usize>),
    /// Sites at Euclidean distance strictly less than `radius` from `center`.
    Ball { center: Vec<f64>, radius: f64 },
}

/// Lattice bookkeeping for lattice-built graphs.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub lattice: LatticeSpec,
    pub sites: Vec<Site>,
    /// `slot_dirs[v][i]` is the lattice direction of `neighbors(v)[i]`.
    pub slot_dirs: Vec<Vec<usize>>,
    index: HashMap<Site, VertexId>,
}

impl Geometry {
    pub fn vertex_at(&self, site: &Site) -> Option<VertexId> {
        self.index.get(site).copied()
    }
}

/// Finite, connected, simple graph with an optional Dirichlet boundary.
#[derive(Debug, Clone)]
pub struct FiniteGraph {
    neighbors: Vec<Vec<VertexId>>,
    boundary: Vec<bool>,
    edges: Vec<DirectedEdge>,
    labels: Vec<i64>,
    geometry: Option<Geometry>,
}

impl FiniteGraph {
    /// Builds a graph on `0..n` from undirected edges.
    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId)], boundary: &[VertexId]) -> Result<Self> {
        let labels = (0..n as i64).collect();
        Self::from_labelled(labels, edges, boundary)
    }

    fn from_labelled(labels: Vec<i64>, edges: &[(VertexId, VertexId)], boundary: &[VertexId]) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptyRegion);
        }
        let mut seen = BTreeSet::new();
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n {
                return Err(Error::UnknownVertex(u));
            }
            if v >= n {
                return Err(Error::UnknownVertex(v));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop at vertex {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidInput(format!("multi-edge between {u} and {v}")));
            }
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        neighbors.iter_mut().for_each(|nb| nb.sort_unstable());
        let mut is_b = vec![false; n];
        for &b in boundary {
            if b >= n {
                return Err(Error::UnknownVertex(b));
            }
            is_b[b] = true;
        }
        let edges = seen.into_iter().map(|(u, v)| DirectedEdge::new(u, v)).collect();
        let g = FiniteGraph {
            neighbors,
            boundary: is_b,
            edges,
            labels,
            geometry: None,
        };
        if !g.is_connected() {
            return Err(Error::Disconnected);
        }
        if g.boundary.iter().all(|&b| b) {
            return Err(Error::InvalidInput("every vertex is a boundary vertex".into()));
        }
        Ok(g)
    }

    /// Complete graph `K_n`.
    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Self::from_edges(n, &edges, &[])
    }

    /// Cycle `C_n`.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInput("a cycle needs at least 3 vertices".into()));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_edges(n, &edges, &[])
    }

    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges, &[])
    }

    /// Free-boundary `width x height` grid graph (no Dirichlet boundary);
    /// vertex `(x, y)` has id `y * width + x`.
    pub fn grid(width: usize, height: usize) -> Result<Self> {
        let id = |x: usize, y: usize| y * width + x;
        let mut edges = Vec::new();
        for y in 0..height {
            for x in 0..width {
                if x + 1 < width {
                    edges.push((id(x, y), id(x + 1, y)));
                }
                if y + 1 < height {
                    edges.push((id(x, y), id(x, y + 1)));
                }
            }
        }
        Self::from_edges(width * height, &edges, &[])
    }

    /// Induced lattice grid on `region` with the exterior boundary attached as
    /// Dirichlet boundary. Only edges with at least one interior endpoint are kept.
    pub fn build_grid(lattice: &LatticeSpec, region: &Region) -> Result<Self> {
        let interior = region_sites(lattice, region)?;
        if interior.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let mut index: HashMap<Site, VertexId> = HashMap::new();
        let mut sites = Vec::new();
        for s in interior {
            if !index.contains_key(&s) {
                index.insert(s.clone(), sites.len());
                sites.push(s);
            }
        }
        let n_int = sites.len();

        // interior connectivity
        let mut seen = vec![false; n_int];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for dir in 0..lattice.degree {
                if let Some(&w) = index.get(&lattice.neighbor(&sites[v], dir)) {
                    if w < n_int && !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Disconnected);
        }

        let mut slots: Vec<Vec<(usize, VertexId)>> = vec![Vec::new(); n_int];
        for v in 0..n_int {
            for dir in 0..lattice.degree {
                let t = lattice.neighbor(&sites[v], dir);
                let w = match index.get(&t) {
                    Some(&w) => w,
                    None => {
                        let w = sites.len();
                        index.insert(t.clone(), w);
                        sites.push(t);
                        slots.push(Vec::new());
                        w
                    }
                };
                slots[v].push((dir, w));
            }
        }
        // boundary slots: only the interior neighbours
        let n = sites.len();
        for v in 0..n_int {
            for &(dir, w) in slots[v].clone().iter() {
                if w >= n_int {
                    let back = reverse_dir(lattice, &sites[v], dir, &sites[w]);
                    slots[w].push((back, v));
                }
            }
        }
        let mut neighbors = Vec::with_capacity(n);
        let mut slot_dirs = Vec::with_capacity(n);
        let mut edges = BTreeSet::new();
        for (v, mut sl) in slots.into_iter().enumerate() {
            sl.sort_unstable();
            for &(dir, w) in &sl {
                if v < n_int || w < n_int {
                    let sub = sites[v].sublattice;
                    let e = if lattice.is_natural(sub, dir) {
                        DirectedEdge::new(v, w)
                    } else {
                        DirectedEdge::new(w, v)
                    };
                    edges.insert(e);
                }
            }
            slot_dirs.push(sl.iter().map(|&(d, _)| d).collect());
            neighbors.push(sl.iter().map(|&(_, w)| w).collect());
        }
        let mut boundary = vec![false; n];
        boundary[n_int..].iter_mut().for_each(|b| *b = true);
        Ok(FiniteGraph {
            neighbors,
            boundary,
            edges: edges.into_iter().collect(),
            labels: (0..n as i64).collect(),
            geometry: Some(Geometry {
                lattice: lattice.clone(),
                sites,
                slot_dirs,
                index,
            }),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Undirected edges in natural orientation.
    pub fn edges(&self) -> &[DirectedEdge] {
        &self.edges
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.neighbors[v].len()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v < self.vertex_count()
    }

    pub fn adjacent(&self, u: VertexId, v: VertexId) -> bool {
        self.contains(u) && self.neighbors[u].binary_search(&v).is_ok()
            || self.contains(u) && self.neighbors[u].contains(&v)
    }

    pub fn is_boundary(&self, v: VertexId) -> bool {
        self.boundary[v]
    }

    pub fn has_boundary(&self) -> bool {
        self.boundary.iter().any(|&b| b)
    }

    pub fn boundary_vertices(&self) -> Vec<VertexId> {
        (0..self.vertex_count()).filter(|&v| self.boundary[v]).collect()
    }

    pub fn interior_vertices(&self) -> Vec<VertexId> {
        (0..self.vertex_count()).filter(|&v| !self.boundary[v]).collect()
    }

    pub fn geometry(&self) -> Option<&Geometry> {
        self.geometry.as_ref()
    }

    pub fn lattice(&self) -> Option<&LatticeSpec> {
        self.geometry.as_ref().map(|g| &g.lattice)
    }

    /// External label of a vertex (the id used in graph files).
    pub fn label(&self, v: VertexId) -> i64 {
        self.labels[v]
    }

    pub fn vertex_by_label(&self, label: i64) -> Result<VertexId> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or(Error::InvalidInput(format!("no vertex labelled {label}")))
    }

    /// Vertex at a lattice site, for lattice-built graphs.
    pub fn vertex_at(&self, site: &Site) -> Option<VertexId> {
        self.geometry.as_ref().and_then(|g| g.vertex_at(site))
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v))
        }
    }

    /// The directed edge `(u, v)` if `{u, v}` is an edge.
    pub fn directed(&self, u: VertexId, v: VertexId) -> Result<DirectedEdge> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if self.neighbors[u].contains(&v) {
            Ok(DirectedEdge::new(u, v))
        } else {
            Err(Error::UnknownEdge(u, v))
        }
    }

    /// Natural orientation of the edge `{u, v}`.
    pub fn natural(&self, e: DirectedEdge) -> Result<DirectedEdge> {
        let e = self.directed(e.tail, e.tip)?;
        let key = e.undirected();
        let fwd = DirectedEdge::new(key.0, key.1);
        if self.edges.binary_search(&fwd).is_ok() {
            Ok(fwd)
        } else if self.edges.binary_search(&fwd.reverse()).is_ok() {
            Ok(fwd.reverse())
        } else {
            // edges between two boundary vertices are not part of the graph
            Err(Error::UnknownEdge(e.tail, e.tip))
        }
    }

    /// Lattice direction index of the edge leaving `v` towards `w`.
    pub fn direction(&self, v: VertexId, w: VertexId) -> Option<usize> {
        let slot = self.neighbors[v].iter().position(|&x| x == w)?;
        Some(match &self.geometry {
            Some(g) => g.slot_dirs[v][slot],
            None => slot,
        })
    }

    /// The star `E_v`: directed edges with tail `v`, in natural orientation order.
    pub fn edge_star(&self, v: VertexId) -> Result<EdgeStar> {
        self.check_vertex(v)?;
        if self.boundary[v] {
            return Err(Error::TruncatedStar(v));
        }
        if let Some(g) = &self.geometry {
            if self.neighbors[v].len() != g.lattice.degree {
                return Err(Error::TruncatedStar(v));
            }
        }
        Ok(EdgeStar {
            center: v,
            edges: self.neighbors[v].iter().map(|&w| DirectedEdge::new(v, w)).collect(),
        })
    }

    /// True iff no two members of `set` are adjacent.
    pub fn is_good_set(&self, set: &[VertexId]) -> Result<bool> {
        Ok(self.first_adjacent_pair(set)?.is_none())
    }

    pub(crate) fn first_adjacent_pair(&self, set: &[VertexId]) -> Result<Option<(VertexId, VertexId)>> {
        for &v in set {
            self.check_vertex(v)?;
        }
        for (i, &u) in set.iter().enumerate() {
            for &v in &set[i + 1..] {
                if u == v {
                    return Err(Error::InvalidInput(format!("vertex {u} repeated")));
                }
                if self.neighbors[u].contains(&v) {
                    return Ok(Some((u, v)));
                }
            }
        }
        Ok(None)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.neighbors[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let src: GraphSource = serde_json::from_str(s)?;
        src.build()
    }

    pub fn to_json(&self) -> GraphFile {
        GraphFile {
            vertices: self.labels.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| [self.labels[e.tail], self.labels[e.tip]])
                .collect(),
            boundary: self.boundary_vertices().iter().map(|&v| self.labels[v]).collect(),
        }
    }
}

fn reverse_dir(lattice: &LatticeSpec, from: &Site, dir: usize, to: &Site) -> usize {
    if let Some(op) = lattice.opposite(dir) {
        return op;
    }
    (0..lattice.degree)
        .find(|&d| lattice.neighbor(to, d) == *from)
        .expect("lattice neighbour relation is symmetric")
}

fn region_sites(lattice: &LatticeSpec, region: &Region) -> Result<Vec<Site>> {
    let mut out = Vec::new();
    match region {
        Region::Rectangle { width, height } => {
            if lattice.dim() != 2 {
                return Err(Error::InvalidInput("rectangle regions are two-dimensional".into()));
            }
            let (w, h) = (*width as i64, *height as i64);
            for y in 0..h {
                for x in 0..w {
                    match lattice.kind {
                        LatticeKind::Hypercubic(_) => out.push(Site::new(vec![x, y])),
                        LatticeKind::Triangular => out.push(Site::new(vec![x - y / 2, y])),
                        LatticeKind::Hexagonal => {
                            for sub in 0..2 {
                                out.push(Site {
                                    coords: vec![x, y],
                                    sublattice: sub,
                                });
                            }
                        }
                    }
                }
            }
        }
        Region::Box(dims) => {
            let d = match lattice.kind {
                LatticeKind::Hypercubic(d) => d,
                _ => return Err(Error::InvalidInput("box regions need a hypercubic lattice".into())),
            };
            if dims.len() != d {
                return Err(Error::Dimension(format!("box of rank {} on Z^{d}", dims.len())));
            }
            let total: usize = dims.iter().product();
            for mut idx in 0..total {
                let mut c = Vec::with_capacity(d);
                for &len in dims {
                    c.push((idx % len) as i64);
                    idx /= len;
                }
                out.push(Site::new(c));
            }
        }
        Region::Ball { center, radius } => {
            let d = lattice.dim();
            if center.len() != d {
                return Err(Error::Dimension(format!(
                    "ball center of rank {} in dimension {d}",
                    center.len()
                )));
            }
            if !(radius.is_finite() && *radius > 0.0) {
                return Err(Error::InvalidInput("ball radius must be positive".into()));
            }
            let reach = (radius * 1.5).ceil() as i64 + 2;
            let base = lattice.nearest_site(center);
            let mut cursor = vec![-reach; d];
            loop {
                for sub in 0..lattice.sublattices() {
                    let s = Site {
                        coords: base.coords.iter().zip(&cursor).map(|(b, c)| b + c).collect(),
                        sublattice: sub,
                    };
                    let p = lattice.position(&s);
                    let dist2: f64 = p.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                    if dist2 < radius * radius * (1.0 - 1e-12) {
                        out.push(s);
                    }
                }
                let mut k = 0;
                loop {
                    if k == d {
                        return Ok(out);
                    }
                    cursor[k] += 1;
                    if cursor[k] > reach {
                        cursor[k] = -reach;
                        k += 1;
                    } else {
                        break;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// The directed edges leaving a vertex (`E_v`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeStar {
    pub center: VertexId,
    pub edges: Vec<DirectedEdge>,
}

impl EdgeStar {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Explicit graph file: `{"vertices":[..], "edges":[[u,v],..], "boundary":[..]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GraphFile {
    pub vertices: Vec<i64>,
    pub edges: Vec<[i64; 2]>,
    #[serde(default)]
    pub boundary: Vec<i64>,
}

/// Lattice grid file: `{"lattice":"Z2"|"tri"|"hex", "width":W, "height":H}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LatticeFile {
    pub lattice: String,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    Explicit(GraphFile),
    Lattice(LatticeFile),
}

impl GraphSource {
    pub fn build(&self) -> Result<FiniteGraph> {
        match self {
            GraphSource::Explicit(f) => {
                let mut index = HashMap::new();
                for (i, &l) in f.vertices.iter().enumerate() {
                    if index.insert(l, i).is_some() {
                        return Err(Error::InvalidInput(format!("duplicate vertex id {l}")));
                    }
                }
                let lookup = |l: i64| {
                    index
                        .get(&l)
                        .copied()
                        .ok_or_else(|| Error::InvalidInput(format!("unknown vertex id {l}")))
                };
                let edges = f
                    .edges
                    .iter()
                    .map(|[u, v]| Ok((lookup(*u)?, lookup(*v)?)))
                    .collect::<Result<Vec<_>>>()?;
                let boundary = f.boundary.iter().map(|&b| lookup(b)).collect::<Result<Vec<_>>>()?;
                FiniteGraph::from_labelled(f.vertices.clone(), &edges, &boundary)
            }
            GraphSource::Lattice(l) => {
                let lattice = LatticeSpec::from_name(&l.lattice)?;
                FiniteGraph::build_grid(
                    &lattice,
                    &Region::Rectangle {
                        width: l.width,
                        height: l.height,
                    },
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_has_four_boundary_vertices() {
        let g = FiniteGraph::build_grid(&LatticeSpec::square(), &Region::Rectangle { width: 1, height: 1 }).unwrap();
        assert_eq!(g.interior_vertices().len(), 1);
        assert_eq!(g.boundary_vertices().len(), 4);
        assert_eq!(g.edge_count(), 4);
    }

    #[test]
    fn three_by_three_counts() {
        let g = FiniteGraph::build_grid(&LatticeSpec::square(), &Region::Rectangle { width: 3, height: 3 }).unwrap();
        // exterior boundary of a 3x3 block: 3 per side, no corners
        assert_eq!(g.interior_vertices().len(), 9);
        assert_eq!(g.boundary_vertices().len(), 12);
        for v in g.interior_vertices() {
            assert_eq!(g.degree(v), 4);
        }
    }

    #[test]
    fn triangular_unit_ball() {
        let g = FiniteGraph::build_grid(
            &LatticeSpec::triangular(),
            &Region::Ball {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
        )
        .unwrap();
        let int = g.interior_vertices();
        assert_eq!(int.len(), 1);
        assert_eq!(g.edge_star(int[0]).unwrap().len(), 6);
    }

    #[test]
    fn hexagonal_grid_has_degree_three_interior() {
        let g = FiniteGraph::build_grid(&LatticeSpec::hexagonal(), &Region::Rectangle { width: 3, height: 3 }).unwrap();
        for v in g.interior_vertices() {
            assert_eq!(g.degree(v), 3);
        }
        // every neighbour pair sits at unit distance
        let geo = g.geometry().unwrap();
        for e in g.edges() {
            let a = geo.lattice.position(&geo.sites[e.tail]);
            let b = geo.lattice.position(&geo.sites[e.tip]);
            let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            assert!((d - 1.0).abs() < 1e-12);
            // natural orientation goes from sublattice A to B
            assert_eq!(geo.sites[e.tail].sublattice, 0);
        }
    }

    #[test]
    fn star_vectors_match_site_steps() {
        for lat in [
            LatticeSpec::square(),
            LatticeSpec::triangular(),
            LatticeSpec::hexagonal(),
        ] {
            for sub in 0..lat.sublattices() {
                let o = Site {
                    coords: vec![0, 0],
                    sublattice: sub,
                };
                let p0 = lat.position(&o);
                for (dir, v) in lat.star_vectors(sub).iter().enumerate() {
                    let p = lat.position(&lat.neighbor(&o, dir));
                    assert!((p[0] - p0[0] - v[0]).abs() < 1e-12, "{:?} {sub} {dir}", lat.kind);
                    assert!((p[1] - p0[1] - v[1]).abs() < 1e-12, "{:?} {sub} {dir}", lat.kind);
                }
            }
        }
    }

    #[test]
    fn negation_closure() {
        for lat in [
            LatticeSpec::square(),
            LatticeSpec::triangular(),
            LatticeSpec::hypercubic(3),
        ] {
            for (i, v) in lat.edge_vectors.iter().enumerate() {
                let j = lat.opposite(i).unwrap();
                let w = &lat.edge_vectors[j];
                assert!(v.iter().zip(w).all(|(a, b)| (a + b).abs() < 1e-12));
            }
        }
        assert!(LatticeSpec::hexagonal().opposite(0).is_none());
    }

    #[test]
    fn gamma_sums_vanish() {
        for lat in [
            LatticeSpec::square(),
            LatticeSpec::triangular(),
            LatticeSpec::hexagonal(),
        ] {
            assert_eq!(lat.gamma(0).value::<f64>(), 1.0);
            let s: f64 = (0..lat.p).map(|a| lat.gamma(a).value::<f64>()).sum();
            assert!(s.abs() < 1e-15);
        }
    }

    #[test]
    fn good_sets() {
        let g = FiniteGraph::build_grid(&LatticeSpec::square(), &Region::Rectangle { width: 3, height: 3 }).unwrap();
        let at = |x, y| g.vertex_at(&Site::new(vec![x, y])).unwrap();
        assert!(g.is_good_set(&[at(1, 1)]).unwrap());
        assert!(!g.is_good_set(&[at(0, 0), at(1, 0)]).unwrap());
        assert!(g.is_good_set(&[at(0, 0), at(1, 1)]).unwrap());
        assert!(matches!(g.is_good_set(&[999]), Err(Error::UnknownVertex(999))));
    }

    #[test]
    fn stars() {
        let k5 = FiniteGraph::complete(5).unwrap();
        assert_eq!(k5.edge_star(2).unwrap().len(), 4);
        let g = FiniteGraph::build_grid(&LatticeSpec::square(), &Region::Rectangle { width: 2, height: 2 }).unwrap();
        let b = g.boundary_vertices()[0];
        assert!(matches!(g.edge_star(b), Err(Error::TruncatedStar(_))));
        let star = g.edge_star(0).unwrap();
        let dirs: Vec<_> = star.edges.iter().map(|e| g.direction(e.tail, e.tip).unwrap()).collect();
        assert_eq!(dirs, vec![0, 1, 2, 3]);
    }

    #[test]
    fn rejects_bad_graphs() {
        assert!(matches!(
            FiniteGraph::from_edges(3, &[(0, 1)], &[]),
            Err(Error::Disconnected)
        ));
        assert!(FiniteGraph::from_edges(2, &[(0, 0)], &[]).is_err());
        assert!(FiniteGraph::from_edges(2, &[(0, 1), (1, 0)], &[]).is_err());
        assert!(matches!(
            FiniteGraph::build_grid(&LatticeSpec::square(), &Region::Rectangle { width: 0, height: 3 }),
            Err(Error::EmptyRegion)
        ));
    }

    #[test]
    fn json_roundtrip() {
        let s = r#"{"vertices":[10,20,30],"edges":[[10,20],[20,30],[30,10]],"boundary":[]}"#;
        let g = FiniteGraph::from_json_str(s).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.vertex_by_label(20).unwrap(), 1);
        let back = serde_json::to_string(&g.to_json()).unwrap();
        let g2 = FiniteGraph::from_json_str(&back).unwrap();
        assert_eq!(g2.edges(), g.edges());
        let lat = FiniteGraph::from_json_str(r#"{"lattice":"tri","width":3,"height":2}"#).unwrap();
        assert_eq!(lat.interior_vertices().len(), 6);
    }
}
