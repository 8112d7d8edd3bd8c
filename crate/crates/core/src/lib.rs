//! Exact uniform spanning tree statistics: transfer currents, degree
//! distributions, joint cumulants, lattice constants and their oracles.
//!
//! Numeric types are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix `f64`.

pub mod cumulant;
pub mod degree;
pub mod error;
pub mod graph;
pub mod grassmann;
pub mod green;
pub mod linalg;
pub mod perm;
pub mod potential;
pub mod quad;
pub mod sampler;
pub mod scalar;
pub mod scaling;
pub mod transfer;

pub use cumulant::{CumulantOptions, CumulantQuery};
pub use degree::DegreeQuery;
pub use error::{Error, Result};
pub use graph::{DirectedEdge, EdgeStar, FiniteGraph, LatticeKind, LatticeSpec, Region, Site, VertexId};
pub use perm::{EdgePermutation, StarSet};
pub use sampler::{SampleStats, SpanningTree};
pub use scalar::{RationalCosine, Scalar};
pub use scaling::{ContinuumDomain, ConvergenceReport, LatticeConstant};
pub use transfer::EdgeProbQuery;

pub type Matrix = linalg::Matrix<f64>;
pub type GreenFunction = green::GreenFunction<f64>;
pub type PotentialKernel = potential::PotentialKernel<f64>;
pub type TransferMatrix = transfer::TransferMatrix<f64>;
pub type DegreePmf = degree::DegreePmf<f64>;
pub type GrassmannElement = grassmann::GrassmannElement<f64>;
pub type FermionicGff = grassmann::FermionicGff<f64>;
pub type WeightedBlock = cumulant::WeightedBlock<f64>;
pub type OriginStarKernel = scaling::OriginStarKernel<f64>;
