//! Recovery of a graph diffusion operator from the sample covariance of
//! stationary signals.
//!
//! The eigenvectors of the covariance fix a basis; the admissible eigenvalue
//! vectors then form a convex polytope ([`polytope`]), from which a single
//! operator is picked by linear programming or by projecting a candidate
//! ([`select`]).

pub mod error;
pub mod experiments;
pub mod graphmodels;
pub mod matcore;
pub mod metrics;
pub mod polytope;
pub mod seeding;
pub mod select;
pub mod signals;

pub use error::{Error, Result};
pub use graphmodels::{AdjacencyMatrix, DiffusionOperator, GraphModel};
pub use matcore::{Eigenbasis, SymMatrix};
pub use polytope::{EigenvalueVector, PolytopeConstraints};
pub use signals::{CovarianceEstimate, DiffusionCounts, ObservationSet, SourceDistribution};
