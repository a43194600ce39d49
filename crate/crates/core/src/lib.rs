//! First-passage percolation on bounded-degree graphs.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: finite graph instances (balls in ℤ^d, free groups, ℤ/2∗ℤ/3,
//!   cycle gadgets, caterpillar rays), the unit graph metric and disjoint
//!   cycle search.
//! - [`percolation`]: edge-length laws and reproducible, key-derived weight
//!   assignments.
//! - [`metric`]: the random metric d_ω, ω-geodesics, distances on the metric
//!   realization, triangle slimness and the four-point constant.
//! - [`diagnostics`]: finite-scale audits built on top of the metric
//!   (non-slim witnesses, hyperbolicity scans, CAT(0) cycle audit, Morse
//!   detours, radial fits, velocities, shrink probabilities, lateral shifts).
//! - [`oracle`]: closed-form probability calculators used to cross-check
//!   Monte Carlo estimates.
//! - [`rng`]: the counter-based mixing functions every random draw goes
//!   through.

pub mod diagnostics;
pub mod graph;
pub mod metric;
pub mod oracle;
pub mod percolation;
pub mod rng;

pub use graph::{CycleSet, Graph, GraphError, GraphSpec, MarkedRay, VertexId, EdgeId};
pub use metric::{Metric, MetricError, RealizationPoint};
pub use percolation::{DistributionSpec, PercolationError, WeightAssignment};
