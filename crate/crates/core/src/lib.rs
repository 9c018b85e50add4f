//! Dependency networks built from Debian `Packages` indices, and the
//! finite-size saturated Zipf model used to describe their degree
//! distributions.
//!
//! The pipeline runs bottom-up:
//!
//! * [`ingestion`] fetches and caches compressed index files and streams
//!   their decompressed text.
//! * [`deb822`] parses stanzas and relation fields into [`deb822::PackageRecord`]s.
//! * [`graph`] turns records into a directed dependency graph (edges point
//!   from the package being depended upon to its dependent) and an
//!   undirected conflicts graph.
//! * [`degree`] computes unnormalised degree histograms and the scalar
//!   network counts.
//! * [`model`] evaluates the static saturation model and its diagnostics.
//! * [`fit`] estimates model parameters from histograms in log-log space.
//! * [`pipeline`] chains parsing and graph construction for one index file.
//! * [`dynamics`] evaluates the time-dependent out-degree field and the
//!   node-count saturation estimates.

// Negated comparisons are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deb822;
pub mod degree;
pub mod dynamics;
pub mod fit;
pub mod graph;
pub mod ingestion;
pub mod model;
pub mod pipeline;
pub mod quadrature;
mod simplex;

pub use deb822::{parse_packages, parse_relation_field, PackageRecord, RelationClause};
pub use degree::{DegreeHistogram, Direction};
pub use dynamics::EvolutionConfig;
pub use fit::{fit, FitConfig, FitResult};
pub use graph::{ConflictGraph, DepGraph, GraphConfig};
pub use model::ModelParams;
