//! Vertex-cut edge partitioning with balanced intersecting systems.
//!
//! Each vertex is labelled with a set from a family of pairwise intersecting
//! subsets of the `n` partitions, and each edge is placed in the
//! intersection of its endpoints' sets. A vertex therefore never spans more
//! partitions than the largest set. The family used here is a projective
//! plane extended block by block ([`layered_sampler`]), which keeps that
//! bound near `√n` for every `n` while giving every partition the same
//! expected load.
//!
//! ```
//! use bisp_core::{analysis::compute_metrics, graphs::gen_complete, layered_sampler::plan_layout};
//! use bisp_core::partitioner::{bisp_partition, Mode};
//!
//! let layout = plan_layout(13).unwrap();
//! let assignments = bisp_partition(gen_complete(50), &layout, 7, Mode::Hash);
//! let metrics = compute_metrics(assignments, 13).unwrap();
//! assert!(metrics.rf_max <= layout.cardinality());
//! ```

pub mod analysis;
pub mod bench;
pub mod catalog;
pub mod explicit_system;
pub mod finite_plane;
mod flow;
pub mod graphs;
pub mod layered_sampler;
pub mod partitioner;
pub mod randomness;

pub use explicit_system::{ExplicitSystem, SetFamily, SystemReport};
pub use layered_sampler::{plan_layout, Layout, VertexLabel};
pub use partitioner::{Assignment, Edge, Mode};
