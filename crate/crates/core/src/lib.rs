//! Graph encodings and topological analysis of sparse neural networks.
//!
//! The crate turns a pruned network (an [`archspec::ArchitectureSpec`] plus a
//! [`maskgen::SparseMask`]) into input-aware bipartite / multipartite graphs,
//! measures them with the [`topometrics`] suite and the Ramanujan-style
//! baselines in [`ramanujan`], and feeds the results to the regression and
//! ranking tools in [`analysis`] and [`ranking`].

pub mod analysis;
pub mod archspec;
pub mod eigen;
pub mod encoder;
pub mod fixtures;
pub mod graph;
pub mod maskgen;
pub mod ramanujan;
pub mod ranking;
pub mod stats;
pub mod topometrics;
