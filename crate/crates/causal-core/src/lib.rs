//! Exact inference over small discrete causal graphs with explicit selection
//! nodes, and independence checks built on conditional mutual information.
//!
//! Everything is computed by dense enumeration of the joint, so results are
//! exact up to f64 rounding. The joint state count is capped (see
//! [`tol::STATE_CAP`]); this crate is for verifying claims on small models,
//! not for scaling inference.

pub mod catalog;
mod dist;
mod error;
mod graph;
mod independence;
mod theorem;
pub mod tol;

pub use dist::DiscreteDistribution;
pub use error::CausalError;
pub use graph::{
    build_graph, build_graph_with_cap, CausalGraph, EdgeLabel, EdgeSpec, GraphSpec, NodeRole,
    NodeSpec, SelectionTable,
};
pub use independence::{test_independence, IndependenceReport, Verdict};
pub use theorem::{
    search_ppc, verify_theorem, verify_theorem_with_threshold, MiCheck, RoleMap, SearchOutcome,
    TheoremReport, TheoremStatus,
};
