//! Dependency-upgrade impact profiling over function call graphs.
//!
//! The crate is organized around [`graph::CallGraph`]: graphs are loaded,
//! imported or extracted from source trees, compared across versions
//! ([`diff`]), measured ([`metrics`], [`stats`]) and ranked with a
//! centrality-weighted attention scorer ([`gat`]). [`supply_chain`] covers
//! SBOM parsing and vulnerability lookups.

pub mod diff;
pub mod error;
pub mod extract;
pub mod gat;
pub mod graph;
pub mod metrics;
pub mod rng;
pub mod stats;
pub mod supply_chain;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{CallEdge, CallGraph, FunctionKey, FunctionNode, GraphBuilder, NodeFlags, NodeId};
