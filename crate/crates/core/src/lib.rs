//! Causal edge attribution: decompose the tables of a discrete causal
//! Bayesian network into per-edge flows, measure how much of each table is
//! carried by unfair edges, and regenerate a de-biased joint distribution.

pub mod cbn;
pub mod clsp;
pub mod debias;
pub mod error;
pub mod fit;
pub mod fixtures;
pub mod flow;
pub mod graph;
pub mod inference;
pub mod model_file;
pub mod sampling;
pub mod synth;
pub mod unfairness;

pub use cbn::{Assignment, Cbn, Cpt};
pub use error::{Error, Result};
pub use graph::{CausalDag, DirectedPath, Edge, NodeId, NodeSpec};

/// Code blocks from the guide in `book/`, compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/inference.md")]
    mod inference {}
    #[doc = include_str!("../../../book/src/flows.md")]
    mod flows {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    mod fitting {}
    #[doc = include_str!("../../../book/src/unfairness.md")]
    mod unfairness {}
    #[doc = include_str!("../../../book/src/debias.md")]
    mod debias {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
