//! Balance-sheet contagion on sparse directed random graphs.
//!
//! Institutions sit on the vertices of a directed Erdős–Rényi graph
//! `G(n, λ/n)`. Each one owes `L` split equally over its out-edges and holds
//! equity `E = L/(C - 1)`; a shock defaults a set of institutions and losses
//! propagate with zero recovery until a fixed point. The crate provides the
//! cascade engine, the sender-truncated graph that carries single-hit
//! contagion, branching analytics, bow-tie extraction and a reproducible
//! experiment harness.

pub mod analytics;
pub mod balancesheet;
pub mod bowtie;
pub mod cascade;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod randgraph;
pub mod singlehit;
pub mod stats;
pub mod validate;

pub use balancesheet::{BalanceSheet, Rational};
pub use cascade::{run_cascade, CascadeTrace};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, Mode, TrialStats};
pub use randgraph::DiGraph;
