//! Length-normalized best-first proof search with an expert-iteration data
//! pipeline, a concurrent search orchestrator and a pass@K evaluation harness.
//!
//! The crate is organised around two pluggable backends:
//!
//! * a [`policy::Policy`] that proposes tactics for a proof state, and
//! * an [`environment::Environment`] that applies a tactic and reports one of
//!   three outcomes (new state, proof finished, tactic error).
//!
//! A synthetic Peano rewriting system ([`environment::peano`]) and a tabular
//! policy ([`policy::TabularPolicy`]) make every stage runnable on a laptop;
//! newline-delimited JSON wire protocols let remote inference servers and
//! proof assistants be attached instead.

pub mod environment;
pub mod error;
pub mod eval;
pub mod expert;
pub mod hashing;
pub mod orchestrator;
pub mod parallel;
pub mod policy;
pub mod presets;
pub mod search;
pub mod wire;

pub use error::{EnvError, IoError, PolicyError, SearchError};
