//! Core library of the Voting Prediction Framework (VPF).
//!
//! Parses heterogeneous parliamentary open-data exports into unified
//! schemas, engineers vote-prediction features, trains multi-class
//! classifiers under a chronological split, and produces vote-level
//! metrics, bill-level pass/reject predictions, Shapley attributions,
//! and false-negative anomaly reports.

pub mod canon;
pub mod config;
pub mod eval;
pub mod explain;
pub mod features;
pub mod hashing;
pub mod ingest;
pub mod manifest;
pub mod models;
pub mod schema;
pub mod split;
pub mod synth;

pub use config::CountryConfig;
pub use schema::{RawBundle, VoteResult};
