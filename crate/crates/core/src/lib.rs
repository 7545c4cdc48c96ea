//! Metric-set simplification and evaluation for software defect prediction.
//!
//! The pipeline: parse PROMISE releases ([`corpus`]), select per-release
//! FILTER subsets ([`features`]), derive the Top-k and minimum metric subsets
//! ([`simplify`]), train and evaluate classifiers ([`learners`]) under three
//! training-data scenarios ([`scenarios`]), and compare metric sets
//! statistically ([`stats`]). [`pipeline`] ties it together behind the
//! `defectkit` binary.

pub mod config;
pub mod corpus;
pub mod features;
pub mod surrogate;
pub mod simplify;
pub mod stats;
pub mod learners;
pub mod scenarios;
pub mod pipeline;
