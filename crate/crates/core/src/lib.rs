//! Patent-corpus analytics: technology-domain decomposition by
//! classification overlap, citation-network centrality normalized against
//! constrained random rewirings, and per-domain improvement-rate estimates
//! served through a keyword search.
//!
//! The pipeline stages live in separate modules and communicate through
//! plain data (and, at the process level, through artifact files):
//!
//! * [`corpus`] loads, validates, filters and synthesizes patent corpora.
//! * [`domainforge`] turns UPC x IPC class overlaps into disjoint domains.
//! * [`spnp`] builds citation DAG snapshots and computes SPNP centrality.
//! * [`nullmodel`] rewires citations under bucket constraints and converts
//!   raw centrality into per-cohort rank percentiles.
//! * [`rates`] maps mean centrality to yearly improvement rates and runs the
//!   distribution and regression statistics.
//! * [`search`] indexes titles and abstracts and ranks domains by MPR.
//! * [`pipeline`] wires the stages together behind a flat config file.

pub mod artifacts;
pub mod config;
pub mod corpus;
pub mod domainforge;
pub mod nullmodel;
pub mod pipeline;
pub mod rates;
pub mod search;
pub mod spnp;

pub use corpus::{CorpusStore, PatentRecord};
pub use domainforge::{Decomposition, Domain, DomainStatus};
pub use config::PipelineConfig;
pub use rates::{RateEstimate, RegressionModel};
pub use search::SearchEngine;
