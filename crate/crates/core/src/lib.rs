//! Prior-case retrieval for legal case entailment collections.
//!
//! The pipeline: load a [`corpus::Collection`], detect statute citations with
//! [`statutes`], build an inverted [`index::Index`] at document or passage
//! granularity, rank candidate cases with a [`retrieval::Retriever`], then
//! score rankings with [`eval`] and tune parameters with [`tuner`].

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod index;
pub mod retrieval;
pub mod runfile;
pub mod scoring;
pub mod statutes;
pub mod synthetic;
pub mod textproc;
pub mod tuner;

pub use config::ExperimentConfig;
pub use corpus::{Case, Collection, Passage, Qrels, load_collection};
pub use error::{Error, Result};
pub use index::{Granularity, Index, build_index};
pub use retrieval::{CaseRanking, RetrievalConfig, Retriever};
pub use statutes::{PassageAnnotations, StatuteCatalog, annotate_collection};
