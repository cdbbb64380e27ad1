//! Bootstrapping and evaluating a domain-specific emotional-arousal lexicon
//! from issue-tracker text.
//!
//! The pipeline runs corpus ingestion ([`corpus`]), GloVe training
//! ([`embedding`]), seed selection and candidate expansion through WordNet
//! synonyms and embedding neighbors ([`wordnet`], [`lexicon`]), a rating
//! sheet round-trip with inter-rater agreement, and finally max+min arousal
//! scoring of issue text ([`scoring`]) compared across issue priorities with
//! Cohen's d and t-tests ([`evalstats`]).

pub mod corpus;
pub mod embedding;
pub mod error;
pub mod evalstats;
pub mod lexicon;
pub mod scoring;
pub mod stats;
pub mod synth;
pub mod wordnet;

pub use error::{Error, Result};
