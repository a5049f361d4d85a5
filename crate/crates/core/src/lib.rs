//! Input topic identification for web form fields.
//!
//! Fields are turned into token lists from their attributes and nearby
//! label texts ([`extract`]), weighted with tf-idf and projected into a
//! latent semantic space ([`semantic`], [`model`]), and labeled with topics
//! by nearest-neighbour voting, optionally combined with substring rules
//! ([`infer`]). [`labeler`] helps label a training corpus cluster by
//! cluster and [`eval`] runs repeated split experiments.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod extract;
pub mod infer;
pub mod labeler;
pub mod model;
pub mod semantic;
pub mod stats;

pub use corpus::{BowVector, Corpus, Dictionary, Document, TopicMap};
pub use error::{Error, Result};
pub use extract::{ExtractionConfig, FeatureVector, FieldRef, Page};
pub use infer::{DataBank, HybridMode, InferenceResult, Method, Rule, RuleSet, SimilarityIndex};
pub use model::SemanticModel;
pub use semantic::{cosine_similarity, ConceptVector, LsiModel, TfIdfModel, TfIdfVector};
pub use stats::{paired_t_test, PairedTTestResult};
