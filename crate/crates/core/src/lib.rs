//! Classifier-gated sentence simplification for machine translation.
//!
//! A complex sentence is run through a simplification engine; the
//! (original, simplified) pair is scored with seventeen sentence-level
//! quality-estimation features and a binary classifier decides which of
//! the two sentences is forwarded to the downstream translation engine.
//!
//! The crate is organised bottom-up:
//!
//! * [`corpus`]: tokenization, annotated-pair and parallel-corpus I/O.
//! * [`ngram_lm`], [`lexicon`], [`freq_stats`]: trained resources.
//! * [`features`]: the 17-dimensional feature vector.
//! * [`classifiers`]: Gaussian naive Bayes and a Pegasos linear SVM.
//! * [`evaluation`]: confusion matrices, agreement and error metrics.
//! * [`gate`]: engine adapters and the routing pipeline.
//! * [`resources`]: on-disk resource bundle with a provenance manifest.

pub mod classifiers;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod freq_stats;
pub mod gate;
pub mod lexicon;
pub mod ngram_lm;
pub mod par;
pub mod resources;

pub use error::{Error, Result};
