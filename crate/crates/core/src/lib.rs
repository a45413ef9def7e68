//! Lexicon-based detection of linguistic uncertainty in Arabic posts, and the
//! regression toolkit used to relate it to engagement.
//!
//! The pipeline is: [`corpus`] ingestion → [`classifier`] labels →
//! [`inference`] (group means, log-linear OLS with author-clustered standard
//! errors, negative binomial IRRs) → [`report`] artifacts. [`validation`]
//! scores the classifier against human annotation and [`simulate`] produces
//! corpora with known ground truth.

pub mod classifier;
pub mod corpus;
pub mod inference;
pub mod lexicon;
pub mod report;
pub mod simulate;
pub mod validation;

pub use classifier::{classify_corpus, ClassificationResult, Classifier, LabeledCorpus, LabeledRecord};
pub use corpus::{dedupe, derive_features, load_corpus, Corpus, TweetRecord};
pub use lexicon::{normalize, Lexicon, MarkerCategory, NormalizedText};
