//! Engagement classification from stylistic, topic and n-gram features.

pub mod cv;
pub mod logreg;
pub mod ngrams;

pub use cv::{
    ablation, column_groups, cross_validate, labeled_rows, stratified_folds, sweep_k, top_weighted_ngrams,
    AblationRow, CvResult, Representation, SweepRow,
};
pub use logreg::{gradient, objective, train_logreg, Design, LogRegModel, LogRegParams, Standardizer};
pub use ngrams::{build_ngram_vocab, ngrams, tfidf_transform, NgramVocab, SparseMatrix};
