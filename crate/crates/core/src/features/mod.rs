//! Per-episode stylistic features.

pub mod extract;
pub mod extraneous;
pub mod lexical;
pub mod lm;
pub mod readability;
pub mod tfidf;
pub mod timing;
pub mod vector;

pub use extract::{
    build_idf, build_unigram_lm, extract_all, extract_features, features_from_texts, prepare_texts,
    EpisodeTexts, FeatureConfig, FeatureResources, SpeechRateScope,
};
pub use extraneous::{description_ad_fraction, ExternalLabels, ExtraneousClassifier, MarkerClassifier};
pub use lexical::{emotion_proportions, pos_proportions, sentence_polarity, vocab_entropy, PosProportions};
pub use lm::{cross_entropy, distinctiveness, UnigramLM};
pub use readability::{dale_chall, flesch_kincaid};
pub use tfidf::{faithfulness, Idf};
pub use timing::{non_speech_time, speech_rate};
pub use vector::{
    column_group, column_index, feature_columns, write_jsonl, Family, FeatureFlags, FeatureTable, FeatureVector,
    FEATURE_GROUPS,
};
