//! Tokens, sentences, syllables, part-of-speech tags and language identification.

pub mod langid;
pub mod normalize;
pub mod pos;
pub mod syllables;
pub mod tagger;
pub mod tokenize;

pub use langid::{default_profiles, detect_language, LanguageProfile};
pub use normalize::{normalize_text, normalize_token, HANDLE_TOKEN, URL_TOKEN};
pub use pos::PosTag;
pub use syllables::count_syllables;
pub use tagger::{default_tagger, pos_tag, read_tagged_corpus, train_tagger, TaggerModel};
pub use tokenize::{tokenize, tokenize_sentences, Token};
