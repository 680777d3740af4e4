//! Character-trigram language identification by rank-order profile distance.

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const UNDETERMINED: &str = "und";
pub const MIN_ALPHA_CHARS: usize = 20;
pub const PROFILE_SIZE: usize = 400;

const BUNDLED: &[(&str, &str)] = &[
    ("de", include_str!("../../data/langid/de.txt")),
    ("en", include_str!("../../data/langid/en.txt")),
    ("es", include_str!("../../data/langid/es.txt")),
    ("fr", include_str!("../../data/langid/fr.txt")),
    ("pt", include_str!("../../data/langid/pt.txt")),
];

/// Ranked trigrams for one language, most frequent first.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageProfile {
    pub code: String,
    ranks: HashMap<String, usize>,
}

impl LanguageProfile {
    pub fn from_ranked(code: impl Into<String>, trigrams: impl IntoIterator<Item = String>) -> Self {
        let mut ranks = HashMap::new();
        for g in trigrams {
            let next = ranks.len();
            ranks.entry(g).or_insert(next);
        }
        LanguageProfile {
            code: code.into(),
            ranks,
        }
    }

    /// Parse a profile file: `#` comment lines, then one trigram per line with
    /// `_` standing for a word boundary.
    pub fn parse(code: impl Into<String>, text: &str) -> Result<Self> {
        let code = code.into();
        let grams: Vec<String> = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .map(|l| l.trim().to_string())
            .collect();
        if grams.is_empty() {
            return Err(Error::Empty(format!("language profile `{code}`")));
        }
        if let Some(bad) = grams.iter().position(|g| g.chars().count() != 3) {
            return Err(Error::InvalidArgument(format!(
                "profile `{code}`: entry {} is not a trigram",
                bad + 1
            )));
        }
        Ok(Self::from_ranked(code, grams))
    }

    /// Build a profile from sample text.
    pub fn train(code: impl Into<String>, text: &str, size: usize) -> Self {
        Self::from_ranked(code, ranked_trigrams(text, size))
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }
}

/// Profiles for de, en, es, fr and pt.
pub fn default_profiles() -> &'static [LanguageProfile] {
    static PROFILES: OnceLock<Vec<LanguageProfile>> = OnceLock::new();
    PROFILES.get_or_init(|| {
        BUNDLED
            .iter()
            .map(|(code, text)| LanguageProfile::parse(*code, text).expect("bundled profile"))
            .collect()
    })
}

fn trigram_counts(text: &str) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    let lower = text.to_lowercase();
    for word in lower.split(|c: char| !c.is_alphabetic()).filter(|w| !w.is_empty()) {
        let padded: Vec<char> = std::iter::once('_')
            .chain(word.chars())
            .chain(std::iter::once('_'))
            .collect();
        for w in padded.windows(3) {
            *counts.entry(w.iter().collect::<String>()).or_insert(0) += 1;
        }
    }
    counts
}

/// The `size` most frequent trigrams, ties broken lexicographically.
pub fn ranked_trigrams(text: &str, size: usize) -> Vec<String> {
    let mut counts: Vec<(String, usize)> = trigram_counts(text).into_iter().collect();
    counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    counts.into_iter().take(size).map(|(g, _)| g).collect()
}

/// Out-of-place distance between a document ranking and a language profile.
/// Trigrams missing from the profile cost the profile size.
fn out_of_place(doc: &[String], profile: &LanguageProfile) -> usize {
    let penalty = profile.len().max(doc.len());
    doc.iter()
        .enumerate()
        .map(|(i, g)| profile.ranks.get(g).map_or(penalty, |&r| r.abs_diff(i)))
        .sum()
}

/// Return the closest language and the margin to the runner-up, normalized
/// by the runner-up distance. Texts with too few letters give `("und", 0)`.
pub fn detect_language(text: &str, profiles: &[LanguageProfile]) -> Result<(String, f64)> {
    if profiles.is_empty() {
        return Err(Error::InvalidArgument("no language profiles".into()));
    }
    if text.chars().filter(|c| c.is_alphabetic()).count() < MIN_ALPHA_CHARS {
        return Ok((UNDETERMINED.to_string(), 0.0));
    }
    let doc = ranked_trigrams(text, PROFILE_SIZE);
    let mut dists: Vec<(usize, &str)> = profiles
        .iter()
        .map(|p| (out_of_place(&doc, p), p.code.as_str()))
        .collect();
    dists.sort();
    let (best, code) = dists[0];
    let confidence = match dists.get(1) {
        Some(&(runner, _)) if runner > 0 => (runner - best) as f64 / runner as f64,
        Some(_) => 0.0,
        None => 1.0,
    };
    Ok((code.to_string(), confidence))
}

/// Language code only, with the bundled profiles.
pub fn detect_default(text: &str) -> String {
    detect_language(text, default_profiles())
        .map(|(code, _)| code)
        .unwrap_or_else(|_| UNDETERMINED.to_string())
}
