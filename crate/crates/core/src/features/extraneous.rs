//! Promotional and other extraneous description sentences.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::lexicons::SentenceRef;
use crate::textkit::{normalize_text, Token};

/// Decides whether a description sentence is promotional or extraneous.
pub trait ExtraneousClassifier: Send + Sync {
    fn is_extraneous(&self, at: SentenceRef<'_>, sentence: &[Token]) -> bool;
}

pub const DEFAULT_PROMO_MARKERS: &[&str] = &[
    "sponsored by",
    "promo code",
    "use code",
    "discount code",
    "% off",
    "free trial",
    "sign up",
    "subscribe",
    "patreon",
    "support the show",
    "support this podcast",
    "follow us",
    "find us on",
    "rate and review",
    "leave a review",
    "leave us a review",
    "check out",
    "visit",
    "instagram",
    "twitter",
    "facebook",
    "youtube",
    "merch",
    "send us a voice message",
    "advertising inquiries",
    "privacy policy",
    "show notes",
];

/// Flags sentences with a URL or handle placeholder, or any marker phrase
/// (matched on whole normalized tokens).
#[derive(Debug, Clone)]
pub struct MarkerClassifier {
    markers: Vec<Vec<String>>,
}

impl MarkerClassifier {
    pub fn new<S: AsRef<str>>(markers: &[S]) -> Self {
        MarkerClassifier {
            markers: markers
                .iter()
                .map(|m| {
                    crate::textkit::tokenize(&normalize_text(m.as_ref()))
                        .into_iter()
                        .map(|t| t.norm)
                        .collect::<Vec<_>>()
                })
                .filter(|m| !m.is_empty())
                .collect(),
        }
    }
}

impl Default for MarkerClassifier {
    fn default() -> Self {
        MarkerClassifier::new(DEFAULT_PROMO_MARKERS)
    }
}

impl ExtraneousClassifier for MarkerClassifier {
    fn is_extraneous(&self, _at: SentenceRef<'_>, sentence: &[Token]) -> bool {
        if sentence.iter().any(Token::is_special) {
            return true;
        }
        let norms: Vec<&str> = sentence.iter().map(|t| t.norm.as_str()).collect();
        self.markers.iter().any(|m| {
            norms
                .windows(m.len())
                .any(|w| w.iter().zip(m).all(|(a, b)| *a == b))
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Label {
    Content,
    Extraneous,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelRecord {
    episode_id: String,
    sentence_index: usize,
    label: Label,
}

/// Per-sentence labels from newline-delimited
/// `{"episode_id", "sentence_index", "label": "content"|"extraneous"}` records.
/// Sentences with no record are content.
#[derive(Debug, Clone, Default)]
pub struct ExternalLabels {
    extraneous: HashMap<String, Vec<usize>>,
}

impl ExternalLabels {
    pub fn insert(&mut self, episode_id: &str, index: usize) {
        let v = self.extraneous.entry(episode_id.to_string()).or_default();
        if let Err(pos) = v.binary_search(&index) {
            v.insert(pos, index);
        }
    }
}

pub fn read_external_labels<R: BufRead>(reader: R) -> Result<ExternalLabels> {
    let mut out = ExternalLabels::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<sentence labels>", e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let rec: LabelRecord = serde_json::from_str(&line)
            .map_err(|e| Error::malformed(i + 1, "record", e.to_string()))?;
        if let Label::Extraneous = rec.label {
            out.insert(&rec.episode_id, rec.sentence_index);
        }
    }
    Ok(out)
}

pub fn load_external_labels(path: impl AsRef<Path>) -> Result<ExternalLabels> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_external_labels(std::io::BufReader::new(file))
        .map_err(|e| e.context(path.display().to_string()))
}

impl ExtraneousClassifier for ExternalLabels {
    fn is_extraneous(&self, at: SentenceRef<'_>, _sentence: &[Token]) -> bool {
        self.extraneous
            .get(at.episode_id)
            .is_some_and(|v| v.binary_search(&at.index).is_ok())
    }
}

/// Fraction of sentences labeled extraneous, and the sentences that remain.
pub fn description_ad_fraction(
    sentences: &[Vec<Token>],
    classifier: &dyn ExtraneousClassifier,
    episode_id: &str,
) -> (f64, Vec<Vec<Token>>) {
    let mut kept = Vec::with_capacity(sentences.len());
    let mut flagged = 0usize;
    for (index, s) in sentences.iter().enumerate() {
        let at = SentenceRef {
            episode_id,
            text: crate::lexicons::TextKind::Description,
            index,
        };
        if classifier.is_extraneous(at, s) {
            flagged += 1;
        } else {
            kept.push(s.clone());
        }
    }
    let frac = if sentences.is_empty() {
        0.0
    } else {
        flagged as f64 / sentences.len() as f64
    };
    (frac, kept)
}
