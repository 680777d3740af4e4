//! Episode records: ingestion, validation, filtering, and transcript truncation.
//!
//! The interchange format is newline-delimited JSON, one flat object per episode:
//!
//! ```text
//! {"show_id": "...", "episode_id": "...", "show_title": "...", "show_description": "...",
//!  "episode_title": "...", "episode_description": "...", "duration_s": 1834.2,
//!  "first_streams": 410, "qualified_streams": 233, "published": "2020-01-08T00:00:00Z",
//!  "language_hint": "en", "words": [{"t": "Hello", "s": 0.4, "e": 0.8}, ...]}
//! ```
//!
//! `published` and `language_hint` may be omitted or null. Any other key is rejected.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Slack allowed between the last word's end time and the episode duration.
pub const ALIGNMENT_TOLERANCE_S: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptWord {
    #[serde(rename = "t")]
    pub token: String,
    #[serde(rename = "s")]
    pub start_s: f64,
    #[serde(rename = "e")]
    pub end_s: f64,
}

impl TranscriptWord {
    pub fn new(token: impl Into<String>, start_s: f64, end_s: f64) -> Self {
        TranscriptWord {
            token: token.into(),
            start_s,
            end_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub show_id: String,
    pub episode_id: String,
    pub show_title: String,
    pub show_description: String,
    pub episode_title: String,
    pub episode_description: String,
    pub duration_s: f64,
    pub first_streams: u64,
    pub qualified_streams: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub published: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub language_hint: Option<String>,
    pub words: Vec<TranscriptWord>,
}

impl Episode {
    /// Show description followed by episode description.
    pub fn description(&self) -> String {
        join_nonempty(&self.show_description, &self.episode_description)
    }

    /// Transcript tokens joined by single spaces.
    pub fn transcript_text(&self) -> String {
        let mut out = String::new();
        for w in &self.words {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&w.token);
        }
        out
    }

    /// Check the record-level invariants.
    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| Error::Invariant {
            id: self.episode_id.clone(),
            message,
        };
        if self.qualified_streams > self.first_streams {
            return Err(fail(format!(
                "qualified_streams ({}) exceeds first_streams ({})",
                self.qualified_streams, self.first_streams
            )));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(fail(format!("duration_s must be positive, got {}", self.duration_s)));
        }
        let mut prev_start = 0.0_f64;
        for (i, w) in self.words.iter().enumerate() {
            if !(w.start_s.is_finite() && w.end_s.is_finite()) {
                return Err(fail(format!("word {i} has a non-finite time")));
            }
            if w.start_s < 0.0 || w.start_s > w.end_s {
                return Err(fail(format!(
                    "word {i} has start {} and end {}",
                    w.start_s, w.end_s
                )));
            }
            if w.start_s < prev_start {
                return Err(fail(format!("word {i} starts before the previous word")));
            }
            if w.end_s > self.duration_s + ALIGNMENT_TOLERANCE_S {
                return Err(fail(format!(
                    "word {i} ends at {} past the duration {}",
                    w.end_s, self.duration_s
                )));
            }
            prev_start = w.start_s;
        }
        Ok(())
    }
}

fn join_nonempty(a: &str, b: &str) -> String {
    match (a.trim().is_empty(), b.trim().is_empty()) {
        (true, true) => String::new(),
        (false, true) => a.trim().to_string(),
        (true, false) => b.trim().to_string(),
        (false, false) => format!("{}\n{}", a.trim(), b.trim()),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub episodes: Vec<Episode>,
    /// Set once the corpus has passed `apply_filters`; show ids are then unique.
    pub filtered: bool,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub min_duration_s: f64,
    /// The stream-count threshold used on the original data was never published;
    /// 10 is a placeholder and should be set deliberately for real corpora.
    pub min_streams: u64,
    pub truncate_s: f64,
    pub language: String,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_duration_s: 600.0,
            min_streams: 10,
            truncate_s: 600.0,
            language: "en".to_string(),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_duration_s > 0.0) {
            return Err(Error::Config("min_duration_s must be positive".into()));
        }
        if self.min_streams == 0 {
            return Err(Error::Config("min_streams must be positive".into()));
        }
        if !(self.truncate_s > 0.0) {
            return Err(Error::Config("truncate_s must be positive".into()));
        }
        if self.language.trim().is_empty() {
            return Err(Error::Config("language must be set".into()));
        }
        Ok(())
    }
}

const KEYS: [&str; 12] = [
    "show_id",
    "episode_id",
    "show_title",
    "show_description",
    "episode_title",
    "episode_description",
    "duration_s",
    "first_streams",
    "qualified_streams",
    "published",
    "language_hint",
    "words",
];

/// Read an episode file. Blank lines are skipped.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_corpus<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut episodes = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<corpus>", e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let episode = parse_episode(trimmed, idx + 1)?;
        episode.validate()?;
        episodes.push(episode);
    }
    Ok(Corpus {
        episodes,
        filtered: false,
    })
}

/// Parse one interchange record. `line` is 1-based and only used in errors.
pub fn parse_episode(text: &str, line: usize) -> Result<Episode> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Error::malformed(line, "<record>", e.to_string()))?;
    let obj = match value {
        Value::Object(obj) => obj,
        _ => return Err(Error::malformed(line, "<record>", "expected an object")),
    };
    if let Some(unknown) = obj.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(Error::malformed(line, unknown.as_str(), "unknown key"));
    }
    let fields = Fields { obj: &obj, line };
    let published = fields.opt_str("published")?;
    if let Some(ts) = &published {
        if !is_iso8601(ts) {
            return Err(Error::malformed(line, "published", format!("not an ISO-8601 timestamp: {ts}")));
        }
    }
    Ok(Episode {
        show_id: fields.str("show_id")?,
        episode_id: fields.str("episode_id")?,
        show_title: fields.str("show_title")?,
        show_description: fields.str("show_description")?,
        episode_title: fields.str("episode_title")?,
        episode_description: fields.str("episode_description")?,
        duration_s: fields.f64("duration_s")?,
        first_streams: fields.u64("first_streams")?,
        qualified_streams: fields.u64("qualified_streams")?,
        published,
        language_hint: fields.opt_str("language_hint")?,
        words: fields.words()?,
    })
}

fn is_iso8601(ts: &str) -> bool {
    chrono::DateTime::parse_from_rfc3339(ts).is_ok()
        || chrono::NaiveDateTime::parse_from_str(ts, "%Y-%m-%dT%H:%M:%S").is_ok()
        || chrono::NaiveDate::parse_from_str(ts, "%Y-%m-%d").is_ok()
}

struct Fields<'a> {
    obj: &'a Map<String, Value>,
    line: usize,
}

impl Fields<'_> {
    fn get(&self, key: &str) -> Result<&Value> {
        self.obj
            .get(key)
            .ok_or_else(|| Error::malformed(self.line, key, "missing"))
    }

    fn str(&self, key: &str) -> Result<String> {
        self.get(key)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Error::malformed(self.line, key, "expected a string"))
    }

    fn opt_str(&self, key: &str) -> Result<Option<String>> {
        match self.obj.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(Error::malformed(self.line, key, "expected a string or null")),
        }
    }

    fn f64(&self, key: &str) -> Result<f64> {
        self.get(key)?
            .as_f64()
            .ok_or_else(|| Error::malformed(self.line, key, "expected a number"))
    }

    fn u64(&self, key: &str) -> Result<u64> {
        self.get(key)?
            .as_u64()
            .ok_or_else(|| Error::malformed(self.line, key, "expected a nonnegative integer"))
    }

    fn words(&self) -> Result<Vec<TranscriptWord>> {
        let arr = self
            .get("words")?
            .as_array()
            .ok_or_else(|| Error::malformed(self.line, "words", "expected an array"))?;
        arr.iter()
            .enumerate()
            .map(|(i, w)| {
                let field = |k: &str| format!("words[{i}].{k}");
                let obj = w
                    .as_object()
                    .ok_or_else(|| Error::malformed(self.line, format!("words[{i}]"), "expected an object"))?;
                if let Some(k) = obj.keys().find(|k| !matches!(k.as_str(), "t" | "s" | "e")) {
                    return Err(Error::malformed(self.line, field(k), "unknown key"));
                }
                let token = obj
                    .get("t")
                    .and_then(Value::as_str)
                    .ok_or_else(|| Error::malformed(self.line, field("t"), "expected a string"))?;
                let start = obj
                    .get("s")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| Error::malformed(self.line, field("s"), "expected a number"))?;
                let end = obj
                    .get("e")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| Error::malformed(self.line, field("e"), "expected a number"))?;
                Ok(TranscriptWord::new(token, start, end))
            })
            .collect()
    }
}

/// Write episodes in the interchange format.
pub fn write_corpus<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    for ep in &corpus.episodes {
        let line = serde_json::to_string(ep).map_err(|e| Error::Internal(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::io("<corpus>", e))?;
    }
    Ok(())
}

/// Keep long, sufficiently streamed, target-language episodes, then pick one
/// representative per show: the most-streamed episode, ties to the smallest id.
///
/// Language detection runs over the show and episode descriptions unless the
/// record carries a `language_hint`.
pub fn apply_filters<F>(corpus: Corpus, cfg: &FilterConfig, lang_detector: F) -> Corpus
where
    F: Fn(&str) -> String,
{
    let mut best: BTreeMap<String, Episode> = BTreeMap::new();
    for ep in corpus.episodes {
        if ep.duration_s < cfg.min_duration_s || ep.first_streams < cfg.min_streams {
            continue;
        }
        let language = match &ep.language_hint {
            Some(hint) => hint.clone(),
            None => lang_detector(&ep.description()),
        };
        if language != cfg.language {
            continue;
        }
        match best.get(&ep.show_id) {
            Some(current) if !is_better_representative(&ep, current) => {}
            _ => {
                best.insert(ep.show_id.clone(), ep);
            }
        }
    }
    let mut episodes: Vec<Episode> = best.into_values().collect();
    episodes.sort_by(|a, b| a.episode_id.cmp(&b.episode_id));
    Corpus {
        episodes,
        filtered: true,
    }
}

fn is_better_representative(candidate: &Episode, current: &Episode) -> bool {
    candidate.first_streams > current.first_streams
        || (candidate.first_streams == current.first_streams
            && candidate.episode_id < current.episode_id)
}

/// Keep only words that start strictly before `truncate_s`.
pub fn truncate_transcript(episode: &Episode, truncate_s: f64) -> Result<Episode> {
    if !(truncate_s > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "truncate_s must be positive, got {truncate_s}"
        )));
    }
    let mut out = episode.clone();
    out.words.retain(|w| w.start_s < truncate_s);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn episode(show: &str, id: &str, duration: f64, first: u64) -> Episode {
        Episode {
            show_id: show.into(),
            episode_id: id.into(),
            show_title: "Show".into(),
            show_description: "A weekly show about gardens and the people who love them.".into(),
            episode_title: "Episode".into(),
            episode_description: "We talk about tomatoes, soil, and patience in the garden.".into(),
            duration_s: duration,
            first_streams: first,
            qualified_streams: first / 2,
            published: None,
            language_hint: None,
            words: vec![
                TranscriptWord::new("Hello", 1.0, 1.5),
                TranscriptWord::new("there", 599.0, 599.5),
                TranscriptWord::new("friends", 601.0, 601.4),
            ],
        }
    }

    fn english(_: &str) -> String {
        "en".into()
    }

    fn line_for(ep: &Episode) -> String {
        serde_json::to_string(ep).unwrap()
    }

    #[test]
    fn loads_three_valid_lines() {
        let text = [
            episode("s1", "e1", 900.0, 50),
            episode("s2", "e2", 900.0, 60),
            episode("s3", "e3", 900.0, 70),
        ]
        .iter()
        .map(line_for)
        .collect::<Vec<_>>()
        .join("\n");
        let corpus = read_corpus(text.as_bytes()).unwrap();
        assert_eq!(corpus.len(), 3);
        assert!(!corpus.filtered);
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        let corpus = read_corpus("".as_bytes()).unwrap();
        assert!(corpus.is_empty());
        assert!(!corpus.filtered);
    }

    #[test]
    fn qualified_above_first_names_episode() {
        let mut ep = episode("s1", "ep-bad", 900.0, 50);
        ep.qualified_streams = 51;
        let err = read_corpus(line_for(&ep).as_bytes()).unwrap_err();
        match err {
            Error::Invariant { id, .. } => assert_eq!(id, "ep-bad"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_field_names_line_and_field() {
        let good = line_for(&episode("s1", "e1", 900.0, 50));
        let bad = good.replace("\"first_streams\":50", "\"first_streams\":\"many\"");
        let text = format!("{good}\n{bad}");
        match read_corpus(text.as_bytes()).unwrap_err() {
            Error::Malformed { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "first_streams");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_and_missing_keys_rejected() {
        let good = line_for(&episode("s1", "e1", 900.0, 50));
        let extra = good.replacen('{', "{\"genre\":\"x\",", 1);
        assert!(matches!(
            read_corpus(extra.as_bytes()).unwrap_err(),
            Error::Malformed { ref field, .. } if field == "genre"
        ));
        let missing = good.replace("\"show_title\":\"Show\",", "");
        assert!(matches!(
            read_corpus(missing.as_bytes()).unwrap_err(),
            Error::Malformed { ref field, .. } if field == "show_title"
        ));
    }

    #[test]
    fn optional_fields_round_trip() {
        let mut ep = episode("s1", "e1", 900.0, 50);
        ep.published = Some("2020-02-01T10:00:00Z".into());
        ep.language_hint = Some("en".into());
        let parsed = parse_episode(&line_for(&ep), 1).unwrap();
        assert_eq!(parsed, ep);
        let mut bad = ep.clone();
        bad.published = Some("last tuesday".into());
        assert!(parse_episode(&line_for(&bad), 1).is_err());
    }

    #[test]
    fn unsorted_or_overlong_words_rejected() {
        let mut ep = episode("s1", "e1", 900.0, 50);
        ep.words.swap(0, 1);
        assert!(ep.validate().is_err());
        let mut ep = episode("s1", "e1", 601.0, 50);
        assert!(ep.validate().is_ok(), "601.4 is within the alignment slack");
        ep.words.push(TranscriptWord::new("late", 601.5, 602.5));
        assert!(ep.validate().is_err());
        ep.words.pop();
        ep.words.push(TranscriptWord::new("bad", 602.0, 601.9));
        assert!(ep.validate().is_err());
    }

    #[test]
    fn keeps_most_streamed_episode_per_show() {
        let corpus = Corpus {
            episodes: vec![episode("s1", "a", 900.0, 50), episode("s1", "b", 900.0, 200)],
            filtered: false,
        };
        let out = apply_filters(corpus, &FilterConfig::default(), english);
        assert_eq!(out.len(), 1);
        assert_eq!(out.episodes[0].episode_id, "b");
        assert!(out.filtered);
    }

    #[test]
    fn tie_break_prefers_smallest_episode_id() {
        let corpus = Corpus {
            episodes: vec![episode("s1", "z", 900.0, 80), episode("s1", "m", 900.0, 80)],
            filtered: false,
        };
        let out = apply_filters(corpus, &FilterConfig::default(), english);
        assert_eq!(out.episodes[0].episode_id, "m");
    }

    #[test]
    fn duration_stream_and_language_thresholds() {
        let mut es = episode("s4", "d", 900.0, 100);
        es.language_hint = Some("es".into());
        let corpus = Corpus {
            episodes: vec![
                episode("s1", "a", 599.0, 100),
                episode("s2", "b", 600.0, 100),
                episode("s3", "c", 900.0, 9),
                es,
            ],
            filtered: false,
        };
        let out = apply_filters(corpus, &FilterConfig::default(), english);
        let ids: Vec<_> = out.episodes.iter().map(|e| e.episode_id.as_str()).collect();
        assert_eq!(ids, vec!["b"]);
    }

    #[test]
    fn detector_sees_descriptions() {
        let corpus = Corpus {
            episodes: vec![episode("s1", "a", 900.0, 100)],
            filtered: false,
        };
        let out = apply_filters(corpus, &FilterConfig::default(), |text: &str| {
            assert!(text.contains("gardens") && text.contains("tomatoes"));
            "fr".to_string()
        });
        assert!(out.is_empty());
    }

    #[test]
    fn truncation_is_strict() {
        let ep = episode("s1", "e", 900.0, 10);
        let cut = truncate_transcript(&ep, 600.0).unwrap();
        assert_eq!(cut.words.len(), 2);
        assert_eq!(cut.episode_description, ep.episode_description);
        assert_eq!(truncate_transcript(&ep, 700.0).unwrap(), ep);
        let mut empty = ep.clone();
        empty.words.clear();
        assert!(truncate_transcript(&empty, 600.0).unwrap().words.is_empty());
        assert!(truncate_transcript(&ep, 0.0).is_err());
    }

    fn arb_corpus() -> impl Strategy<Value = Corpus> {
        prop::collection::vec((0u8..6, 0u8..40, 500.0f64..1200.0, 0u64..400), 0..30).prop_map(
            |rows| Corpus {
                episodes: rows
                    .into_iter()
                    .map(|(show, id, dur, streams)| {
                        episode(&format!("s{show}"), &format!("e{id:02}"), dur, streams)
                    })
                    .collect(),
                filtered: false,
            },
        )
    }

    proptest! {
        #[test]
        fn filtering_is_idempotent_and_one_per_show(corpus in arb_corpus()) {
            let cfg = FilterConfig::default();
            let n_in = corpus.len();
            let passing: std::collections::BTreeSet<String> = corpus
                .episodes
                .iter()
                .filter(|e| e.duration_s >= cfg.min_duration_s && e.first_streams >= cfg.min_streams)
                .map(|e| e.show_id.clone())
                .collect();
            let once = apply_filters(corpus, &cfg, english);
            prop_assert!(once.len() <= n_in);
            prop_assert_eq!(once.len(), passing.len());
            let twice = apply_filters(once.clone(), &cfg, english);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn truncation_composes(t1 in 1.0f64..900.0, dt in 0.0f64..300.0) {
            let ep = episode("s", "e", 1200.0, 10);
            let a = truncate_transcript(&truncate_transcript(&ep, t1).unwrap(), t1 + dt).unwrap();
            let b = truncate_transcript(&ep, t1).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
