//! Emotion word lists, the easy-word list, and sentence sentiment scorers.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textkit::Token;

static EASY_WORDS: &str = include_str!("../data/easy_words.txt");
static SAMPLE_EMOTIONS: &str = include_str!("../data/emotion_sample.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Anger,
    Anticipation,
    Disgust,
    Fear,
    Joy,
    Sadness,
    Surprise,
    Trust,
    Positive,
    Negative,
}

impl Emotion {
    pub const COUNT: usize = 10;

    pub const ALL: [Emotion; Emotion::COUNT] = [
        Emotion::Anger,
        Emotion::Anticipation,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Joy,
        Emotion::Sadness,
        Emotion::Surprise,
        Emotion::Trust,
        Emotion::Positive,
        Emotion::Negative,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Anticipation => "anticipation",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Joy => "joy",
            Emotion::Sadness => "sadness",
            Emotion::Surprise => "surprise",
            Emotion::Trust => "trust",
            Emotion::Positive => "positive",
            Emotion::Negative => "negative",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Emotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Emotion::ALL
            .iter()
            .copied()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown emotion label `{s}`")))
    }
}

/// A set of emotion labels packed into a bitmask.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct LabelSet(u16);

impl LabelSet {
    pub fn contains(self, e: Emotion) -> bool {
        self.0 & (1 << e.index()) != 0
    }

    pub fn insert(&mut self, e: Emotion) {
        self.0 |= 1 << e.index();
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Emotion> {
        Emotion::ALL.into_iter().filter(move |e| self.contains(*e))
    }
}

impl FromIterator<Emotion> for LabelSet {
    fn from_iter<I: IntoIterator<Item = Emotion>>(iter: I) -> Self {
        let mut set = LabelSet::default();
        for e in iter {
            set.insert(e);
        }
        set
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmotionLexicon {
    words: HashMap<String, LabelSet>,
}

impl EmotionLexicon {
    pub fn insert(&mut self, word: &str, label: Emotion) {
        self.words.entry(word.to_lowercase()).or_default().insert(label);
    }

    /// Labels for a word, matched on its case-folded form.
    pub fn labels(&self, word: &str) -> LabelSet {
        match self.words.get(word) {
            Some(l) => *l,
            None => self.words.get(&word.to_lowercase()).copied().unwrap_or_default(),
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Read `word<TAB>label<TAB>{0|1}` rows. Rows flagged 0 are ignored; blank
/// lines and `#` comments are skipped.
pub fn read_emotion_lexicon<R: BufRead>(reader: R) -> Result<EmotionLexicon> {
    let mut lex = EmotionLexicon::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<emotion lexicon>", e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::malformed(i + 1, "row", "expected word<TAB>label<TAB>flag"));
        }
        let label: Emotion = cols[1]
            .trim()
            .parse()
            .map_err(|e: Error| Error::malformed(i + 1, "label", e.to_string()))?;
        match cols[2].trim() {
            "1" => lex.insert(cols[0].trim(), label),
            "0" => {}
            other => {
                return Err(Error::malformed(i + 1, "flag", format!("expected 0 or 1, got `{other}`")))
            }
        }
    }
    Ok(lex)
}

pub fn load_emotion_lexicon(path: impl AsRef<Path>) -> Result<EmotionLexicon> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_emotion_lexicon(std::io::BufReader::new(file))
        .map_err(|e| e.context(path.display().to_string()))
}

/// A small hand-labeled lexicon in the same format, for tests and synthetic runs.
pub fn sample_emotion_lexicon() -> &'static EmotionLexicon {
    static LEX: OnceLock<EmotionLexicon> = OnceLock::new();
    LEX.get_or_init(|| read_emotion_lexicon(SAMPLE_EMOTIONS.as_bytes()).expect("bundled lexicon"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EasyWordSet {
    words: HashSet<String>,
}

impl EasyWordSet {
    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    /// Whether a word counts as easy: its case-folded form, or that form with
    /// a final `s` removed, is on the list.
    pub fn is_easy(&self, word: &str) -> bool {
        let w = word.to_lowercase();
        self.words.contains(&w) || w.strip_suffix('s').is_some_and(|s| self.words.contains(s))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl<S: AsRef<str>> FromIterator<S> for EasyWordSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        EasyWordSet {
            words: iter
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
        }
    }
}

pub fn read_easy_words<R: BufRead>(reader: R) -> Result<EasyWordSet> {
    let mut lines = Vec::new();
    for line in reader.lines() {
        lines.push(line.map_err(|e| Error::io("<easy words>", e))?);
    }
    let set: EasyWordSet = lines.iter().filter(|l| !l.starts_with('#')).collect();
    if set.is_empty() {
        return Err(Error::Empty("easy-word list".into()));
    }
    Ok(set)
}

pub fn load_easy_words(path: impl AsRef<Path>) -> Result<EasyWordSet> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_easy_words(std::io::BufReader::new(file)).map_err(|e| e.context(path.display().to_string()))
}

/// The bundled Dale-Chall list of familiar words.
pub fn default_easy_words() -> &'static EasyWordSet {
    static SET: OnceLock<EasyWordSet> = OnceLock::new();
    SET.get_or_init(|| read_easy_words(EASY_WORDS.as_bytes()).expect("bundled list"))
}

/// Which text of an episode a sentence came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextKind {
    Description,
    Transcript,
}

impl TextKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TextKind::Description => "description",
            TextKind::Transcript => "transcript",
        }
    }
}

/// Where a sentence sits in the corpus.
#[derive(Debug, Clone, Copy)]
pub struct SentenceRef<'a> {
    pub episode_id: &'a str,
    pub text: TextKind,
    pub index: usize,
}

/// Scores a sentence in `[-1, 1]`.
pub trait SentenceScorer: Send + Sync {
    fn score(&self, at: SentenceRef<'_>, sentence: &[Token]) -> f64;
}

/// `(P - N) / (P + N)` over tokens labeled positive / negative, 0 without hits.
pub fn lexicon_sentence_score(sentence: &[Token], lex: &EmotionLexicon) -> f64 {
    let (mut p, mut n) = (0usize, 0usize);
    for tok in sentence {
        let labels = lex.labels(&tok.norm);
        p += usize::from(labels.contains(Emotion::Positive));
        n += usize::from(labels.contains(Emotion::Negative));
    }
    if p + n == 0 {
        0.0
    } else {
        ((p as f64 - n as f64) / (p + n) as f64).clamp(-1.0, 1.0)
    }
}

pub struct LexiconScorer<'a> {
    pub lexicon: &'a EmotionLexicon,
}

impl SentenceScorer for LexiconScorer<'_> {
    fn score(&self, _at: SentenceRef<'_>, sentence: &[Token]) -> f64 {
        lexicon_sentence_score(sentence, self.lexicon)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreRecord {
    episode_id: String,
    sentence_index: usize,
    score: f64,
    #[serde(default = "default_text")]
    text: TextKind,
}

fn default_text() -> TextKind {
    TextKind::Description
}

/// Precomputed scores from newline-delimited
/// `{"episode_id", "sentence_index", "score"}` records, with an optional
/// `"text"` of `"description"` (default) or `"transcript"`. Sentences with no
/// record score 0.
#[derive(Debug, Clone, Default)]
pub struct ExternalScores {
    scores: HashMap<(String, TextKind, usize), f64>,
}

impl ExternalScores {
    pub fn insert(&mut self, episode_id: &str, text: TextKind, index: usize, score: f64) {
        self.scores
            .insert((episode_id.to_string(), text, index), score.clamp(-1.0, 1.0));
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

pub fn read_external_scores<R: BufRead>(reader: R) -> Result<ExternalScores> {
    let mut out = ExternalScores::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<sentence scores>", e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let rec: ScoreRecord = serde_json::from_str(&line)
            .map_err(|e| Error::malformed(i + 1, "record", e.to_string()))?;
        if !rec.score.is_finite() {
            return Err(Error::malformed(i + 1, "score", "not finite"));
        }
        out.insert(&rec.episode_id, rec.text, rec.sentence_index, rec.score);
    }
    Ok(out)
}

pub fn load_external_scores(path: impl AsRef<Path>) -> Result<ExternalScores> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_external_scores(std::io::BufReader::new(file))
        .map_err(|e| e.context(path.display().to_string()))
}

impl SentenceScorer for ExternalScores {
    fn score(&self, at: SentenceRef<'_>, _sentence: &[Token]) -> f64 {
        self.scores
            .get(&(at.episode_id.to_string(), at.text, at.index))
            .copied()
            .unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textkit::tokenize;
    use proptest::prelude::*;

    fn lex(rows: &str) -> EmotionLexicon {
        read_emotion_lexicon(rows.as_bytes()).unwrap()
    }

    #[test]
    fn flag_semantics() {
        let l = lex("abandon\tfear\t1\nabandon\tjoy\t0\n");
        assert!(l.labels("abandon").contains(Emotion::Fear));
        assert!(!l.labels("abandon").contains(Emotion::Joy));
        assert!(l.labels("Abandon").contains(Emotion::Fear));
    }

    #[test]
    fn duplicates_are_a_union() {
        let once = lex("good\tpositive\t1\ngood\tjoy\t1\n");
        let twice = lex("good\tjoy\t1\ngood\tpositive\t1\ngood\tjoy\t1\n");
        assert_eq!(once, twice);
        assert_eq!(once.len(), 1);
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let err = read_emotion_lexicon("a\tjoy\t1\nb\tglee\t1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }), "{err}");
        let err = read_emotion_lexicon("a\tjoy\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 1, .. }));
        let err = read_emotion_lexicon("a\tjoy\t2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 1, .. }));
    }

    #[test]
    fn easy_words() {
        let set = read_easy_words("Cat\ndog\ncat\n".as_bytes()).unwrap();
        assert_eq!(set.len(), 2);
        assert!(set.contains("cat") && set.contains("dog"));
        assert!(set.is_easy("Dogs"));
        assert!(!set.is_easy("cow"));
        assert!(read_easy_words("".as_bytes()).is_err());
        assert!(read_easy_words("\n \n".as_bytes()).is_err());
    }

    #[test]
    fn bundled_easy_word_count() {
        assert_eq!(default_easy_words().len(), 2941);
    }

    #[test]
    fn sentence_scores() {
        let l = lex("good\tpositive\t1\ngreat\tpositive\t1\nbad\tnegative\t1\n");
        assert_eq!(lexicon_sentence_score(&tokenize("Good, great!"), &l), 1.0);
        assert_eq!(lexicon_sentence_score(&tokenize("good but bad"), &l), 0.0);
        assert_eq!(lexicon_sentence_score(&tokenize("nothing here"), &l), 0.0);
        assert_eq!(lexicon_sentence_score(&tokenize("good good bad"), &l), 1.0 / 3.0);
    }

    #[test]
    fn external_scores_lookup_and_clamp() {
        let s = read_external_scores(
            "{\"episode_id\":\"e1\",\"sentence_index\":0,\"score\":0.9}\n\
             {\"episode_id\":\"e1\",\"sentence_index\":1,\"score\":-3,\"text\":\"transcript\"}\n"
                .as_bytes(),
        )
        .unwrap();
        let at = |text, index| SentenceRef {
            episode_id: "e1",
            text,
            index,
        };
        assert_eq!(s.score(at(TextKind::Description, 0), &[]), 0.9);
        assert_eq!(s.score(at(TextKind::Transcript, 1), &[]), -1.0);
        assert_eq!(s.score(at(TextKind::Description, 1), &[]), 0.0);
        assert!(read_external_scores("{\"episode_id\":\"e\"}\n".as_bytes()).is_err());
    }

    #[test]
    fn sample_lexicon_loads() {
        let l = sample_emotion_lexicon();
        assert!(l.len() > 50);
        assert!(l.labels("happy").contains(Emotion::Joy));
    }

    proptest! {
        #[test]
        fn swapping_polarity_negates_score(labels in prop::collection::vec(0u8..3, 0..12)) {
            let mut fwd = EmotionLexicon::default();
            let mut rev = EmotionLexicon::default();
            let mut words = Vec::new();
            for (i, l) in labels.iter().enumerate() {
                let w = format!("w{i}");
                match l {
                    1 => { fwd.insert(&w, Emotion::Positive); rev.insert(&w, Emotion::Negative); }
                    2 => { fwd.insert(&w, Emotion::Negative); rev.insert(&w, Emotion::Positive); }
                    _ => {}
                }
                words.push(w);
            }
            let toks = tokenize(&words.join(" "));
            prop_assert_eq!(lexicon_sentence_score(&toks, &fwd), -lexicon_sentence_score(&toks, &rev));
        }

        #[test]
        fn loading_is_order_independent(mut rows in prop::collection::vec((0usize..5, 0usize..10, any::<bool>()), 0..20), seed in any::<u64>()) {
            let render = |rows: &[(usize, usize, bool)]| {
                rows.iter()
                    .map(|(w, l, f)| format!("w{w}\t{}\t{}\n", Emotion::ALL[*l], u8::from(*f)))
                    .collect::<String>()
            };
            let a = lex(&render(&rows));
            use rand::seq::SliceRandom;
            rows.shuffle(&mut crate::seed::rng(seed));
            prop_assert_eq!(a, lex(&render(&rows)));
        }
    }
}
