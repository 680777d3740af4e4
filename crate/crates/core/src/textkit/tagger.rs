//! Greedy averaged-perceptron part-of-speech tagger.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::OnceLock;

use rand::seq::SliceRandom;

use super::pos::PosTag;
use super::tokenize::Token;
use crate::error::{Error, Result};
use crate::seed;

pub const MODEL_VERSION: &str = "podstyle-tagger 1";

const N_TAGS: usize = PosTag::COUNT;
const START: [&str; 2] = ["-START-", "-START2-"];
const END: [&str; 2] = ["-END-", "-END2-"];

/// Words seen at least this often with one tag this consistently skip the model.
const DICT_MIN_FREQ: usize = 20;
const DICT_MIN_SHARE: f64 = 0.97;

static DEFAULT_SAMPLE: &str = include_str!("../../data/tagged_en_sample.tsv");

pub type TaggedSentence = Vec<(String, PosTag)>;

#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    pub version: String,
    pub tags: Vec<PosTag>,
    weights: HashMap<String, [f64; N_TAGS]>,
    tag_dict: HashMap<String, PosTag>,
}

/// Tags fixed by rule regardless of the model.
fn forced_tag(tok: &Token) -> Option<PosTag> {
    if tok.is_special() {
        return Some(PosTag::X);
    }
    let punct = |c: char| {
        matches!(
            c,
            '.' | ',' | ';' | ':' | '!' | '?' | '\'' | '"' | '(' | ')' | '[' | ']' | '{' | '}'
                | '-' | '/' | '\u{2026}' | '\u{2013}' | '\u{2014}' | '\u{2018}' | '\u{2019}'
                | '\u{201c}' | '\u{201d}' | '`'
        )
    };
    if !tok.surface.is_empty() && tok.surface.chars().all(punct) {
        return Some(PosTag::Punct);
    }
    None
}

/// Word form used for features: lower-cased, with digit-bearing shapes collapsed.
fn feature_form(word: &str) -> String {
    let lower = word.to_lowercase();
    if lower.len() == 4 && lower.chars().all(|c| c.is_ascii_digit()) {
        return "!YEAR".to_string();
    }
    if lower.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        return "!DIGITS".to_string();
    }
    if lower.contains('-') && !lower.starts_with('-') {
        return "!HYPHEN".to_string();
    }
    lower
}

fn shape(word: &str) -> &'static str {
    let mut chars = word.chars();
    let first = chars.next();
    let has_upper_rest = word.chars().skip(1).any(char::is_uppercase);
    match first {
        Some(c) if c.is_uppercase() && word.chars().all(|c| !c.is_lowercase()) => "AA",
        Some(c) if c.is_uppercase() && has_upper_rest => "AaA",
        Some(c) if c.is_uppercase() => "Aa",
        Some(c) if c.is_numeric() => "9",
        Some(c) if c.is_lowercase() => "a",
        _ => "-",
    }
}

fn suffix(s: &str, n: usize) -> &str {
    let count = s.chars().count();
    if count <= n {
        return s;
    }
    let (idx, _) = s.char_indices().nth(count - n).expect("in range");
    &s[idx..]
}

fn prefix(s: &str) -> &str {
    s.chars().next().map_or("", |c| &s[..c.len_utf8()])
}

/// Features for position `i` of the padded context (`context[i + 2]` is the word).
fn features(i: usize, surface: &str, context: &[String], prev: &str, prev2: &str) -> Vec<String> {
    let w = &context[i + 2];
    let p1 = &context[i + 1];
    let n1 = &context[i + 3];
    vec![
        "bias".to_string(),
        format!("i suffix {}", suffix(w, 3)),
        format!("i pref1 {}", prefix(w)),
        format!("i shape {}", shape(surface)),
        format!("i-1 tag {prev}"),
        format!("i-2 tag {prev2}"),
        format!("i tag+i-2 tag {prev} {prev2}"),
        format!("i word {w}"),
        format!("i-1 tag+i word {prev} {w}"),
        format!("i-1 word {p1}"),
        format!("i-1 suffix {}", suffix(p1, 3)),
        format!("i-2 word {}", context[i]),
        format!("i+1 word {n1}"),
        format!("i+1 suffix {}", suffix(n1, 3)),
        format!("i+2 word {}", context[i + 4]),
    ]
}

fn padded_context<'a>(words: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut ctx: Vec<String> = START.iter().map(|s| s.to_string()).collect();
    ctx.extend(words.map(feature_form));
    ctx.extend(END.iter().map(|s| s.to_string()));
    ctx
}

impl TaggerModel {
    fn empty() -> Self {
        TaggerModel {
            version: MODEL_VERSION.to_string(),
            tags: PosTag::ALL.to_vec(),
            weights: HashMap::new(),
            tag_dict: HashMap::new(),
        }
    }

    fn scores(&self, feats: &[String]) -> [f64; N_TAGS] {
        let mut scores = [0.0; N_TAGS];
        for f in feats {
            if let Some(w) = self.weights.get(f) {
                for (s, x) in scores.iter_mut().zip(w) {
                    *s += x;
                }
            }
        }
        scores
    }

    fn best(&self, feats: &[String]) -> PosTag {
        let scores = self.scores(feats);
        // Ties go to the first tag in the fixed tag order.
        let mut best = 0;
        for k in 1..N_TAGS {
            if scores[k] > scores[best] {
                best = k;
            }
        }
        PosTag::ALL[best]
    }

    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    /// Write the flat text format: a version line, `@dict<TAB>word<TAB>TAG`
    /// lines, then `feature<TAB>TAG<TAB>weight` for every nonzero weight.
    /// Keys are sorted so output is stable.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<tagger model>", e);
        writeln!(out, "{}", self.version).map_err(io)?;
        let mut dict: Vec<_> = self.tag_dict.iter().collect();
        dict.sort();
        for (word, tag) in dict {
            writeln!(out, "@dict\t{word}\t{tag}").map_err(io)?;
        }
        let mut feats: Vec<_> = self.weights.iter().collect();
        feats.sort_by(|a, b| a.0.cmp(b.0));
        for (feat, w) in feats {
            for (k, x) in w.iter().enumerate() {
                if *x != 0.0 {
                    writeln!(out, "{feat}\t{}\t{x}", PosTag::ALL[k]).map_err(io)?;
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write(&mut out)?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut model = TaggerModel::empty();
        let mut lines = reader.lines();
        match lines.next() {
            Some(Ok(v)) if v == MODEL_VERSION => model.version = v,
            Some(Ok(v)) => {
                return Err(Error::malformed(1, "version", format!("unsupported `{v}`")))
            }
            Some(Err(e)) => return Err(Error::io("<tagger model>", e)),
            None => return Err(Error::Empty("tagger model".into())),
        }
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line.map_err(|e| Error::io("<tagger model>", e))?;
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 3 {
                return Err(Error::malformed(lineno, "row", "expected 3 tab-separated fields"));
            }
            let tag: PosTag = parts[if parts[0] == "@dict" { 2 } else { 1 }]
                .parse()
                .map_err(|e: Error| Error::malformed(lineno, "tag", e.to_string()))?;
            if parts[0] == "@dict" {
                model.tag_dict.insert(parts[1].to_string(), tag);
                continue;
            }
            let w: f64 = parts[2]
                .parse()
                .map_err(|_| Error::malformed(lineno, "weight", format!("`{}`", parts[2])))?;
            if !w.is_finite() {
                return Err(Error::malformed(lineno, "weight", "not finite"));
            }
            model.weights.entry(parts[0].to_string()).or_insert([0.0; N_TAGS])[tag.index()] = w;
        }
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(std::io::BufReader::new(file))
    }
}

/// Read "surface<TAB>TAG" lines with blank lines between sentences. Lines
/// starting with `#` that contain no tab are comments.
pub fn read_tagged_corpus<R: BufRead>(reader: R) -> Result<Vec<TaggedSentence>> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<tagged corpus>", e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        if line.starts_with('#') && !line.contains('\t') {
            continue;
        }
        let (surface, tag) = line
            .split_once('\t')
            .ok_or_else(|| Error::malformed(i + 1, "row", "expected surface<TAB>TAG"))?;
        let tag: PosTag = tag
            .trim()
            .parse()
            .map_err(|e: Error| Error::malformed(i + 1, "tag", e.to_string()))?;
        current.push((surface.to_string(), tag));
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

/// The bundled English training sample.
pub fn default_training_sample() -> Vec<TaggedSentence> {
    read_tagged_corpus(DEFAULT_SAMPLE.as_bytes()).expect("bundled sample parses")
}

/// A model trained once per process on the bundled sample (5 epochs, seed 0).
pub fn default_tagger() -> &'static TaggerModel {
    static MODEL: OnceLock<TaggerModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        train_tagger(&default_training_sample(), 5, 0).expect("bundled sample trains")
    })
}

struct Averager {
    totals: HashMap<String, [f64; N_TAGS]>,
    stamps: HashMap<String, [u64; N_TAGS]>,
    step: u64,
}

impl Averager {
    fn update(&mut self, model: &mut TaggerModel, truth: PosTag, guess: PosTag, feats: &[String]) {
        self.step += 1;
        if truth == guess {
            return;
        }
        for f in feats {
            let w = model.weights.entry(f.clone()).or_insert([0.0; N_TAGS]);
            let totals = self.totals.entry(f.clone()).or_insert([0.0; N_TAGS]);
            let stamps = self.stamps.entry(f.clone()).or_insert([0; N_TAGS]);
            for (k, delta) in [(truth.index(), 1.0), (guess.index(), -1.0)] {
                totals[k] += (self.step - stamps[k]) as f64 * w[k];
                stamps[k] = self.step;
                w[k] += delta;
            }
        }
    }

    fn finish(self, model: &mut TaggerModel) {
        let step = self.step as f64;
        for (f, w) in model.weights.iter_mut() {
            let totals = self.totals.get(f);
            let stamps = self.stamps.get(f);
            for k in 0..N_TAGS {
                let t = totals.map_or(0.0, |t| t[k]);
                let s = stamps.map_or(0, |s| s[k]) as f64;
                let total = t + (step - s) * w[k];
                w[k] = if step > 0.0 { total / step } else { 0.0 };
            }
        }
        model.weights.retain(|_, w| w.iter().any(|x| *x != 0.0));
    }
}

fn build_tag_dict(data: &[TaggedSentence]) -> HashMap<String, PosTag> {
    let mut counts: HashMap<&str, [usize; N_TAGS]> = HashMap::new();
    for sent in data {
        for (word, tag) in sent {
            counts.entry(word.as_str()).or_insert([0; N_TAGS])[tag.index()] += 1;
        }
    }
    counts
        .into_iter()
        .filter_map(|(word, c)| {
            let n: usize = c.iter().sum();
            let (k, &top) = c.iter().enumerate().max_by_key(|&(k, v)| (*v, std::cmp::Reverse(k)))?;
            (n >= DICT_MIN_FREQ && top as f64 / n as f64 >= DICT_MIN_SHARE)
                .then(|| (word.to_string(), PosTag::ALL[k]))
        })
        .collect()
}

/// Train an averaged perceptron. Sentence order is reshuffled every epoch
/// from a stream seeded by `seed`.
pub fn train_tagger(data: &[TaggedSentence], epochs: usize, seed: u64) -> Result<TaggerModel> {
    if data.iter().all(|s| s.is_empty()) {
        return Err(Error::Empty("tagged training corpus".into()));
    }
    if epochs == 0 {
        return Err(Error::InvalidArgument("epochs must be at least 1".into()));
    }
    let mut model = TaggerModel::empty();
    model.tag_dict = build_tag_dict(data);
    let mut avg = Averager {
        totals: HashMap::new(),
        stamps: HashMap::new(),
        step: 0,
    };
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = seed::rng_for(seed, &["tagger"]);
    for _ in 0..epochs {
        for &si in &order {
            let sent = &data[si];
            let tokens: Vec<Token> = sent.iter().map(|(w, _)| Token::new(w.as_str())).collect();
            let context = padded_context(sent.iter().map(|(w, _)| w.as_str()));
            let (mut prev, mut prev2) = (START[0].to_string(), START[1].to_string());
            for (i, (word, truth)) in sent.iter().enumerate() {
                let guess = match forced_tag(&tokens[i]).or_else(|| model.tag_dict.get(word).copied()) {
                    Some(tag) => tag,
                    None => {
                        let feats = features(i, word, &context, &prev, &prev2);
                        let guess = model.best(&feats);
                        avg.update(&mut model, *truth, guess, &feats);
                        guess
                    }
                };
                prev2 = std::mem::replace(&mut prev, guess.to_string());
            }
        }
        order.shuffle(&mut rng);
    }
    avg.finish(&mut model);
    Ok(model)
}

/// Tag tokens greedily left to right within one sentence.
pub fn pos_tag(model: &TaggerModel, tokens: &[Token]) -> Vec<Token> {
    let context = padded_context(tokens.iter().map(|t| t.surface.as_str()));
    let (mut prev, mut prev2) = (START[0].to_string(), START[1].to_string());
    let mut out = Vec::with_capacity(tokens.len());
    for (i, tok) in tokens.iter().enumerate() {
        let tag = forced_tag(tok)
            .or_else(|| model.tag_dict.get(&tok.surface).copied())
            .unwrap_or_else(|| model.best(&features(i, &tok.surface, &context, &prev, &prev2)));
        prev2 = std::mem::replace(&mut prev, tag.to_string());
        out.push(Token {
            pos: Some(tag),
            ..tok.clone()
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textkit::tokenize::tokenize;

    fn sentence(pairs: &[(&str, PosTag)]) -> TaggedSentence {
        pairs.iter().map(|(w, t)| (w.to_string(), *t)).collect()
    }

    #[test]
    fn memorizes_a_single_sentence() {
        use PosTag::*;
        let s = sentence(&[("The", Det), ("dog", Noun), ("runs", Verb), ("fast", Adv), (".", Punct)]);
        let model = train_tagger(std::slice::from_ref(&s), 5, 1).unwrap();
        let toks: Vec<Token> = s.iter().map(|(w, _)| Token::new(w.as_str())).collect();
        let tags: Vec<PosTag> = pos_tag(&model, &toks).iter().map(|t| t.pos.unwrap()).collect();
        assert_eq!(tags, s.iter().map(|p| p.1).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_empty_data_and_zero_epochs() {
        assert!(train_tagger(&[], 5, 0).is_err());
        assert!(train_tagger(&[vec![]], 5, 0).is_err());
        let s = sentence(&[("a", PosTag::Det)]);
        assert!(train_tagger(&[s], 0, 0).is_err());
    }

    #[test]
    fn unknown_tag_is_an_error_with_line() {
        let err = read_tagged_corpus("# header\nthe\tDET\ndog\tNN\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 3, .. }), "{err}");
    }

    #[test]
    fn reads_sentences() {
        let s = read_tagged_corpus("a\tDET\nb\tNOUN\n\n\nc\tVERB\n".as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1], vec![("c".to_string(), PosTag::Verb)]);
    }

    #[test]
    fn forced_tags_and_empty_input() {
        let model = TaggerModel::empty();
        assert!(pos_tag(&model, &[]).is_empty());
        let tagged = pos_tag(&model, &tokenize("go . see https://a.com"));
        assert_eq!(tagged[1].pos, Some(PosTag::Punct));
        assert_eq!(tagged[3].pos, Some(PosTag::X));
    }

    #[test]
    fn held_out_accuracy_on_bundled_sample() {
        let data = default_training_sample();
        assert_eq!(data.len(), 3000);
        let (train, test) = data.split_at(2500);
        let model = train_tagger(train, 5, 0).unwrap();
        let (mut right, mut total) = (0usize, 0usize);
        for sent in test {
            let toks: Vec<Token> = sent.iter().map(|(w, _)| Token::new(w.as_str())).collect();
            for (t, (_, gold)) in pos_tag(&model, &toks).iter().zip(sent) {
                right += usize::from(t.pos == Some(*gold));
                total += 1;
            }
        }
        let acc = right as f64 / total as f64;
        assert!(acc >= 0.90, "held-out accuracy {acc}");
        let the = pos_tag(&model, &tokenize("the"));
        assert_eq!(the[0].pos, Some(PosTag::Det));
    }

    #[test]
    fn serialization_round_trips_exactly() {
        let data = default_training_sample();
        let model = train_tagger(&data[..200], 2, 3).unwrap();
        let mut buf = Vec::new();
        model.write(&mut buf).unwrap();
        let back = TaggerModel::read(buf.as_slice()).unwrap();
        assert_eq!(back, model);
        let mut again = Vec::new();
        back.write(&mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn training_is_deterministic() {
        let data = default_training_sample();
        let a = train_tagger(&data[..100], 2, 9).unwrap();
        let b = train_tagger(&data[..100], 2, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn output_length_matches_input() {
        let model = default_tagger();
        let toks = tokenize("I can't believe it's already 2021, honestly!");
        assert_eq!(pos_tag(model, &toks).len(), toks.len());
    }
}
