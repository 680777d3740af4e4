//! LDA topic model trained by collapsed Gibbs sampling.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::seed;

pub const MODEL_VERSION: &str = "podstyle-lda 1";

static STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// The bundled English stopword list.
pub fn default_stopwords() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric document-topic prior; `None` means `50 / k`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub min_count: usize,
    pub infer_iterations: usize,
    pub coherence_top_n: usize,
    /// Candidate topic counts for coherence-based selection; empty uses `k`.
    pub k_grid: Vec<usize>,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            k: 100,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            min_count: 5,
            infer_iterations: 50,
            coherence_top_n: 10,
            k_grid: Vec::new(),
        }
    }
}

impl LdaConfig {
    pub fn alpha_for(&self, k: usize) -> f64 {
        self.alpha.unwrap_or(50.0 / k as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.k == 0 || self.k_grid.contains(&0) {
            return bad("topic counts must be at least 1");
        }
        if self.alpha.is_some_and(|a| !(a > 0.0)) || !(self.beta > 0.0) {
            return bad("alpha and beta must be positive");
        }
        if self.iterations == 0 {
            return bad("lda.iterations must be at least 1");
        }
        if self.coherence_top_n < 2 {
            return bad("lda.coherence_top_n must be at least 2");
        }
        Ok(())
    }
}

/// Drop stopwords and non-alphabetic tokens, then keep words occurring at
/// least `min_count` times in the whole collection.
pub fn preprocess_docs<S: AsRef<str>>(
    docs: &[Vec<S>],
    stopwords: &HashSet<String>,
    min_count: usize,
) -> Vec<Vec<String>> {
    let keep = |w: &str| w.chars().all(char::is_alphabetic) && !stopwords.contains(w);
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for d in docs {
        for w in d.iter().map(AsRef::as_ref).filter(|w| keep(w)) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    docs.iter()
        .map(|d| {
            d.iter()
                .map(AsRef::as_ref)
                .filter(|w| keep(w) && counts.get(w).is_some_and(|&c| c >= min_count))
                .map(str::to_string)
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    /// Word-major `V x K` assignment counts.
    word_topic: Vec<u32>,
    topic_totals: Vec<u64>,
    pub iterations: usize,
    pub seed: u64,
}

/// Summary of one Gibbs sweep, for monitoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepStats {
    pub sweep: usize,
    pub tokens: u64,
    /// Sum of the word-topic count matrix.
    pub assigned: u64,
    /// Column sums of the word-topic matrix all equal the topic totals.
    pub totals_consistent: bool,
    /// `log p(w | z)` under the current assignments.
    pub log_likelihood: f64,
}

impl LdaModel {
    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn word_id(&self, w: &str) -> Option<usize> {
        self.index.get(w).copied()
    }

    pub fn count(&self, word: usize, topic: usize) -> u32 {
        self.word_topic[word * self.k + topic]
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.topic_totals
    }

    /// `p(word | topic)` from the smoothed counts.
    pub fn phi(&self, word: usize, topic: usize) -> f64 {
        (self.count(word, topic) as f64 + self.beta)
            / (self.topic_totals[topic] as f64 + self.vocab.len() as f64 * self.beta)
    }

    fn log_likelihood(&self) -> f64 {
        let v = self.vocab.len() as f64;
        let mut ll = self.k as f64 * (ln_gamma(v * self.beta) - v * ln_gamma(self.beta));
        for t in 0..self.k {
            for w in 0..self.vocab.len() {
                ll += ln_gamma(self.count(w, t) as f64 + self.beta);
            }
            ll -= ln_gamma(self.topic_totals[t] as f64 + v * self.beta);
        }
        ll
    }

    fn totals_consistent(&self) -> bool {
        (0..self.k).all(|t| {
            (0..self.vocab.len())
                .map(|w| self.count(w, t) as u64)
                .sum::<u64>()
                == self.topic_totals[t]
        })
    }

    /// Text format: version line, `K`, `alpha`, `beta`, `V`, `seed`,
    /// `iterations` lines, `vocab` then one word per line, `counts` then one
    /// row of K integers per word.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<lda model>", e);
        writeln!(out, "{MODEL_VERSION}").map_err(io)?;
        writeln!(out, "K {}", self.k).map_err(io)?;
        writeln!(out, "alpha {}", self.alpha).map_err(io)?;
        writeln!(out, "beta {}", self.beta).map_err(io)?;
        writeln!(out, "V {}", self.vocab.len()).map_err(io)?;
        writeln!(out, "seed {}", self.seed).map_err(io)?;
        writeln!(out, "iterations {}", self.iterations).map_err(io)?;
        writeln!(out, "vocab").map_err(io)?;
        for w in &self.vocab {
            writeln!(out, "{w}").map_err(io)?;
        }
        writeln!(out, "counts").map_err(io)?;
        for row in self.word_topic.chunks(self.k) {
            let line: Vec<String> = row.iter().map(u32::to_string).collect();
            writeln!(out, "{}", line.join(" ")).map_err(io)?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .map(|(i, l)| l.map(|l| (i + 1, l)).map_err(|e| Error::io("<lda model>", e)))
            .filter(|r| !matches!(r, Ok((_, l)) if l.starts_with('#')));
        let mut next = |what: &str| -> Result<(usize, String)> {
            lines
                .next()
                .unwrap_or_else(|| Err(Error::malformed(0, what, "unexpected end of model")))
        };
        let (n, version) = next("version")?;
        if version != MODEL_VERSION {
            return Err(Error::malformed(n, "version", format!("unsupported `{version}`")));
        }
        let mut field = |name: &str| -> Result<String> {
            let (n, line) = next(name)?;
            line.strip_prefix(name)
                .and_then(|r| r.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| Error::malformed(n, name, "missing"))
        };
        let parse_err = |name: &str| Error::malformed(0, name, "not a number");
        let k: usize = field("K")?.parse().map_err(|_| parse_err("K"))?;
        let alpha: f64 = field("alpha")?.parse().map_err(|_| parse_err("alpha"))?;
        let beta: f64 = field("beta")?.parse().map_err(|_| parse_err("beta"))?;
        let v: usize = field("V")?.parse().map_err(|_| parse_err("V"))?;
        let seed: u64 = field("seed")?.parse().map_err(|_| parse_err("seed"))?;
        let iterations: usize = field("iterations")?.parse().map_err(|_| parse_err("iterations"))?;
        if k == 0 {
            return Err(Error::malformed(0, "K", "must be positive"));
        }
        let (n, tag) = next("vocab")?;
        if tag != "vocab" {
            return Err(Error::malformed(n, "vocab", "expected `vocab`"));
        }
        let mut vocab = Vec::with_capacity(v);
        for _ in 0..v {
            vocab.push(next("vocab")?.1);
        }
        let (n, tag) = next("counts")?;
        if tag != "counts" {
            return Err(Error::malformed(n, "counts", "expected `counts`"));
        }
        let mut word_topic = Vec::with_capacity(v * k);
        for _ in 0..v {
            let (n, line) = next("counts")?;
            let row: Vec<u32> = line
                .split(' ')
                .map(|x| x.parse().map_err(|_| Error::malformed(n, "counts", format!("`{x}`"))))
                .collect::<Result<_>>()?;
            if row.len() != k {
                return Err(Error::malformed(n, "counts", format!("expected {k} values")));
            }
            word_topic.extend(row);
        }
        let mut topic_totals = vec![0u64; k];
        for row in word_topic.chunks(k) {
            for (t, &c) in row.iter().enumerate() {
                topic_totals[t] += c as u64;
            }
        }
        let index = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(LdaModel {
            k,
            alpha,
            beta,
            vocab,
            index,
            word_topic,
            topic_totals,
            iterations,
            seed,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(std::io::BufReader::new(file)).map_err(|e| e.context(path.display().to_string()))
    }
}

/// Draw an index with probability proportional to `weights`.
fn sample_index(rng: &mut seed::Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        u -= w;
        if u < 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// Train on already preprocessed documents. The vocabulary is every word in
/// `docs`, sorted.
pub fn train_lda<S: AsRef<str>>(
    docs: &[Vec<S>],
    k: usize,
    alpha: f64,
    beta: f64,
    iterations: usize,
    seed: u64,
) -> Result<LdaModel> {
    train_lda_observed(docs, k, alpha, beta, iterations, seed, None)
}

/// As `train_lda`, reporting statistics after every sweep.
#[allow(clippy::too_many_arguments)]
pub fn train_lda_observed<S: AsRef<str>>(
    docs: &[Vec<S>],
    k: usize,
    alpha: f64,
    beta: f64,
    iterations: usize,
    seed: u64,
    mut observer: Option<&mut dyn FnMut(SweepStats)>,
) -> Result<LdaModel> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::InvalidArgument("alpha and beta must be positive".into()));
    }
    let vocab: Vec<String> = docs
        .iter()
        .flatten()
        .map(|w| w.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if vocab.is_empty() {
        return Err(Error::Empty("topic-model vocabulary".into()));
    }
    let index: HashMap<String, usize> = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    let ids: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.iter().map(|w| index[w.as_ref()]).collect())
        .collect();
    let v = vocab.len();
    let mut model = LdaModel {
        k,
        alpha,
        beta,
        vocab,
        index,
        word_topic: vec![0; v * k],
        topic_totals: vec![0; k],
        iterations,
        seed,
    };
    let mut rng = seed::rng_for(seed, &["lda", "train"]);
    let mut doc_topic: Vec<Vec<u32>> = vec![vec![0; k]; ids.len()];
    let mut z: Vec<Vec<usize>> = Vec::with_capacity(ids.len());
    for (d, doc) in ids.iter().enumerate() {
        let mut zd = Vec::with_capacity(doc.len());
        for &w in doc {
            let t = rng.gen_range(0..k);
            zd.push(t);
            doc_topic[d][t] += 1;
            model.word_topic[w * k + t] += 1;
            model.topic_totals[t] += 1;
        }
        z.push(zd);
    }
    let n_tokens: u64 = ids.iter().map(|d| d.len() as u64).sum();
    let vbeta = v as f64 * beta;
    let mut weights = vec![0.0; k];
    for sweep in 0..iterations {
        for (d, doc) in ids.iter().enumerate() {
            let nd = &mut doc_topic[d];
            for (i, &w) in doc.iter().enumerate() {
                let old = z[d][i];
                nd[old] -= 1;
                model.word_topic[w * k + old] -= 1;
                model.topic_totals[old] -= 1;
                let row = &model.word_topic[w * k..(w + 1) * k];
                for t in 0..k {
                    weights[t] = (nd[t] as f64 + alpha) * (row[t] as f64 + beta)
                        / (model.topic_totals[t] as f64 + vbeta);
                }
                let new = sample_index(&mut rng, &weights);
                z[d][i] = new;
                nd[new] += 1;
                model.word_topic[w * k + new] += 1;
                model.topic_totals[new] += 1;
            }
        }
        if let Some(obs) = observer.as_mut() {
            obs(SweepStats {
                sweep,
                tokens: n_tokens,
                assigned: model.word_topic.iter().map(|&c| c as u64).sum(),
                totals_consistent: model.totals_consistent(),
                log_likelihood: model.log_likelihood(),
            });
        }
    }
    Ok(model)
}

/// A document's topic mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTopics {
    pub theta: Vec<f64>,
    /// The document had no in-vocabulary tokens; `theta` is uniform.
    pub empty: bool,
}

/// Held-out Gibbs sampling against the frozen word-topic counts.
pub fn infer_doc_topics<S: AsRef<str>>(
    model: &LdaModel,
    doc: &[S],
    iterations: usize,
    seed: u64,
) -> DocTopics {
    let k = model.k;
    let ids: Vec<usize> = doc.iter().filter_map(|w| model.word_id(w.as_ref())).collect();
    if ids.is_empty() {
        return DocTopics {
            theta: vec![1.0 / k as f64; k],
            empty: true,
        };
    }
    let mut rng = seed::rng_for(seed, &["lda", "infer"]);
    let vbeta = model.vocab_size() as f64 * model.beta;
    let mut nd = vec![0u32; k];
    let mut z: Vec<usize> = ids
        .iter()
        .map(|_| {
            let t = rng.gen_range(0..k);
            nd[t] += 1;
            t
        })
        .collect();
    let mut weights = vec![0.0; k];
    for _ in 0..iterations {
        for (i, &w) in ids.iter().enumerate() {
            nd[z[i]] -= 1;
            for t in 0..k {
                weights[t] = (nd[t] as f64 + model.alpha) * (model.count(w, t) as f64 + model.beta)
                    / (model.topic_totals[t] as f64 + vbeta);
            }
            z[i] = sample_index(&mut rng, &weights);
            nd[z[i]] += 1;
        }
    }
    let denom = ids.len() as f64 + k as f64 * model.alpha;
    DocTopics {
        theta: nd.iter().map(|&c| (c as f64 + model.alpha) / denom).collect(),
        empty: false,
    }
}

/// The `n` most probable words of a topic, ties in lexicographic order.
pub fn top_words(model: &LdaModel, topic: usize, n: usize) -> Result<Vec<String>> {
    if topic >= model.k {
        return Err(Error::InvalidArgument(format!(
            "topic {topic} out of range for K = {}",
            model.k
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    // The vocabulary is sorted, so a stable sort by count keeps ties lexicographic.
    let mut ids: Vec<usize> = (0..model.vocab_size()).collect();
    ids.sort_by(|&a, &b| model.count(b, topic).cmp(&model.count(a, topic)).then(a.cmp(&b)));
    Ok(ids
        .into_iter()
        .take(n)
        .map(|i| model.vocab[i].clone())
        .collect())
}

/// Mean UMass coherence of every topic's top `top_n` words over `docs`.
pub fn coherence_umass<S: AsRef<str>>(model: &LdaModel, docs: &[Vec<S>], top_n: usize) -> Result<f64> {
    if top_n < 2 {
        return Err(Error::InvalidArgument("top_n must be at least 2".into()));
    }
    let sets: Vec<HashSet<&str>> = docs
        .iter()
        .map(|d| d.iter().map(AsRef::as_ref).collect())
        .collect();
    let df = |w: &str| sets.iter().filter(|s| s.contains(w)).count();
    let co = |a: &str, b: &str| sets.iter().filter(|s| s.contains(a) && s.contains(b)).count();
    let mut total = 0.0;
    for t in 0..model.k {
        let top = top_words(model, t, top_n)?;
        let mut score = 0.0;
        for i in 1..top.len() {
            for j in 0..i {
                let dj = df(&top[j]);
                if dj == 0 {
                    return Err(Error::Internal(format!(
                        "top word `{}` of topic {t} occurs in no document",
                        top[j]
                    )));
                }
                score += ((co(&top[i], &top[j]) as f64 + 1.0) / dj as f64).ln();
            }
        }
        total += score;
    }
    Ok(total / model.k as f64)
}

/// Train one model per candidate K and return the K with the highest
/// coherence (ties to the smaller K), with every candidate's score.
pub fn select_topic_count<S: AsRef<str> + Sync>(
    docs: &[Vec<S>],
    grid: &[usize],
    cfg: &LdaConfig,
    seed: u64,
) -> Result<(usize, Vec<(usize, f64)>)> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty topic-count grid".into()));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let scores: Vec<(usize, f64)> = {
        use rayon::prelude::*;
        sorted
            .par_iter()
            .map(|&k| {
                let m = train_lda(docs, k, cfg.alpha_for(k), cfg.beta, cfg.iterations, seed)?;
                Ok((k, coherence_umass(&m, docs, cfg.coherence_top_n)?))
            })
            .collect::<Result<_>>()?
    };
    let mut best = scores[0];
    for &(k, c) in &scores[1..] {
        if c > best.1 {
            best = (k, c);
        }
    }
    Ok((best.0, scores))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopicRole {
    Ad,
    Swear,
    Filler,
}

impl TopicRole {
    pub const ALL: [TopicRole; 3] = [TopicRole::Ad, TopicRole::Swear, TopicRole::Filler];

    pub fn as_str(self) -> &'static str {
        match self {
            TopicRole::Ad => "ad",
            TopicRole::Swear => "swear",
            TopicRole::Filler => "filler",
        }
    }
}

impl fmt::Display for TopicRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopicRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TopicRole::ALL
            .iter()
            .copied()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown topic role `{s}`")))
    }
}

/// Hand-assigned roles of topics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpecialTopicMap {
    pub roles: BTreeMap<TopicRole, BTreeSet<usize>>,
}

impl SpecialTopicMap {
    pub fn topics(&self, role: TopicRole) -> impl Iterator<Item = usize> + '_ {
        self.roles.get(&role).into_iter().flatten().copied()
    }

    pub fn assign(&mut self, role: TopicRole, topic: usize) {
        self.roles.entry(role).or_default().insert(topic);
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        for (role, set) in &self.roles {
            if let Some(t) = set.iter().find(|&&t| t >= k) {
                return Err(Error::InvalidArgument(format!(
                    "{role} topic {t} out of range for K = {k}"
                )));
            }
        }
        Ok(())
    }

    /// `topic_index<TAB>role` lines, sorted by topic.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let mut rows: Vec<(usize, TopicRole)> = self
            .roles
            .iter()
            .flat_map(|(r, s)| s.iter().map(move |&t| (t, *r)))
            .collect();
        rows.sort();
        for (t, r) in rows {
            writeln!(out, "{t}\t{r}").map_err(|e| Error::io("<topic roles>", e))?;
        }
        Ok(())
    }
}

/// Parse a review file: `topic_index<TAB>role` lines, `#` comments, and
/// rows whose role is empty or `-` (reviewed, no role).
pub fn read_special_topics<R: BufRead>(reader: R, k: usize) -> Result<SpecialTopicMap> {
    let mut map = SpecialTopicMap::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<topic roles>", e))?;
        let line = line.trim_end();
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (idx, role) = line.split_once('\t').unwrap_or((line, ""));
        let topic: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::malformed(i + 1, "topic_index", format!("`{idx}`")))?;
        if topic >= k {
            return Err(Error::malformed(i + 1, "topic_index", format!("{topic} >= K = {k}")));
        }
        let role = role.trim();
        if role.is_empty() || role == "-" {
            continue;
        }
        let role: TopicRole = role
            .parse()
            .map_err(|e: Error| Error::malformed(i + 1, "role", e.to_string()))?;
        map.assign(role, topic);
    }
    Ok(map)
}

pub fn load_special_topics(path: impl AsRef<Path>, k: usize) -> Result<SpecialTopicMap> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_special_topics(std::io::BufReader::new(file), k)
        .map_err(|e| e.context(path.display().to_string()))
}

/// A review sheet listing each topic's top words as comments, followed by an
/// unassigned `topic_index<TAB>-` row to edit.
pub fn write_review_sheet<W: Write>(model: &LdaModel, top_n: usize, mut out: W) -> Result<()> {
    let io = |e| Error::io("<review sheet>", e);
    writeln!(out, "# Assign a role (ad, swear, filler) in place of `-` where one applies.").map_err(io)?;
    for t in 0..model.k {
        writeln!(out, "# {t}: {}", top_words(model, t, top_n)?.join(" ")).map_err(io)?;
        writeln!(out, "{t}\t-").map_err(io)?;
    }
    Ok(())
}

/// Assign a role to every topic whose top `top_n` words include at least
/// `min_share` of words from the role's seed list.
pub fn label_by_seed_words(
    model: &LdaModel,
    seeds: &BTreeMap<TopicRole, Vec<String>>,
    top_n: usize,
    min_share: f64,
) -> Result<SpecialTopicMap> {
    let mut map = SpecialTopicMap::default();
    for t in 0..model.k {
        let top = top_words(model, t, top_n)?;
        for (role, words) in seeds {
            let set: HashSet<&str> = words.iter().map(String::as_str).collect();
            let hits = top.iter().filter(|w| set.contains(w.as_str())).count();
            if !top.is_empty() && hits as f64 / top.len() as f64 >= min_share {
                map.assign(*role, t);
            }
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TopicFractions {
    pub ad: f64,
    pub swear: f64,
    pub filler: f64,
}

/// Total mixture weight of each role's topics.
pub fn topic_fractions(doc: &DocTopics, special: &SpecialTopicMap) -> TopicFractions {
    let sum = |role| special.topics(role).filter_map(|t| doc.theta.get(t)).sum::<f64>();
    TopicFractions {
        ad: sum(TopicRole::Ad),
        swear: sum(TopicRole::Swear),
        filler: sum(TopicRole::Filler),
    }
}
