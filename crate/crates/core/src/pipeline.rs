//! Batch pipeline over an output directory of artifacts.
//!
//! Stages and the artifacts they read and write:
//!
//! ```text
//! ingest    corpus file              -> corpus.jsonl, engagement.csv
//! topics    corpus.jsonl             -> lda.model, topic_review.tsv,
//!                                       special_topics.tsv, doc_topics.csv,
//!                                       topic_selection.csv (with a K grid)
//! features  corpus.jsonl, lda.model, special_topics.tsv, doc_topics.csv
//!                                    -> features.csv, features.jsonl
//! analyze   engagement.csv, features.csv
//!                                    -> group_means.{csv,md}, spearman.{csv,md}
//! cv        corpus.jsonl, engagement.csv, features.csv
//!                                    -> cv.{csv,md}, top_ngrams.{csv,md}
//! ablate    engagement.csv, features.csv -> ablation.{csv,md}
//! sweep     corpus.jsonl, engagement.csv, features.csv -> sweep.{csv,md}
//! report    group_means.md, cv.md (+ any other tables) -> report.md
//! ```
//!
//! Every artifact starts with a header line naming the tool version, the
//! config digest and the seed. Each task rewrites `manifest.tsv`, which lists
//! the sha256 of every input and artifact.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{apply_filters, load_corpus, write_corpus, Corpus, Episode, FilterConfig};
use crate::engagement::{
    assign_quartiles, build_groups, engagement_records, read_engagement_csv, within_quartile_spearman,
    write_engagement_csv, EngagementRecord, GroupSpec, PopularityMeasure,
};
use crate::error::{Error, Result};
use crate::features::{
    build_idf, build_unigram_lm, column_group, extract_all, prepare_texts, write_jsonl, EpisodeTexts,
    ExtraneousClassifier, Family, FeatureConfig, FeatureResources, FeatureTable, MarkerClassifier,
    FEATURE_GROUPS,
};
use crate::features::extraneous::load_external_labels;
use crate::lexicons::{
    default_easy_words, load_easy_words, load_emotion_lexicon, load_external_scores, sample_emotion_lexicon,
    EasyWordSet, EmotionLexicon, LexiconScorer, SentenceScorer,
};
use crate::model::{
    ablation, build_ngram_vocab, column_groups, cross_validate, labeled_rows, stratified_folds, sweep_k,
    tfidf_transform, top_weighted_ngrams, train_logreg, Design, LogRegParams, Representation,
};
use crate::model::cv::{
    write_ablation_csv, write_ablation_markdown, write_cv_csv, write_cv_markdown, write_sweep_csv,
    write_sweep_markdown,
};
use crate::seed;
use crate::stats::{write_report_csv, write_report_markdown, group_mean_report, StatConfig};
use crate::textkit::langid::detect_default;
use crate::textkit::{default_tagger, TaggerModel};
use crate::topics::{
    default_stopwords, infer_doc_topics, label_by_seed_words, load_special_topics, preprocess_docs,
    select_topic_count, topic_fractions, train_lda, write_review_sheet, DocTopics, LdaConfig, LdaModel,
    SpecialTopicMap, TopicRole,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourcePaths {
    /// Word-emotion association file; the bundled sample when unset.
    pub emotion_lexicon: Option<PathBuf>,
    /// Easy-word list for Dale-Chall; the bundled list when unset.
    pub easy_words: Option<PathBuf>,
    /// Saved tagger model; the bundled tagger when unset.
    pub tagger_model: Option<PathBuf>,
    /// Precomputed sentence sentiment scores; lexicon scoring when unset.
    pub sentence_scores: Option<PathBuf>,
    /// Precomputed extraneous-sentence labels; marker heuristics when unset.
    pub sentence_labels: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicsConfig {
    pub lda: LdaConfig,
    /// Reviewed `topic<TAB>role` file. Takes precedence over `seed_words`.
    pub roles_file: Option<PathBuf>,
    /// Role name to seed words, for labeling without a review file.
    pub seed_words: BTreeMap<TopicRole, Vec<String>>,
    pub seed_top_n: usize,
    pub seed_min_share: f64,
    pub review_top_n: usize,
}

impl Default for TopicsConfig {
    fn default() -> Self {
        TopicsConfig {
            lda: LdaConfig::default(),
            roles_file: None,
            seed_words: BTreeMap::new(),
            seed_top_n: 10,
            seed_min_share: 0.3,
            review_top_n: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngagementConfig {
    pub k_percent: f64,
    /// `first_streams` or `qualified_streams`.
    pub popularity: String,
}

impl Default for EngagementConfig {
    fn default() -> Self {
        EngagementConfig {
            k_percent: 25.0,
            popularity: "first_streams".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub alpha: f64,
    pub m_linguistic: usize,
    pub m_lda: usize,
    pub bootstrap_b: usize,
}

impl Default for StatsConfig {
    fn default() -> Self {
        let d = StatConfig::default();
        StatsConfig {
            alpha: d.alpha,
            m_linguistic: d.m_linguistic,
            m_lda: d.m_lda,
            bootstrap_b: d.bootstrap_b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub folds: usize,
    pub min_df: usize,
    pub sweep_k: Vec<f64>,
    pub sweep_representations: Vec<String>,
    pub top_n: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let p = LogRegParams::default();
        ModelConfig {
            lambda: p.lambda,
            max_iter: p.max_iter,
            tol: p.tol,
            folds: 5,
            min_df: 2,
            sweep_k: vec![10.0, 15.0, 20.0, 25.0, 50.0],
            sweep_representations: vec!["linguistic".into(), "ngrams".into()],
            top_n: 200,
        }
    }
}

impl ModelConfig {
    pub fn params(&self) -> LogRegParams {
        LogRegParams {
            lambda: self.lambda,
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }
}

/// Everything a pipeline run depends on. Relative paths are resolved against
/// the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub resources: ResourcePaths,
    pub filter: FilterConfig,
    pub features: FeatureConfig,
    pub topics: TopicsConfig,
    pub engagement: EngagementConfig,
    pub stats: StatsConfig,
    pub model: ModelConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: PathBuf::from("corpus.jsonl"),
            output_dir: PathBuf::from("out"),
            seed: 0,
            resources: ResourcePaths::default(),
            filter: FilterConfig::default(),
            features: FeatureConfig::default(),
            topics: TopicsConfig::default(),
            engagement: EngagementConfig::default(),
            stats: StatsConfig::default(),
            model: ModelConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn popularity(&self) -> Result<PopularityMeasure> {
        self.engagement
            .popularity
            .parse()
            .map_err(|e: Error| Error::Config(format!("engagement.popularity: {e}")))
    }

    pub fn stat_config(&self) -> StatConfig {
        StatConfig {
            alpha: self.stats.alpha,
            m_linguistic: self.stats.m_linguistic,
            m_lda: self.stats.m_lda,
            bootstrap_b: self.stats.bootstrap_b,
            seed: seed::derive(self.seed, &["stats"]),
        }
    }

    fn input_paths(&self) -> Vec<(&'static str, PathBuf)> {
        let r = &self.resources;
        let mut v = vec![("corpus", self.corpus.clone())];
        for (name, p) in [
            ("emotion_lexicon", &r.emotion_lexicon),
            ("easy_words", &r.easy_words),
            ("tagger_model", &r.tagger_model),
            ("sentence_scores", &r.sentence_scores),
            ("sentence_labels", &r.sentence_labels),
            ("roles_file", &self.topics.roles_file),
        ] {
            if let Some(p) = p {
                v.push((name, p.clone()));
            }
        }
        v.into_iter().map(|(n, p)| (n, self.resolve(&p))).collect()
    }

    /// Check values and that every referenced input file exists.
    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        self.features.validate()?;
        self.topics.lda.validate()?;
        self.stat_config().validate()?;
        self.popularity()?;
        GroupSpec::new(self.engagement.k_percent).map_err(|e| Error::Config(format!("engagement.k_percent: {e}")))?;
        if self.filter.truncate_s != self.features.truncate_s {
            return Err(Error::Config(format!(
                "filter.truncate_s ({}) and features.truncate_s ({}) differ",
                self.filter.truncate_s, self.features.truncate_s
            )));
        }
        if !(self.topics.seed_min_share > 0.0 && self.topics.seed_min_share <= 1.0) || self.topics.seed_top_n == 0 {
            return Err(Error::Config("topics.seed_min_share must be in (0, 1] and seed_top_n positive".into()));
        }
        let m = &self.model;
        if !(m.lambda >= 0.0) || m.max_iter == 0 || !(m.tol > 0.0) || m.folds < 2 || m.top_n == 0 {
            return Err(Error::Config("model: need lambda >= 0, max_iter >= 1, tol > 0, folds >= 2, top_n >= 1".into()));
        }
        for &k in &m.sweep_k {
            GroupSpec::new(k).map_err(|e| Error::Config(format!("model.sweep_k: {e}")))?;
        }
        for r in &m.sweep_representations {
            if !REPRESENTATIONS.contains(&r.as_str()) {
                return Err(Error::Config(format!(
                    "model.sweep_representations: unknown `{r}` (expected one of {})",
                    REPRESENTATIONS.join(", ")
                )));
            }
        }
        for (name, p) in self.input_paths() {
            if !p.is_file() {
                return Err(Error::Config(format!("{name} file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// sha256 of the canonical JSON form, leaving out the output directory.
    pub fn digest(&self) -> Result<String> {
        let mut v = serde_json::to_value(self).map_err(|e| Error::Internal(e.to_string()))?;
        if let Some(o) = v.as_object_mut() {
            o.remove("output_dir");
        }
        let text = serde_json::to_string(&v).map_err(|e| Error::Internal(e.to_string()))?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }
}

/// Set a dotted key such as `topics.lda.k` in a JSON value. The raw text is
/// parsed as JSON when that works and kept as a string otherwise.
pub fn apply_override(root: &mut serde_json::Value, key: &str, raw: &str) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = root;
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("`{}` is not a section", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            let slot = obj
                .get_mut(*part)
                .ok_or_else(|| Error::Config(format!("unknown config key `{key}`")))?;
            let parsed = serde_json::from_str::<serde_json::Value>(raw);
            *slot = match (&*slot, parsed) {
                (serde_json::Value::String(_), _) => serde_json::Value::String(raw.to_string()),
                (_, Ok(v)) => v,
                (_, Err(_)) => serde_json::Value::String(raw.to_string()),
            };
            return Ok(());
        }
        cur = obj
            .get_mut(*part)
            .ok_or_else(|| Error::Config(format!("unknown config key `{key}`")))?;
    }
    Err(Error::Config("empty config key".into()))
}

/// Read a config file (or start from defaults), apply `key = value`
/// overrides, and validate the result.
pub fn load_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let (cfg, base_dir) = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let cfg: RunConfig =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
            (cfg, if dir.as_os_str().is_empty() { PathBuf::from(".") } else { dir })
        }
        None => (RunConfig::default(), PathBuf::from(".")),
    };
    let mut value = serde_json::to_value(&cfg).map_err(|e| Error::Internal(e.to_string()))?;
    for (k, v) in overrides {
        apply_override(&mut value, k, v)?;
    }
    let mut cfg: RunConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
    cfg.base_dir = base_dir;
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Topics,
    Features,
    Analyze,
    Cv,
    Ablate,
    Sweep,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::Topics,
        Stage::Features,
        Stage::Analyze,
        Stage::Cv,
        Stage::Ablate,
        Stage::Sweep,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Topics => "topics",
            Stage::Features => "features",
            Stage::Analyze => "analyze",
            Stage::Cv => "cv",
            Stage::Ablate => "ablate",
            Stage::Sweep => "sweep",
            Stage::Report => "report",
        }
    }

    pub fn tasks(self) -> &'static [Task] {
        match self {
            Stage::Ingest => &[Task::Ingest],
            Stage::Topics => &[Task::LdaTrain],
            Stage::Features => &[Task::Features],
            Stage::Analyze => &[Task::GroupMeans, Task::Spearman],
            Stage::Cv => &[Task::Cv, Task::TopNgrams],
            Stage::Ablate => &[Task::Ablate],
            Stage::Sweep => &[Task::Sweep],
            Stage::Report => &[Task::Report],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

/// The unit of work behind each subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Ingest,
    LdaTrain,
    LdaLabel,
    Features,
    GroupMeans,
    Spearman,
    Cv,
    TopNgrams,
    Ablate,
    Sweep,
    Report,
}

impl Task {
    pub fn stage(self) -> Stage {
        match self {
            Task::Ingest => Stage::Ingest,
            Task::LdaTrain | Task::LdaLabel => Stage::Topics,
            Task::Features => Stage::Features,
            Task::GroupMeans | Task::Spearman => Stage::Analyze,
            Task::Cv | Task::TopNgrams => Stage::Cv,
            Task::Ablate => Stage::Ablate,
            Task::Sweep => Stage::Sweep,
            Task::Report => Stage::Report,
        }
    }

    /// Artifacts read by the task, with the stage that writes each.
    pub fn requires(self) -> &'static [(&'static str, Stage)] {
        const CORPUS: (&str, Stage) = ("corpus.jsonl", Stage::Ingest);
        const ENGAGEMENT: (&str, Stage) = ("engagement.csv", Stage::Ingest);
        const FEATURES: (&str, Stage) = ("features.csv", Stage::Features);
        match self {
            Task::Ingest => &[],
            Task::LdaTrain => &[CORPUS],
            Task::LdaLabel => &[("lda.model", Stage::Topics)],
            Task::Features => &[
                CORPUS,
                ("lda.model", Stage::Topics),
                ("special_topics.tsv", Stage::Topics),
                ("doc_topics.csv", Stage::Topics),
            ],
            Task::GroupMeans | Task::Spearman | Task::Ablate => &[ENGAGEMENT, FEATURES],
            Task::Cv | Task::TopNgrams | Task::Sweep => &[CORPUS, ENGAGEMENT, FEATURES],
            Task::Report => &[("group_means.md", Stage::Analyze), ("cv.md", Stage::Cv)],
        }
    }
}

/// Linguistic columns that describe only the description or only the transcript.
fn column_side(name: &str) -> Option<&'static str> {
    const TRANS: &[&str] = &["audio_duration_s", "swear_topic_frac", "filler_topic_frac", "speech_rate_wpm", "non_speech_s"];
    if name.ends_with("_desc") || name == "desc_len_tokens" {
        Some("desc")
    } else if name.ends_with("_trans") || TRANS.contains(&name) {
        Some("trans")
    } else {
        None
    }
}

/// Feature representations available to the classifiers.
pub const REPRESENTATIONS: &[&str] = &[
    "linguistic_desc",
    "linguistic_trans",
    "linguistic",
    "topics",
    "ngrams_desc",
    "ngrams_trans",
    "ngrams",
];

/// A prepared run: configuration, output directory and header line.
pub struct Pipeline {
    pub config: RunConfig,
    dir: PathBuf,
    digest: String,
}

struct Inputs {
    emotions: EmotionLexicon,
    easy: EasyWordSet,
    tagger: Option<TaggerModel>,
    scorer_scores: Option<crate::lexicons::ExternalScores>,
    classifier: Box<dyn ExtraneousClassifier>,
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let dir = config.out_dir();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let digest = config.digest()?;
        Ok(Pipeline { config, dir, digest })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn header(&self) -> String {
        format!("podstyle {VERSION} | config sha256:{} | seed {}", self.digest, self.config.seed)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Write an artifact: header line first, then whatever `body` writes.
    fn artifact(&self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        let line = if name.ends_with(".md") {
            format!("<!-- {} -->\n", self.header())
        } else {
            format!("# {}\n", self.header())
        };
        w.write_all(line.as_bytes()).map_err(|e| Error::io(&path, e))?;
        body(&mut w).map_err(|e| e.context(name.to_string()))?;
        w.flush().map_err(|e| Error::io(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    fn check(&self, task: Task) -> Result<()> {
        for &(artifact, stage) in task.requires() {
            if !self.path(artifact).is_file() {
                return Err(Error::MissingStage {
                    stage: task.stage().to_string(),
                    required: stage.to_string(),
                    artifact: artifact.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Run whole stages in graph order.
    pub fn run_stages(&self, stages: &[Stage]) -> Result<()> {
        let mut stages = stages.to_vec();
        stages.sort();
        stages.dedup();
        for s in stages {
            log::info!("stage {s}");
            for &t in s.tasks() {
                self.run_task(t)?;
            }
        }
        Ok(())
    }

    pub fn run_task(&self, task: Task) -> Result<()> {
        self.check(task)?;
        match task {
            Task::Ingest => self.ingest(),
            Task::LdaTrain => self.lda_train(),
            Task::LdaLabel => self.lda_label(),
            Task::Features => self.features(),
            Task::GroupMeans => self.group_means(),
            Task::Spearman => self.spearman(),
            Task::Cv => self.cv(),
            Task::TopNgrams => self.top_ngrams(),
            Task::Ablate => self.ablate(),
            Task::Sweep => self.sweep(),
            Task::Report => self.report(),
        }?;
        self.write_manifest()
    }

    fn load_filtered(&self) -> Result<Corpus> {
        load_corpus(self.path("corpus.jsonl")).map_err(|e| e.context("corpus.jsonl"))
    }

    fn records(&self) -> Result<Vec<EngagementRecord>> {
        read_engagement_csv(self.path("engagement.csv")).map_err(|e| e.context("engagement.csv"))
    }

    fn table(&self, name: &str) -> Result<FeatureTable> {
        let p = self.path(name);
        let f = File::open(&p).map_err(|e| Error::io(&p, e))?;
        FeatureTable::read_csv(BufReader::new(f)).map_err(|e| e.context(name.to_string()))
    }

    fn inputs(&self) -> Result<Inputs> {
        let r = &self.config.resources;
        let c = &self.config;
        Ok(Inputs {
            emotions: match &r.emotion_lexicon {
                Some(p) => load_emotion_lexicon(c.resolve(p))?,
                None => sample_emotion_lexicon().clone(),
            },
            easy: match &r.easy_words {
                Some(p) => load_easy_words(c.resolve(p))?,
                None => default_easy_words().clone(),
            },
            tagger: r.tagger_model.as_ref().map(|p| TaggerModel::load(c.resolve(p))).transpose()?,
            scorer_scores: r.sentence_scores.as_ref().map(|p| load_external_scores(c.resolve(p))).transpose()?,
            classifier: match &r.sentence_labels {
                Some(p) => Box::new(load_external_labels(c.resolve(p))?),
                None => Box::new(MarkerClassifier::new(&c.features.promo_markers)),
            },
        })
    }

    fn texts(&self, episodes: &[Episode], classifier: &dyn ExtraneousClassifier) -> Result<Vec<EpisodeTexts>> {
        let t = self.config.features.truncate_s;
        episodes.par_iter().map(|ep| prepare_texts(ep, classifier, t)).collect()
    }

    fn ingest(&self) -> Result<()> {
        let c = &self.config;
        let raw = load_corpus(c.resolve(&c.corpus))?;
        let n_raw = raw.len();
        let corpus = apply_filters(raw, &c.filter, detect_default);
        log::info!("kept {} of {n_raw} episodes", corpus.len());
        if corpus.is_empty() {
            return Err(Error::Empty("no episode passes the corpus filters".into()));
        }
        let records = engagement_records(&corpus.episodes, c.popularity()?)?;
        let records = build_groups(assign_quartiles(records)?, GroupSpec::new(c.engagement.k_percent)?)?;
        self.artifact("corpus.jsonl", |w| write_corpus(&corpus, w))?;
        self.artifact("engagement.csv", |w| write_engagement_csv(&records, w))
    }

    fn lda_docs(&self, corpus: &Corpus) -> Result<(Vec<String>, Vec<Vec<String>>)> {
        let inputs = self.inputs()?;
        let texts = self.texts(&corpus.episodes, inputs.classifier.as_ref())?;
        let words: Vec<Vec<String>> = texts.iter().map(EpisodeTexts::transcript_words).collect();
        let docs = preprocess_docs(&words, default_stopwords(), self.config.topics.lda.min_count);
        Ok((texts.into_iter().map(|t| t.episode_id).collect(), docs))
    }

    fn lda_train(&self) -> Result<()> {
        let c = &self.config;
        let lda = &c.topics.lda;
        let corpus = self.load_filtered()?;
        let (ids, docs) = self.lda_docs(&corpus)?;
        let k = if lda.k_grid.is_empty() {
            lda.k
        } else {
            let (k, scores) = select_topic_count(&docs, &lda.k_grid, lda, seed::derive(c.seed, &["lda", "select"]))?;
            self.artifact("topic_selection.csv", |w| {
                writeln!(w, "k,umass_coherence").map_err(|e| Error::io("topic_selection.csv", e))?;
                for (k, s) in &scores {
                    writeln!(w, "{k},{s}").map_err(|e| Error::io("topic_selection.csv", e))?;
                }
                Ok(())
            })?;
            log::info!("selected K = {k}");
            k
        };
        let model = train_lda(&docs, k, lda.alpha_for(k), lda.beta, lda.iterations, seed::derive(c.seed, &["lda"]))?;
        self.artifact("lda.model", |w| model.write(w))?;
        self.artifact("topic_review.tsv", |w| write_review_sheet(&model, c.topics.review_top_n, w))?;
        self.write_roles(&model)?;

        let thetas: Vec<DocTopics> = ids
            .par_iter()
            .zip(&docs)
            .map(|(id, d)| infer_doc_topics(&model, d, lda.infer_iterations, seed::derive(c.seed, &["doc_topics", id])))
            .collect();
        let empty = thetas.iter().filter(|t| t.empty).count();
        if empty > 0 {
            log::warn!("{empty} episodes have no in-vocabulary transcript words; their topic mixtures are uniform");
        }
        let table = FeatureTable {
            columns: (0..k).map(|t| format!("topic_{t}")).collect(),
            families: vec![Family::Topic; k],
            ids,
            rows: thetas.into_iter().map(|t| t.theta).collect(),
        };
        self.artifact("doc_topics.csv", |w| table.write_csv(w))
    }

    fn read_model(&self) -> Result<LdaModel> {
        LdaModel::load(self.path("lda.model")).map_err(|e| e.context("lda.model"))
    }

    fn write_roles(&self, model: &LdaModel) -> Result<()> {
        let t = &self.config.topics;
        let map = match &t.roles_file {
            Some(p) => load_special_topics(self.config.resolve(p), model.k)?,
            None if !t.seed_words.is_empty() => label_by_seed_words(model, &t.seed_words, t.seed_top_n, t.seed_min_share)?,
            None => {
                log::warn!("no topic roles given; ad, swear and filler topic fractions will be 0");
                SpecialTopicMap::default()
            }
        };
        map.validate(model.k)?;
        for role in TopicRole::ALL {
            let ts: Vec<String> = map.topics(role).map(|t| t.to_string()).collect();
            log::info!("{role} topics: [{}]", ts.join(", "));
        }
        self.artifact("special_topics.tsv", |w| map.write(w))
    }

    fn lda_label(&self) -> Result<()> {
        self.write_roles(&self.read_model()?)
    }

    fn features(&self) -> Result<()> {
        let c = &self.config;
        let corpus = self.load_filtered()?;
        let model = self.read_model()?;
        let special = load_special_topics(self.path("special_topics.tsv"), model.k)?;
        let doc_topics = self.table("doc_topics.csv")?;
        let ids: Vec<String> = corpus.episodes.iter().map(|e| e.episode_id.clone()).collect();
        if doc_topics.ids != ids {
            return Err(Error::Invariant {
                id: "doc_topics.csv".into(),
                message: "episodes differ from corpus.jsonl; rerun the topics stage".into(),
            });
        }
        let fractions: BTreeMap<&str, DocTopics> = ids
            .iter()
            .zip(&doc_topics.rows)
            .map(|(id, r)| (id.as_str(), DocTopics { theta: r.clone(), empty: false }))
            .collect();

        let inputs = self.inputs()?;
        let texts = self.texts(&corpus.episodes, inputs.classifier.as_ref())?;
        let lm = build_unigram_lm(&texts, c.features.lm_k)?;
        let idf = build_idf(&texts)?;
        let lexicon_scorer = LexiconScorer { lexicon: &inputs.emotions };
        let scorer: &dyn SentenceScorer = match &inputs.scorer_scores {
            Some(s) => s,
            None => &lexicon_scorer,
        };
        let res = FeatureResources {
            lm: &lm,
            idf: &idf,
            emotions: &inputs.emotions,
            easy: &inputs.easy,
            tagger: inputs.tagger.as_ref().unwrap_or_else(|| default_tagger()),
            scorer,
            classifier: inputs.classifier.as_ref(),
            config: &c.features,
            seed: seed::derive(c.seed, &["features"]),
        };
        let vectors = extract_all(&corpus.episodes, &texts, &res, &|id| {
            fractions.get(id).map(|d| topic_fractions(d, &special))
        })?;
        let table = FeatureTable::from_vectors(&vectors).join(&doc_topics)?;
        self.artifact("features.csv", |w| table.write_csv(w))?;
        self.artifact("features.jsonl", |w| write_jsonl(&vectors, w))
    }

    fn group_means(&self) -> Result<()> {
        let cfg = self.config.stat_config();
        let results = group_mean_report(&self.table("features.csv")?, &self.records()?, &cfg)?;
        let n = results.iter().filter(|r| r.significant).count();
        log::info!("{n} of {} tests significant", results.len());
        self.artifact("group_means.csv", |w| write_report_csv(&results, w))?;
        self.artifact("group_means.md", |w| write_report_markdown(&results, &cfg, w))
    }

    fn spearman(&self) -> Result<()> {
        let records = self.records()?;
        let rows = within_quartile_spearman(&records);
        let count = |q: u8| records.iter().filter(|r| r.quartile == q).count();
        self.artifact("spearman.csv", |w| {
            let io = |e| Error::io("spearman.csv", e);
            writeln!(w, "quartile,n,rho,p_value").map_err(io)?;
            for (q, r) in &rows {
                match r {
                    Some((rho, p)) => writeln!(w, "{q},{},{rho},{p}", count(*q)).map_err(io)?,
                    None => writeln!(w, "{q},{},,", count(*q)).map_err(io)?,
                }
            }
            Ok(())
        })?;
        self.artifact("spearman.md", |w| {
            let io = |e| Error::io("spearman.md", e);
            writeln!(w, "Spearman correlation of stream rate and popularity within each quartile.\n").map_err(io)?;
            writeln!(w, "| quartile | n | rho | p |\n|---|---|---|---|").map_err(io)?;
            for (q, r) in &rows {
                match r {
                    Some((rho, p)) => writeln!(w, "| {q} | {} | {rho:.3} | {p:.3} |", count(*q)).map_err(io)?,
                    None => writeln!(w, "| {q} | {} | undefined | |", count(*q)).map_err(io)?,
                }
            }
            Ok(())
        })
    }

    fn ngram_docs(&self, name: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
        let corpus = self.load_filtered()?;
        let inputs = self.inputs()?;
        let texts = self.texts(&corpus.episodes, inputs.classifier.as_ref())?;
        let docs = texts
            .iter()
            .map(|t| match name {
                "ngrams_desc" => t.description_words(),
                "ngrams_trans" => t.transcript_words(),
                _ => {
                    let mut d = t.description_words();
                    d.extend(t.transcript_words());
                    d
                }
            })
            .collect();
        Ok((texts.into_iter().map(|t| t.episode_id).collect(), docs))
    }

    fn representation(&self, name: &str, table: &FeatureTable) -> Result<Representation> {
        let dense = |keep: &dyn Fn(usize) -> bool| {
            let cols: Vec<usize> = (0..table.n_cols()).filter(|&j| keep(j)).collect();
            if cols.is_empty() {
                return Err(Error::Empty(format!("representation `{name}` has no columns")));
            }
            Ok(Representation {
                name: name.to_string(),
                ids: table.ids.clone(),
                design: Design::Dense(table.select_columns(&cols).rows),
            })
        };
        let linguistic = |j: usize| table.families[j] == Family::Linguistic;
        match name {
            "linguistic" => dense(&linguistic),
            "linguistic_desc" => dense(&|j| linguistic(j) && column_side(&table.columns[j]) == Some("desc")),
            "linguistic_trans" => dense(&|j| linguistic(j) && column_side(&table.columns[j]) == Some("trans")),
            "topics" => dense(&|j| table.families[j] == Family::Topic),
            "ngrams" | "ngrams_desc" | "ngrams_trans" => {
                let (ids, docs) = self.ngram_docs(name)?;
                let vocab = build_ngram_vocab(&docs, self.config.model.min_df)?;
                Ok(Representation {
                    name: name.to_string(),
                    ids,
                    design: Design::Sparse(tfidf_transform(&docs, &vocab)),
                })
            }
            other => Err(Error::Config(format!("unknown representation `{other}`"))),
        }
    }

    fn cv(&self) -> Result<()> {
        let c = &self.config;
        let table = self.table("features.csv")?;
        let records = self.records()?;
        let params = c.model.params();
        let fold_seed = seed::derive(c.seed, &["cv"]);
        let mut results = Vec::new();
        let mut folds: Option<Vec<Vec<usize>>> = None;
        for name in REPRESENTATIONS {
            let rep = self.representation(name, &table)?;
            let (rows, y) = labeled_rows(&rep.ids, &records)?;
            // Every representation lists episodes in corpus order, so the folds carry over.
            let f = match &folds {
                Some(f) => f.clone(),
                None => stratified_folds(&y, c.model.folds, fold_seed)?,
            };
            let r = cross_validate(name, &rep.design.select_rows(&rows), &y, &f, &params, fold_seed)?;
            log::info!("{name}: mean accuracy {:.4}", r.mean_accuracy);
            results.push(r);
            folds = Some(f);
        }
        self.artifact("cv.csv", |w| write_cv_csv(&results, w))?;
        self.artifact("cv.md", |w| write_cv_markdown(&results, w))
    }

    fn top_ngrams(&self) -> Result<()> {
        let c = &self.config;
        let (ids, docs) = self.ngram_docs("ngrams")?;
        let vocab = build_ngram_vocab(&docs, c.model.min_df)?;
        let x = Design::Sparse(tfidf_transform(&docs, &vocab));
        let (rows, y) = labeled_rows(&ids, &self.records()?)?;
        let model = train_logreg(&x.select_rows(&rows), &y, &c.model.params())?;
        let (high, low) = top_weighted_ngrams(&model, &vocab, c.model.top_n)?;
        self.artifact("top_ngrams.csv", |w| {
            let io = |e| Error::io("top_ngrams.csv", e);
            writeln!(w, "group,rank,ngram,weight").map_err(io)?;
            for (group, list) in [("high", &high), ("low", &low)] {
                for (i, (g, wt)) in list.iter().enumerate() {
                    writeln!(w, "{group},{},\"{}\",{wt}", i + 1, g.replace('"', "\"\"")).map_err(io)?;
                }
            }
            Ok(())
        })?;
        self.artifact("top_ngrams.md", |w| {
            let io = |e| Error::io("top_ngrams.md", e);
            writeln!(w, "| rank | high engagement | weight | low engagement | weight |\n|---|---|---|---|---|").map_err(io)?;
            for i in 0..high.len().max(low.len()).min(20) {
                let cell = |l: &Vec<(String, f64)>| {
                    l.get(i).map(|(g, wt)| (g.clone(), format!("{wt:.3}"))).unwrap_or_default()
                };
                let (hg, hw) = cell(&high);
                let (lg, lw) = cell(&low);
                writeln!(w, "| {} | {hg} | {hw} | {lg} | {lw} |", i + 1).map_err(io)?;
            }
            Ok(())
        })
    }

    fn ablate(&self) -> Result<()> {
        let c = &self.config;
        let table = self.table("features.csv")?;
        let cols: Vec<usize> = (0..table.n_cols()).filter(|&j| table.families[j] == Family::Linguistic).collect();
        let table = table.select_columns(&cols);
        let (rows, y) = labeled_rows(&table.ids, &self.records()?)?;
        let table = table.select_rows(&rows);
        let groups = column_groups(&table, FEATURE_GROUPS, column_group)?;
        let fold_seed = seed::derive(c.seed, &["cv"]);
        let folds = stratified_folds(&y, c.model.folds, fold_seed)?;
        let (base, rows) = ablation(&table, &groups, &y, &folds, &c.model.params(), fold_seed)?;
        self.artifact("ablation.csv", |w| write_ablation_csv(&base, &rows, w))?;
        self.artifact("ablation.md", |w| write_ablation_markdown(&base, &rows, w))
    }

    fn sweep(&self) -> Result<()> {
        let c = &self.config;
        let table = self.table("features.csv")?;
        let reps = c
            .model
            .sweep_representations
            .iter()
            .map(|n| self.representation(n, &table))
            .collect::<Result<Vec<_>>>()?;
        let rows = sweep_k(&self.records()?, &reps, &c.model.sweep_k, c.model.folds, &c.model.params(), c.seed)?;
        self.artifact("sweep.csv", |w| write_sweep_csv(&rows, w))?;
        self.artifact("sweep.md", |w| write_sweep_markdown(&rows, w))
    }

    fn report(&self) -> Result<()> {
        const SECTIONS: &[(&str, &str)] = &[
            ("spearman.md", "Stream rate and popularity"),
            ("group_means.md", "High versus low engagement"),
            ("cv.md", "Classification accuracy"),
            ("ablation.md", "Feature group ablation"),
            ("sweep.md", "Accuracy by K"),
            ("top_ngrams.md", "Most predictive n-grams"),
        ];
        let mut parts = Vec::new();
        for (file, title) in SECTIONS {
            let p = self.path(file);
            if !p.is_file() {
                continue;
            }
            let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            let body: Vec<&str> = text.lines().filter(|l| !l.starts_with("<!--")).collect();
            parts.push(format!("## {title}\n\n{}\n", body.join("\n").trim()));
        }
        self.artifact("report.md", |w| {
            writeln!(w, "# Engagement report\n\n{}", parts.join("\n")).map_err(|e| Error::io("report.md", e))
        })
    }

    /// Digests of every input and artifact, sorted by name.
    pub fn manifest(&self) -> Result<Vec<(String, String, String)>> {
        let mut out = Vec::new();
        for (name, p) in self.config.input_paths() {
            if p.is_file() {
                out.push(("input".to_string(), name.to_string(), file_sha256(&p)?));
            }
        }
        let mut names: Vec<String> = fs::read_dir(&self.dir)
            .map_err(|e| Error::io(&self.dir, e))?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_file())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| n != "manifest.tsv")
            .collect();
        names.sort();
        for n in names {
            out.push(("artifact".to_string(), n.clone(), file_sha256(&self.path(&n))?));
        }
        Ok(out)
    }

    fn write_manifest(&self) -> Result<()> {
        let entries = self.manifest()?;
        self.artifact("manifest.tsv", |w| {
            let io = |e| Error::io("manifest.tsv", e);
            writeln!(w, "kind\tname\tsha256").map_err(io)?;
            for (kind, name, digest) in &entries {
                writeln!(w, "{kind}\t{name}\t{digest}").map_err(io)?;
            }
            Ok(())
        })
    }
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Read `manifest.tsv` rows as `(kind, name, sha256)`.
pub fn read_manifest(path: &Path) -> Result<Vec<(String, String, String)>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.starts_with('#') || line.starts_with("kind\t") || line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 3 {
            return Err(Error::malformed(i + 1, "manifest", "expected three fields"));
        }
        out.push((parts[0].into(), parts[1].into(), parts[2].into()));
    }
    Ok(out)
}
