//! Synthetic episode corpora with known engagement effects.
//!
//! Each episode gets a latent engagement score `z ~ N(0, 1)` that sets its
//! stream rate. Depending on [`Shifts`], `z` also widens the transcript's
//! vocabulary (raising word entropy), speeds up speech without changing the
//! share of time spent speaking, and lowers the rate of swear words. Swear
//! words replace one-syllable nouns that are neither easy words nor in the
//! emotion lexicon, so readability, emotion and part-of-speech proportions
//! stay put. Fillers, ad reads and promotional
//! description sentences occur at rates independent of `z`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Episode, TranscriptWord};
use crate::error::{Error, Result};
use crate::lexicons::{default_easy_words, sample_emotion_lexicon};
use crate::seed;
use crate::textkit::count_syllables;
use crate::topics::TopicRole;

const TOPIC_NOUNS: &[&[&str]] = &[
    &[
        "recipe", "kitchen", "flour", "butter", "oven", "garlic", "pasta", "sauce", "spice", "dough", "crust",
        "broth", "herb", "skillet", "pepper", "onion", "yeast", "grill", "steak", "salmon", "noodle", "vinegar",
        "dessert", "pastry", "lentil", "cumin", "basil", "whisk", "roast", "stew",
    ],
    &[
        "coach", "league", "season", "striker", "goal", "match", "stadium", "playoff", "referee", "pitch",
        "quarterback", "defense", "draft", "trophy", "roster", "champion", "tackle", "inning", "racket", "sprint",
        "marathon", "jersey", "rival", "derby", "scrum", "bench", "penalty", "fixture", "transfer", "squad",
    ],
    &[
        "software", "server", "laptop", "chip", "code", "browser", "database", "network", "startup", "robot",
        "algorithm", "cloud", "pixel", "sensor", "gadget", "phone", "keyboard", "router", "kernel", "cache",
        "compiler", "protocol", "drone", "battery", "screen", "widget", "script", "patch", "bug", "byte",
    ],
    &[
        "empire", "castle", "treaty", "dynasty", "king", "queen", "battle", "revolution", "monarch", "pharaoh",
        "knight", "siege", "archive", "century", "colony", "senate", "emperor", "crusade", "relic", "scroll",
        "fortress", "legion", "tribe", "chronicle", "manor", "throne", "duke", "guild", "plague", "charter",
    ],
    &[
        "guitar", "album", "chorus", "melody", "drummer", "concert", "lyric", "rhythm", "violin", "tempo",
        "ballad", "record", "studio", "tour", "band", "piano", "bass", "chord", "synth", "vinyl", "anthem",
        "verse", "opera", "jazz", "riff", "stage", "remix", "playlist", "choir", "track",
    ],
    &[
        "planet", "galaxy", "molecule", "neuron", "gene", "telescope", "atom", "fossil", "climate", "orbit",
        "protein", "virus", "comet", "quantum", "cell", "enzyme", "crater", "asteroid", "nebula", "photon",
        "species", "glacier", "volcano", "microbe", "genome", "laser", "lab", "theory", "sample", "spore",
    ],
    &[
        "passport", "airport", "hostel", "beach", "island", "luggage", "journey", "village", "canyon", "ferry",
        "museum", "border", "hotel", "mountain", "train", "cruise", "tourist", "map", "harbor", "desert",
        "lagoon", "jungle", "resort", "visa", "backpack", "trail", "coast", "bazaar", "temple", "cliff",
    ],
    &[
        "market", "budget", "investor", "stock", "revenue", "profit", "merger", "brand", "client", "contract",
        "salary", "loan", "tax", "founder", "pitch", "equity", "invoice", "debt", "fund", "asset", "startup",
        "strategy", "retail", "supplier", "broker", "bond", "share", "payroll", "venture", "deal",
    ],
];

const TOPIC_NAMES: &[&str] = &["food", "sports", "tech", "history", "music", "science", "travel", "business"];

const GENERAL_NOUNS: &[&str] = &[
    "friend", "story", "week", "idea", "problem", "question", "moment", "family", "people", "world", "guest",
    "listener", "episode", "thing", "place", "group", "point", "answer", "reason", "way", "plan", "mistake",
    "lesson", "habit", "weekend", "morning", "evening", "neighbor", "dream", "project", "chance", "detail",
    "topic", "result", "change", "future", "memory", "surprise", "secret", "journey",
];

const VERBS: &[&str] = &[
    "love", "discuss", "explore", "explain", "find", "build", "share", "remember", "imagine", "consider",
    "describe", "enjoy", "notice", "review", "compare", "follow", "question", "celebrate", "study", "mention",
    "like", "hate", "need", "want", "see", "hear", "try", "make", "break", "fix", "choose", "visit", "watch",
    "test", "plan", "change", "learn", "teach", "support", "avoid", "miss", "keep", "start", "finish",
    "examine", "defend", "predict", "ignore", "trust", "doubt",
];

const ADJECTIVES: &[&str] = &[
    "new", "old", "strange", "simple", "huge", "tiny", "amazing", "terrible", "quiet", "loud", "wild",
    "careful", "bright", "dark", "famous", "secret", "modern", "ancient", "happy", "sad", "funny", "serious",
    "weird", "perfect", "broken", "cheap", "expensive", "local", "foreign", "early", "late", "rare", "common",
    "honest", "clever", "lazy", "brave", "gentle", "massive", "curious",
];

const ADVERBS: &[&str] = &[
    "Honestly", "Basically", "Actually", "Obviously", "Suddenly", "Eventually", "Clearly", "Apparently",
    "Frankly", "Luckily", "Sadly", "Personally", "Recently", "Usually", "Naturally",
];

const PRONOUNS: &[&str] = &["we", "you", "they", "I"];
const DETERMINERS: &[&str] = &["the", "a", "this", "that", "every", "some"];
const PREPOSITIONS: &[&str] = &["about", "with", "from", "for", "in", "on"];

/// Swear words used by the generator: one syllable, not on the easy-word list.
pub const SWEAR_WORDS: &[&str] = &["shit", "crap", "damn", "turd", "piss", "bitch", "dick", "crud"];
pub const FILLER_WORDS: &[&str] = &["um", "uh", "hmm", "erm"];
pub const AD_WORDS: &[&str] = &["sponsored", "acme", "code", "discount", "subscription", "offer", "percent"];

/// Seed words for labeling the swear, filler and ad topics of a model
/// trained on generated data.
pub fn seed_words() -> BTreeMap<TopicRole, Vec<String>> {
    let owned = |w: &[&str]| w.iter().map(|s| s.to_string()).collect();
    BTreeMap::from([
        (TopicRole::Swear, owned(SWEAR_WORDS)),
        (TopicRole::Filler, owned(FILLER_WORDS)),
        (TopicRole::Ad, owned(AD_WORDS)),
    ])
}

/// Which features carry an engagement effect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Shifts {
    pub entropy: bool,
    pub speech_rate: bool,
    pub swear: bool,
}

impl Default for Shifts {
    fn default() -> Self {
        Shifts {
            entropy: true,
            speech_rate: true,
            swear: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_episodes: usize,
    pub seed: u64,
    pub shifts: Shifts,
    pub min_duration_s: f64,
    pub max_duration_s: f64,
    /// Mean words per minute of speech.
    pub base_wpm: f64,
    /// Change in words per minute per unit of engagement.
    pub wpm_per_z: f64,
    pub wpm_sd: f64,
    /// Share of each open-class word pool an episode draws from.
    pub vocab_share: f64,
    pub vocab_share_per_z: f64,
    /// Chance that an eligible noun becomes a swear word.
    pub swear_prob: f64,
    /// Multiplicative change in `swear_prob` per unit of engagement, as `exp(-x z)`.
    pub swear_per_z: f64,
    /// Standard deviation of the per-episode log multiplier on the swear
    /// and filler rates.
    pub propensity_sd: f64,
    pub filler_prob: f64,
    /// Chance that an episode carries ad reads.
    pub ad_read_prob: f64,
    /// Chance that a sentence of an episode with ads starts an ad read.
    pub ad_read_rate: f64,
    /// Sensitivity of the stream rate to engagement.
    pub rate_per_z: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_episodes: 2000,
            seed: 0,
            shifts: Shifts::default(),
            min_duration_s: 610.0,
            max_duration_s: 680.0,
            base_wpm: 150.0,
            wpm_per_z: 5.0,
            wpm_sd: 12.0,
            vocab_share: 0.45,
            vocab_share_per_z: 0.035,
            swear_prob: 0.3,
            swear_per_z: 0.6,
            propensity_sd: 0.7,
            filler_prob: 0.25,
            ad_read_prob: 0.3,
            ad_read_rate: 0.02,
            rate_per_z: 1.2,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_episodes < 8 {
            return Err(Error::Config("synth.n_episodes must be at least 8".into()));
        }
        if !(self.min_duration_s > 0.0 && self.max_duration_s >= self.min_duration_s) {
            return Err(Error::Config("synth durations must satisfy 0 < min <= max".into()));
        }
        if !(self.base_wpm > 0.0 && self.wpm_sd >= 0.0) {
            return Err(Error::Config("synth.base_wpm must be positive".into()));
        }
        if !(self.propensity_sd >= 0.0) {
            return Err(Error::Config("synth.propensity_sd must be non-negative".into()));
        }
        if !(self.vocab_share > 0.0 && self.vocab_share <= 1.0) {
            return Err(Error::Config("synth.vocab_share must be in (0, 1]".into()));
        }
        for (name, p) in [
            ("swear_prob", self.swear_prob),
            ("filler_prob", self.filler_prob),
            ("ad_read_prob", self.ad_read_prob),
            ("ad_read_rate", self.ad_read_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("synth.{name} must be in [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    /// Latent engagement of each episode, in corpus order.
    pub engagement: Vec<f64>,
}

#[derive(Clone)]
struct Pools<'a> {
    topic: Vec<&'a str>,
    general: Vec<&'a str>,
    verbs: Vec<&'a str>,
    adjectives: Vec<&'a str>,
    adverbs: Vec<&'a str>,
}

fn subset<'a>(pool: &[&'a str], share: f64, rng: &mut seed::Rng) -> Vec<&'a str> {
    let n = ((pool.len() as f64 * share).round() as usize).clamp(2, pool.len());
    let mut v = pool.to_vec();
    v.shuffle(rng);
    v.truncate(n);
    v
}

fn pick<'a>(pool: &[&'a str], rng: &mut seed::Rng) -> &'a str {
    pool[rng.gen_range(0..pool.len())]
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

struct Sentence {
    words: Vec<String>,
}

#[derive(Clone)]
struct Grammar<'a> {
    pools: Pools<'a>,
    swear_prob: f64,
    filler_prob: f64,
}

fn swearable(noun: &str) -> bool {
    count_syllables(noun) == 1
        && !default_easy_words().is_easy(noun)
        && sample_emotion_lexicon().labels(noun).is_empty()
}

impl Grammar<'_> {
    fn noun(&self, rng: &mut seed::Rng) -> String {
        let n = if rng.gen_bool(0.55) {
            pick(&self.pools.topic, rng)
        } else {
            pick(&self.pools.general, rng)
        };
        if swearable(n) && rng.gen_bool(self.swear_prob) {
            pick(SWEAR_WORDS, rng).to_string()
        } else {
            n.to_string()
        }
    }

    fn sentence(&self, rng: &mut seed::Rng) -> Sentence {
        let p = &self.pools;
        let det = |rng: &mut seed::Rng| pick(DETERMINERS, rng).to_string();
        let mut w: Vec<String> = match rng.gen_range(0..5) {
            0 => vec![
                pick(PRONOUNS, rng).into(),
                pick(&p.verbs, rng).into(),
                det(rng),
                pick(&p.adjectives, rng).into(),
                self.noun(rng),
            ],
            1 => vec![
                det(rng),
                self.noun(rng),
                "is".into(),
                pick(&p.adjectives, rng).into(),
                pick(PREPOSITIONS, rng).into(),
                det(rng),
                self.noun(rng),
            ],
            2 => vec![
                pick(PRONOUNS, rng).into(),
                pick(&p.verbs, rng).into(),
                det(rng),
                self.noun(rng),
                "and".into(),
                pick(PRONOUNS, rng).into(),
                pick(&p.verbs, rng).into(),
                det(rng),
                pick(&p.adjectives, rng).into(),
                self.noun(rng),
            ],
            3 => vec![
                format!("{},", pick(&p.adverbs, rng)),
                pick(PRONOUNS, rng).into(),
                pick(&p.verbs, rng).into(),
                det(rng),
                self.noun(rng),
                pick(PREPOSITIONS, rng).into(),
                det(rng),
                self.noun(rng),
            ],
            _ => vec![
                pick(PRONOUNS, rng).into(),
                "talk".into(),
                "about".into(),
                det(rng),
                self.noun(rng),
                "because".into(),
                det(rng),
                self.noun(rng),
                "is".into(),
                pick(&p.adjectives, rng).into(),
            ],
        };
        if rng.gen_bool(self.filler_prob) {
            let at = rng.gen_range(1..w.len());
            w.insert(at, pick(FILLER_WORDS, rng).to_string());
        }
        w[0] = capitalize(&w[0]);
        let last = w.len() - 1;
        w[last].push('.');
        Sentence { words: w }
    }
}

fn ad_read(rng: &mut seed::Rng) -> Vec<Sentence> {
    let n = rng.gen_range(5..=30);
    vec![
        Sentence {
            words: "This episode is sponsored by Acme subscription boxes."
                .split(' ')
                .map(str::to_string)
                .collect(),
        },
        Sentence {
            words: format!("Use code acme for a {n} percent discount offer.")
                .split(' ')
                .map(str::to_string)
                .collect(),
        },
    ]
}

fn join(sentences: &[Sentence]) -> String {
    sentences
        .iter()
        .map(|s| s.words.join(" "))
        .collect::<Vec<_>>()
        .join(" ")
}

fn episode(i: usize, cfg: &SynthConfig) -> Result<(Episode, f64)> {
    let mut rng = seed::rng_for(cfg.seed, &["synth", &i.to_string()]);
    let std_normal = Normal::new(0.0, 1.0).map_err(|e| Error::Internal(e.to_string()))?;
    let z: f64 = std_normal.sample(&mut rng);
    let topic = rng.gen_range(0..TOPIC_NOUNS.len());

    let first_streams = (std_normal.sample(&mut rng) + 5.0).exp().round().max(12.0) as u64;
    let logit = cfg.rate_per_z * z - 0.3 + 0.3 * std_normal.sample(&mut rng);
    let rate = 1.0 / (1.0 + (-logit).exp());
    let qualified_streams = ((first_streams as f64 * rate).round() as u64).min(first_streams);

    let share = if cfg.shifts.entropy {
        (cfg.vocab_share + cfg.vocab_share_per_z * z).clamp(0.1, 1.0)
    } else {
        cfg.vocab_share
    };
    let wpm = (cfg.base_wpm
        + if cfg.shifts.speech_rate { cfg.wpm_per_z * z } else { 0.0 }
        + cfg.wpm_sd * std_normal.sample(&mut rng))
    .clamp(cfg.base_wpm * 0.5, cfg.base_wpm * 1.6);
    let mut propensity = || (cfg.propensity_sd * std_normal.sample(&mut rng)).exp();
    let swear_scale = propensity();
    let filler_scale = propensity();
    let swear_prob = if cfg.shifts.swear {
        cfg.swear_prob * (-cfg.swear_per_z * z).exp()
    } else {
        cfg.swear_prob
    };
    let swear_prob = (swear_prob * swear_scale).clamp(0.0, 0.9);
    let filler_prob = (cfg.filler_prob * filler_scale).clamp(0.0, 0.9);
    let speech_share = rng.gen_range(0.8..0.9);
    let duration = rng.gen_range(cfg.min_duration_s..=cfg.max_duration_s);

    let transcript_grammar = Grammar {
        pools: Pools {
            topic: subset(TOPIC_NOUNS[topic], share, &mut rng),
            general: subset(GENERAL_NOUNS, share, &mut rng),
            verbs: subset(VERBS, share, &mut rng),
            adjectives: subset(ADJECTIVES, share, &mut rng),
            adverbs: subset(ADVERBS, share, &mut rng),
        },
        swear_prob,
        filler_prob,
    };
    let description_grammar = Grammar {
        swear_prob: 0.0,
        filler_prob: 0.0,
        ..transcript_grammar.clone()
    };

    let word_s = 60.0 / wpm;
    let mut words = Vec::new();
    let mut t = rng.gen_range(0.0..2.0);
    let has_ads = rng.gen_bool(cfg.ad_read_prob);
    while t < duration {
        let batch = if has_ads && rng.gen_bool(cfg.ad_read_rate) {
            ad_read(&mut rng)
        } else {
            vec![transcript_grammar.sentence(&mut rng)]
        };
        for s in batch {
            let spoken = s.words.len() as f64 * word_s;
            for w in s.words {
                if t + word_s > duration {
                    break;
                }
                words.push(TranscriptWord::new(w, t, t + word_s));
                t += word_s;
            }
            t += spoken * (1.0 - speech_share) / speech_share * rng.gen_range(0.5..1.5);
        }
    }

    let name = TOPIC_NAMES[topic];
    let mut show = vec![
        Sentence {
            words: format!("A show about {name} and the people behind it.")
                .split(' ')
                .map(str::to_string)
                .collect(),
        },
        description_grammar.sentence(&mut rng),
    ];
    if rng.gen_bool(0.5) {
        show.push(Sentence {
            words: vec!["Follow".into(), "us".into(), format!("@show{i}.")],
        });
    }
    let mut desc: Vec<Sentence> = (0..rng.gen_range(2..=4))
        .map(|_| description_grammar.sentence(&mut rng))
        .collect();
    if rng.gen_bool(0.3) {
        desc.push(Sentence {
            words: "Use promo code SAVE for a discount."
                .split(' ')
                .map(str::to_string)
                .collect(),
        });
    }

    Ok((
        Episode {
            show_id: format!("show{i:05}"),
            episode_id: format!("ep{i:05}"),
            show_title: format!("The {} Hour {i}", capitalize(name)),
            show_description: join(&show),
            episode_title: format!("Episode {i}"),
            episode_description: join(&desc),
            duration_s: duration,
            first_streams,
            qualified_streams,
            published: None,
            language_hint: None,
            words,
        },
        z,
    ))
}

/// Generate a corpus. The same configuration always yields the same corpus.
pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let eps: Vec<(Episode, f64)> = (0..cfg.n_episodes)
        .into_par_iter()
        .map(|i| episode(i, cfg))
        .collect::<Result<_>>()?;
    let (episodes, engagement) = eps.into_iter().unzip();
    Ok(SynthCorpus {
        corpus: Corpus {
            episodes,
            filtered: false,
        },
        engagement,
    })
}
