use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::extraneous::{ExtraneousClassifier, DEFAULT_PROMO_MARKERS};
use super::lexical::{emotion_proportions, polarity_fractions, pos_proportions, vocab_entropy};
use super::lm::{distinctiveness, UnigramLM};
use super::readability::{dale_chall, flesch_kincaid};
use super::tfidf::{faithfulness, Idf};
use super::timing::{non_speech_time, speech_rate};
use super::vector::FeatureVector;
use crate::corpus::{truncate_transcript, Episode, TranscriptWord};
use crate::error::{Error, Result, ResultExt};
use crate::lexicons::{EasyWordSet, Emotion, EmotionLexicon, SentenceRef, SentenceScorer, TextKind};
use crate::seed;
use crate::textkit::{pos_tag, tokenize_sentences, PosTag, TaggerModel, Token};
use crate::topics::TopicFractions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeechRateScope {
    /// Words starting inside the truncation window.
    Window,
    /// Every word of the episode.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub truncate_s: f64,
    pub desc_sample_n: usize,
    pub trans_sample_n: usize,
    pub distinct_runs: usize,
    pub lm_k: f64,
    pub polarity_threshold: f64,
    pub speech_rate_scope: SpeechRateScope,
    pub promo_markers: Vec<String>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            truncate_s: 600.0,
            desc_sample_n: 100,
            trans_sample_n: 1000,
            distinct_runs: 5,
            lm_k: 1.0,
            polarity_threshold: 0.5,
            speech_rate_scope: SpeechRateScope::Window,
            promo_markers: DEFAULT_PROMO_MARKERS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.truncate_s > 0.0) {
            return bad("features.truncate_s must be positive");
        }
        if self.desc_sample_n == 0 || self.trans_sample_n == 0 || self.distinct_runs == 0 {
            return bad("sample sizes and distinct_runs must be at least 1");
        }
        if !(self.lm_k > 0.0) {
            return bad("features.lm_k must be positive");
        }
        if !(self.polarity_threshold > 0.0 && self.polarity_threshold < 1.0) {
            return bad("features.polarity_threshold must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Tokenized texts of one episode after extraneous-sentence removal.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTexts {
    pub episode_id: String,
    /// Kept sentences of the show description followed by the episode description.
    pub description: Vec<Vec<Token>>,
    /// Index of each kept sentence in the uncleaned description.
    pub description_index: Vec<usize>,
    /// How many of the kept sentences come from the show description.
    pub show_sentences: usize,
    pub ad_frac_desc: f64,
    /// Sentences of the truncated transcript.
    pub transcript: Vec<Vec<Token>>,
    pub window_words: Vec<TranscriptWord>,
}

fn word_norms<'a>(sentences: impl IntoIterator<Item = &'a Vec<Token>>) -> Vec<String> {
    sentences
        .into_iter()
        .flatten()
        .filter(|t| t.is_word())
        .map(|t| t.norm.clone())
        .collect()
}

impl EpisodeTexts {
    pub fn description_words(&self) -> Vec<String> {
        word_norms(&self.description)
    }

    /// Words of the cleaned episode description alone.
    pub fn episode_description_words(&self) -> Vec<String> {
        word_norms(&self.description[self.show_sentences..])
    }

    pub fn transcript_words(&self) -> Vec<String> {
        word_norms(&self.transcript)
    }
}

/// Split descriptions into sentences, drop extraneous ones, and tokenize the
/// transcript up to `truncate_s`.
pub fn prepare_texts(
    ep: &Episode,
    classifier: &dyn ExtraneousClassifier,
    truncate_s: f64,
) -> Result<EpisodeTexts> {
    let show = tokenize_sentences(&ep.show_description);
    let n_show = show.len();
    let mut all = show;
    all.extend(tokenize_sentences(&ep.episode_description));
    let mut description = Vec::new();
    let mut description_index = Vec::new();
    let mut show_sentences = 0;
    let mut flagged = 0usize;
    for (index, s) in all.into_iter().enumerate() {
        let at = SentenceRef {
            episode_id: &ep.episode_id,
            text: TextKind::Description,
            index,
        };
        if classifier.is_extraneous(at, &s) {
            flagged += 1;
            continue;
        }
        show_sentences += usize::from(index < n_show);
        description.push(s);
        description_index.push(index);
    }
    let total = description.len() + flagged;
    let window = truncate_transcript(ep, truncate_s)?;
    Ok(EpisodeTexts {
        episode_id: ep.episode_id.clone(),
        description,
        description_index,
        show_sentences,
        ad_frac_desc: if total == 0 { 0.0 } else { flagged as f64 / total as f64 },
        transcript: tokenize_sentences(&window.transcript_text()),
        window_words: window.words,
    })
}

/// Unigram model over every description and transcript word.
pub fn build_unigram_lm(texts: &[EpisodeTexts], k: f64) -> Result<UnigramLM> {
    if texts.is_empty() {
        return Err(Error::Empty("corpus".into()));
    }
    UnigramLM::from_documents(
        texts
            .iter()
            .flat_map(|t| [t.description_words(), t.transcript_words()]),
        k,
    )
}

/// Document frequencies with each description and each transcript as a document.
pub fn build_idf(texts: &[EpisodeTexts]) -> Result<Idf> {
    Idf::from_documents(
        texts
            .iter()
            .flat_map(|t| [t.description_words(), t.transcript_words()]),
    )
}

/// Shared, read-only inputs to feature extraction.
pub struct FeatureResources<'a> {
    pub lm: &'a UnigramLM,
    pub idf: &'a Idf,
    pub emotions: &'a EmotionLexicon,
    pub easy: &'a EasyWordSet,
    pub tagger: &'a TaggerModel,
    pub scorer: &'a dyn SentenceScorer,
    pub classifier: &'a dyn ExtraneousClassifier,
    pub config: &'a FeatureConfig,
    pub seed: u64,
}

struct SideFeatures {
    distinct: f64,
    fk: f64,
    dc: f64,
    entropy: f64,
    emotions: [f64; Emotion::COUNT],
    pos: [f64; PosTag::COUNT],
    sent_pos: f64,
    sent_neg: f64,
}

fn side_features(
    sentences: &[Vec<Token>],
    indices: &[usize],
    text: TextKind,
    sample_n: usize,
    episode_id: &str,
    res: &FeatureResources<'_>,
) -> Result<Option<SideFeatures>> {
    let words = word_norms(sentences);
    if words.is_empty() {
        return Ok(None);
    }
    let tokens: Vec<Token> = sentences.iter().flatten().cloned().collect();
    let tagged: Vec<Token> = sentences
        .iter()
        .flat_map(|s| pos_tag(res.tagger, s))
        .collect();
    let scores: Vec<f64> = sentences
        .iter()
        .zip(indices)
        .map(|(s, &index)| {
            let at = SentenceRef {
                episode_id,
                text,
                index,
            };
            res.scorer.score(at, s).clamp(-1.0, 1.0)
        })
        .collect();
    let (sent_pos, sent_neg) = polarity_fractions(&scores, res.config.polarity_threshold)?;
    let side_seed = seed::derive(res.seed, &["features", episode_id, text.as_str()]);
    Ok(Some(SideFeatures {
        distinct: distinctiveness(&words, res.lm, sample_n, res.config.distinct_runs, side_seed)?,
        fk: flesch_kincaid(sentences)?,
        dc: dale_chall(sentences, res.easy)?,
        entropy: vocab_entropy(&words)?,
        emotions: emotion_proportions(&tokens, res.emotions),
        pos: pos_proportions(&tagged)?.fractions,
        sent_pos,
        sent_neg,
    }))
}

fn put_side(v: &mut FeatureVector, side: &str, f: &SideFeatures) {
    v.set(&format!("distinct_{side}"), f.distinct);
    v.set(&format!("fk_{side}"), f.fk);
    v.set(&format!("dc_{side}"), f.dc);
    v.set(&format!("entropy_{side}"), f.entropy);
    for e in Emotion::ALL {
        v.set(&format!("emo_{e}_{side}"), f.emotions[e.index()]);
    }
    v.set(&format!("sent_pos_frac_{side}"), f.sent_pos);
    v.set(&format!("sent_neg_frac_{side}"), f.sent_neg);
    for t in PosTag::ALL {
        v.set(
            &format!("pos_{}_{side}", t.as_str().to_lowercase()),
            f.pos[t.index()],
        );
    }
    v.set(
        &format!("pos_conj_{side}"),
        f.pos[PosTag::Cconj.index()] + f.pos[PosTag::Sconj.index()],
    );
}

/// Features from already prepared texts.
pub fn features_from_texts(
    ep: &Episode,
    texts: &EpisodeTexts,
    res: &FeatureResources<'_>,
    topics: Option<&TopicFractions>,
) -> Result<FeatureVector> {
    let cfg = res.config;
    let mut v = FeatureVector::zeros(&ep.episode_id);
    v.set("desc_len_tokens", texts.description_words().len() as f64);
    v.set("audio_duration_s", ep.duration_s);
    v.set("ad_frac_desc", texts.ad_frac_desc);
    v.set(
        "faithfulness",
        faithfulness(&texts.episode_description_words(), &texts.transcript_words(), res.idf),
    );

    let trans_index: Vec<usize> = (0..texts.transcript.len()).collect();
    let desc = side_features(
        &texts.description,
        &texts.description_index,
        TextKind::Description,
        cfg.desc_sample_n,
        &ep.episode_id,
        res,
    )?;
    let trans = side_features(
        &texts.transcript,
        &trans_index,
        TextKind::Transcript,
        cfg.trans_sample_n,
        &ep.episode_id,
        res,
    )?;
    match &desc {
        Some(f) => put_side(&mut v, "desc", f),
        None => v.flags.desc_empty = true,
    }
    match &trans {
        Some(f) => put_side(&mut v, "trans", f),
        None => v.flags.trans_empty = true,
    }

    if let Some(t) = topics {
        v.set("ad_topic_frac_trans", t.ad);
        v.set("swear_topic_frac", t.swear);
        v.set("filler_topic_frac", t.filler);
    }
    let rate_words = match cfg.speech_rate_scope {
        SpeechRateScope::Window => &texts.window_words,
        SpeechRateScope::Full => &ep.words,
    };
    v.set("speech_rate_wpm", speech_rate(rate_words));
    v.set("non_speech_s", non_speech_time(&texts.window_words, cfg.truncate_s)?);
    Ok(v)
}

/// The full feature vector of one episode.
pub fn extract_features(
    ep: &Episode,
    res: &FeatureResources<'_>,
    topics: Option<&TopicFractions>,
) -> Result<FeatureVector> {
    let run = || {
        let texts = prepare_texts(ep, res.classifier, res.config.truncate_s)?;
        features_from_texts(ep, &texts, res, topics)
    };
    run().context_with(|| format!("episode {}", ep.episode_id))
}

/// Extract every episode in parallel; results keep the input order.
pub fn extract_all(
    episodes: &[Episode],
    texts: &[EpisodeTexts],
    res: &FeatureResources<'_>,
    topics: &dyn Fn(&str) -> Option<TopicFractions>,
) -> Result<Vec<FeatureVector>> {
    if episodes.len() != texts.len() {
        return Err(Error::Internal("episodes and prepared texts differ in length".into()));
    }
    let topics: Vec<Option<TopicFractions>> =
        episodes.iter().map(|e| topics(&e.episode_id)).collect();
    episodes
        .par_iter()
        .zip(texts)
        .zip(&topics)
        .map(|((ep, t), tf)| {
            features_from_texts(ep, t, res, tf.as_ref())
                .context_with(|| format!("episode {}", ep.episode_id))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::extraneous::MarkerClassifier;
    use crate::lexicons::{default_easy_words, sample_emotion_lexicon, LexiconScorer};
    use crate::textkit::default_tagger;

    fn episode() -> Episode {
        let words: Vec<TranscriptWord> = "Hello and welcome to the show . Today we talk about gardens . \
            The soil is wonderful and the tomatoes are happy ."
            .split(' ')
            .enumerate()
            .map(|(i, w)| TranscriptWord::new(w, i as f64 * 0.5, i as f64 * 0.5 + 0.4))
            .collect();
        Episode {
            show_id: "s".into(),
            episode_id: "e1".into(),
            show_title: "Gardens".into(),
            show_description: "A show about gardens. Follow us @gardenpod for more.".into(),
            episode_title: "Soil".into(),
            episode_description: "We talk about soil and tomatoes.".into(),
            duration_s: 900.0,
            first_streams: 100,
            qualified_streams: 40,
            published: None,
            language_hint: None,
            words,
        }
    }

    fn with_resources<T>(ep: &Episode, f: impl FnOnce(&FeatureResources<'_>) -> T) -> T {
        let cfg = FeatureConfig::default();
        let classifier = MarkerClassifier::default();
        let texts = vec![prepare_texts(ep, &classifier, cfg.truncate_s).unwrap()];
        let lm = build_unigram_lm(&texts, 1.0).unwrap();
        let idf = build_idf(&texts).unwrap();
        let lex = sample_emotion_lexicon();
        let scorer = LexiconScorer { lexicon: lex };
        let res = FeatureResources {
            lm: &lm,
            idf: &idf,
            emotions: lex,
            easy: default_easy_words(),
            tagger: default_tagger(),
            scorer: &scorer,
            classifier: &classifier,
            config: &cfg,
            seed: 7,
        };
        f(&res)
    }

    #[test]
    fn populates_fields_and_is_deterministic() {
        let ep = episode();
        with_resources(&ep, |res| {
            let a = extract_features(&ep, res, None).unwrap();
            let b = extract_features(&ep, res, None).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.get("ad_frac_desc"), Some(1.0 / 3.0));
            assert_eq!(a.get("desc_len_tokens"), Some(10.0));
            assert_eq!(a.get("audio_duration_s"), Some(900.0));
            assert!(a.get("faithfulness").unwrap() > 0.0);
            assert!(a.get("emo_joy_trans").unwrap() > 0.0);
            let pos_sum: f64 = PosTag::ALL
                .iter()
                .map(|t| a.get(&format!("pos_{}_trans", t.as_str().to_lowercase())).unwrap())
                .sum();
            assert!((pos_sum - 1.0).abs() < 1e-9);
            assert!(!a.flags.desc_empty && !a.flags.trans_empty);
        });
    }

    #[test]
    fn empty_description_is_flagged() {
        let mut ep = episode();
        ep.show_description.clear();
        ep.episode_description.clear();
        with_resources(&ep, |res| {
            let v = extract_features(&ep, res, None).unwrap();
            assert!(v.flags.desc_empty);
            assert_eq!(v.get("fk_desc"), Some(0.0));
            assert_eq!(v.get("faithfulness"), Some(0.0));
            assert!(v.get("entropy_trans").unwrap() > 0.0);
        });
    }

    #[test]
    fn topic_fractions_pass_through() {
        let ep = episode();
        with_resources(&ep, |res| {
            let t = TopicFractions {
                ad: 0.1,
                swear: 0.2,
                filler: 0.3,
            };
            let v = extract_features(&ep, res, Some(&t)).unwrap();
            assert_eq!(v.get("ad_topic_frac_trans"), Some(0.1));
            assert_eq!(v.get("swear_topic_frac"), Some(0.2));
            assert_eq!(v.get("filler_topic_frac"), Some(0.3));
        });
    }

    #[test]
    fn extraction_is_idempotent_on_truncated_input() {
        let ep = episode();
        let short = truncate_transcript(&ep, 600.0).unwrap();
        with_resources(&ep, |res| {
            assert_eq!(
                extract_features(&ep, res, None).unwrap(),
                extract_features(&short, res, None).unwrap()
            );
        });
    }
}
