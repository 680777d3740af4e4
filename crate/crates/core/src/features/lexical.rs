use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lexicons::{Emotion, EmotionLexicon, SentenceRef, SentenceScorer, TextKind};
use crate::textkit::{PosTag, Token};

/// Shannon entropy in bits of the empirical unigram distribution.
pub fn vocab_entropy<S: AsRef<str>>(tokens: &[S]) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::Empty("text".into()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in tokens {
        *counts.entry(t.as_ref()).or_insert(0) += 1;
    }
    let n = tokens.len() as f64;
    let mut sorted: Vec<usize> = counts.into_values().collect();
    sorted.sort_unstable();
    let h: f64 = sorted
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    Ok(h.max(0.0))
}

/// Share of word tokens carrying each label, in `Emotion::ALL` order.
pub fn emotion_proportions(tokens: &[Token], lex: &EmotionLexicon) -> [f64; Emotion::COUNT] {
    let mut counts = [0usize; Emotion::COUNT];
    let mut words = 0usize;
    for t in tokens.iter().filter(|t| t.is_word()) {
        words += 1;
        for e in lex.labels(&t.norm).iter() {
            counts[e.index()] += 1;
        }
    }
    let mut out = [0.0; Emotion::COUNT];
    if words > 0 {
        for (o, c) in out.iter_mut().zip(counts) {
            *o = c as f64 / words as f64;
        }
    }
    out
}

/// Fractions of scores strictly above `threshold` and strictly below `-threshold`.
pub fn polarity_fractions(scores: &[f64], threshold: f64) -> Result<(f64, f64)> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "polarity threshold must lie in (0, 1), got {threshold}"
        )));
    }
    if scores.is_empty() {
        return Ok((0.0, 0.0));
    }
    let n = scores.len() as f64;
    let pos = scores.iter().filter(|&&s| s > threshold).count() as f64;
    let neg = scores.iter().filter(|&&s| s < -threshold).count() as f64;
    Ok((pos / n, neg / n))
}

/// Score every sentence, then take the strongly positive and negative shares.
pub fn sentence_polarity(
    sentences: &[Vec<Token>],
    scorer: &dyn SentenceScorer,
    episode_id: &str,
    text: TextKind,
    threshold: f64,
) -> Result<(f64, f64)> {
    let scores: Vec<f64> = sentences
        .iter()
        .enumerate()
        .map(|(index, s)| {
            let at = SentenceRef {
                episode_id,
                text,
                index,
            };
            scorer.score(at, s).clamp(-1.0, 1.0)
        })
        .collect();
    polarity_fractions(&scores, threshold)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosProportions {
    pub fractions: [f64; PosTag::COUNT],
    /// No tokens at all; every fraction is 0.
    pub empty: bool,
}

pub fn pos_proportions(tokens: &[Token]) -> Result<PosProportions> {
    let mut counts = [0usize; PosTag::COUNT];
    for (i, t) in tokens.iter().enumerate() {
        let tag = t
            .pos
            .ok_or_else(|| Error::InvalidArgument(format!("token {i} (`{}`) is untagged", t.surface)))?;
        counts[tag.index()] += 1;
    }
    let mut fractions = [0.0; PosTag::COUNT];
    if !tokens.is_empty() {
        for (f, c) in fractions.iter_mut().zip(counts) {
            *f = c as f64 / tokens.len() as f64;
        }
    }
    Ok(PosProportions {
        fractions,
        empty: tokens.is_empty(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicons::{read_emotion_lexicon, LexiconScorer};
    use crate::textkit::{tokenize, tokenize_sentences};
    use proptest::prelude::*;

    #[test]
    fn entropy_cases() {
        assert_eq!(vocab_entropy(&["a", "a", "b", "b"]).unwrap(), 1.0);
        assert_eq!(vocab_entropy(&["x", "x", "x"]).unwrap(), 0.0);
        assert_eq!(vocab_entropy(&["a", "b", "c", "d"]).unwrap(), 2.0);
        assert!(vocab_entropy::<&str>(&[]).is_err());
    }

    #[test]
    fn emotion_cases() {
        let lex = read_emotion_lexicon("glad\tjoy\t1\nglad\tpositive\t1\n".as_bytes()).unwrap();
        assert_eq!(emotion_proportions(&tokenize("nothing here"), &lex), [0.0; 10]);
        let all = emotion_proportions(&tokenize("glad glad, glad!"), &lex);
        assert_eq!(all[Emotion::Joy.index()], 1.0);
        assert_eq!(all[Emotion::Positive.index()], 1.0);
        assert_eq!(all.iter().sum::<f64>(), 2.0);
        assert_eq!(emotion_proportions(&[], &lex), [0.0; 10]);
    }

    #[test]
    fn polarity_cases() {
        assert_eq!(polarity_fractions(&[1.0, -1.0, 0.0], 0.5).unwrap(), (1.0 / 3.0, 1.0 / 3.0));
        assert_eq!(polarity_fractions(&[0.5, -0.5], 0.5).unwrap(), (0.0, 0.0));
        assert_eq!(polarity_fractions(&[0.0, 0.0], 0.5).unwrap(), (0.0, 0.0));
        assert_eq!(polarity_fractions(&[], 0.5).unwrap(), (0.0, 0.0));
        assert!(polarity_fractions(&[0.1], 1.0).is_err());
    }

    #[test]
    fn polarity_through_a_scorer() {
        let lex = read_emotion_lexicon("good\tpositive\t1\nbad\tnegative\t1\n".as_bytes()).unwrap();
        let scorer = LexiconScorer { lexicon: &lex };
        let s = tokenize_sentences("Good stuff. Bad stuff. Plain stuff.");
        let got = sentence_polarity(&s, &scorer, "e", TextKind::Description, 0.5).unwrap();
        assert_eq!(got, (1.0 / 3.0, 1.0 / 3.0));
    }

    #[test]
    fn pos_cases() {
        let tags = [PosTag::Det, PosTag::Noun, PosTag::Verb, PosTag::Punct];
        let toks: Vec<Token> = tags.iter().map(|&t| Token::tagged("w", t)).collect();
        let p = pos_proportions(&toks).unwrap();
        for t in tags {
            assert_eq!(p.fractions[t.index()], 0.25);
        }
        assert_eq!(p.fractions.iter().sum::<f64>(), 1.0);
        let e = pos_proportions(&[]).unwrap();
        assert!(e.empty && e.fractions == [0.0; 17]);
        assert!(pos_proportions(&[Token::new("x")]).is_err());
    }

    proptest! {
        #[test]
        fn bag_features_ignore_order(words in prop::collection::vec("[a-d]{1,2}", 1..30), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut shuffled = words.clone();
            shuffled.shuffle(&mut crate::seed::rng(seed));
            prop_assert!((vocab_entropy(&words).unwrap() - vocab_entropy(&shuffled).unwrap()).abs() < 1e-12);
            let lex = read_emotion_lexicon("a\tjoy\t1\nbb\tfear\t1\n".as_bytes()).unwrap();
            let t1 = tokenize(&words.join(" "));
            let t2 = tokenize(&shuffled.join(" "));
            prop_assert_eq!(emotion_proportions(&t1, &lex), emotion_proportions(&t2, &lex));
        }

        #[test]
        fn pos_fractions_sum_to_one(tags in prop::collection::vec(0usize..17, 1..50)) {
            let toks: Vec<Token> = tags.iter().map(|&i| Token::tagged("w", PosTag::ALL[i])).collect();
            let p = pos_proportions(&toks).unwrap();
            prop_assert!((p.fractions.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
