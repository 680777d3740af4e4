use crate::error::{Error, Result};
use crate::lexicons::EasyWordSet;
use crate::textkit::{count_syllables, Token};

/// Word, sentence and syllable totals over word tokens only.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TextCounts {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
}

/// Sentences count only if they contain at least one word.
pub fn text_counts(sentences: &[Vec<Token>]) -> TextCounts {
    let mut c = TextCounts::default();
    for s in sentences {
        let mut any = false;
        for t in s.iter().filter(|t| t.is_word()) {
            any = true;
            c.words += 1;
            c.syllables += count_syllables(&t.surface);
        }
        c.sentences += usize::from(any);
    }
    c
}

fn require_words(c: &TextCounts) -> Result<()> {
    if c.words == 0 {
        return Err(Error::Empty("no word tokens for a readability score".into()));
    }
    Ok(())
}

pub fn flesch_kincaid(sentences: &[Vec<Token>]) -> Result<f64> {
    let c = text_counts(sentences);
    require_words(&c)?;
    let w = c.words as f64;
    Ok(0.39 * (w / c.sentences as f64) + 11.8 * (c.syllables as f64 / w) - 15.59)
}

pub fn dale_chall(sentences: &[Vec<Token>], easy: &EasyWordSet) -> Result<f64> {
    let c = text_counts(sentences);
    require_words(&c)?;
    let difficult = sentences
        .iter()
        .flatten()
        .filter(|t| t.is_word() && !easy.is_easy(&t.norm))
        .count();
    let w = c.words as f64;
    let d = 100.0 * difficult as f64 / w;
    let mut score = 0.1579 * d + 0.0496 * (w / c.sentences as f64);
    if d > 5.0 {
        score += 3.6365;
    }
    Ok(score)
}
