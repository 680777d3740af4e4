use std::collections::HashMap;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::seed;

/// Add-k smoothed unigram model with one shared unknown type.
#[derive(Debug, Clone, PartialEq)]
pub struct UnigramLM {
    counts: HashMap<String, u64>,
    total: u64,
    pub k: f64,
}

impl UnigramLM {
    pub fn from_documents<D, T>(docs: D, k: f64) -> Result<Self>
    where
        D: IntoIterator<Item = T>,
        T: IntoIterator,
        T::Item: AsRef<str>,
    {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidArgument(format!("smoothing k must be positive, got {k}")));
        }
        let mut counts: HashMap<String, u64> = HashMap::new();
        let mut total = 0u64;
        for doc in docs {
            for tok in doc {
                *counts.entry(tok.as_ref().to_string()).or_insert(0) += 1;
                total += 1;
            }
        }
        if total == 0 {
            return Err(Error::Empty("language model training text".into()));
        }
        Ok(UnigramLM { counts, total, k })
    }

    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of seen types, excluding the unknown type.
    pub fn vocab_size(&self) -> usize {
        self.counts.len()
    }

    pub fn prob(&self, token: &str) -> f64 {
        let v = self.counts.len() as f64;
        (self.count(token) as f64 + self.k) / (self.total as f64 + self.k * (v + 1.0))
    }

    pub fn unknown_prob(&self) -> f64 {
        self.prob_of_count(0)
    }

    fn prob_of_count(&self, c: u64) -> f64 {
        let v = self.counts.len() as f64;
        (c as f64 + self.k) / (self.total as f64 + self.k * (v + 1.0))
    }

    pub fn surprisal(&self, token: &str) -> f64 {
        -self.prob(token).log2()
    }

    /// Seen types in lexicographic order.
    pub fn types(&self) -> Vec<&str> {
        let mut t: Vec<&str> = self.counts.keys().map(String::as_str).collect();
        t.sort_unstable();
        t
    }
}

/// Mean surprisal in bits over every token.
pub fn cross_entropy<S: AsRef<str>>(tokens: &[S], lm: &UnigramLM) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::Empty("text".into()));
    }
    Ok(tokens.iter().map(|t| lm.surprisal(t.as_ref())).sum::<f64>() / tokens.len() as f64)
}

/// Mean over `runs` of the cross-entropy of `sample_n` tokens drawn without
/// replacement. Texts no longer than `sample_n` use every token in every run.
pub fn distinctiveness<S: AsRef<str>>(
    tokens: &[S],
    lm: &UnigramLM,
    sample_n: usize,
    runs: usize,
    seed: u64,
) -> Result<f64> {
    if sample_n == 0 || runs == 0 {
        return Err(Error::InvalidArgument("sample_n and runs must be at least 1".into()));
    }
    if tokens.len() <= sample_n {
        return cross_entropy(tokens, lm);
    }
    let mut sum = 0.0;
    for run in 0..runs {
        let mut rng = seed::rng_for(seed, &["distinctiveness", &run.to_string()]);
        let mut idx = index::sample(&mut rng, tokens.len(), sample_n).into_vec();
        idx.sort_unstable();
        let run_mean =
            idx.iter().map(|&i| lm.surprisal(tokens[i].as_ref())).sum::<f64>() / sample_n as f64;
        sum += run_mean;
    }
    Ok(sum / runs as f64)
}
