use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

/// Smoothed inverse document frequency: `ln((1 + n) / (1 + df)) + 1`.
pub fn idf_weight(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Document frequencies over a fixed document collection.
#[derive(Debug, Clone, PartialEq)]
pub struct Idf {
    n_docs: usize,
    df: HashMap<String, usize>,
}

impl Idf {
    pub fn from_documents<D, T>(docs: D) -> Result<Self>
    where
        D: IntoIterator<Item = T>,
        T: IntoIterator,
        T::Item: AsRef<str>,
    {
        let mut df: HashMap<String, usize> = HashMap::new();
        let mut n_docs = 0;
        for doc in docs {
            n_docs += 1;
            let seen: HashSet<String> = doc.into_iter().map(|t| t.as_ref().to_string()).collect();
            for t in seen {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        if n_docs == 0 {
            return Err(Error::Empty("document collection".into()));
        }
        Ok(Idf { n_docs, df })
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn df(&self, token: &str) -> usize {
        self.df.get(token).copied().unwrap_or(0)
    }

    pub fn weight(&self, token: &str) -> f64 {
        idf_weight(self.n_docs, self.df(token))
    }
}

/// L2-normalized raw-count tf times idf, as a sorted sparse vector.
pub fn tfidf_vector<S: AsRef<str>>(tokens: &[S], idf: &Idf) -> Vec<(String, f64)> {
    let mut tf: HashMap<&str, usize> = HashMap::new();
    for t in tokens {
        *tf.entry(t.as_ref()).or_insert(0) += 1;
    }
    let mut v: Vec<(String, f64)> = tf
        .into_iter()
        .map(|(t, c)| (t.to_string(), c as f64 * idf.weight(t)))
        .collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, x) in &mut v {
            *x /= norm;
        }
    }
    v
}

/// Cosine similarity of the two texts' tf-idf vectors; 0 if either is empty.
pub fn faithfulness<S: AsRef<str>, T: AsRef<str>>(desc: &[S], trans: &[T], idf: &Idf) -> f64 {
    if desc.is_empty() || trans.is_empty() {
        return 0.0;
    }
    let a = tfidf_vector(desc, idf);
    let b = tfidf_vector(trans, idf);
    // Merge-join over the sorted term lists.
    let (mut i, mut j, mut dot) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    dot.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn identical_and_disjoint() {
        let idf = Idf::from_documents([words("a b c"), words("c d e")]).unwrap();
        let x = words("a b b c");
        assert!((faithfulness(&x, &x, &idf) - 1.0).abs() < 1e-12);
        assert_eq!(faithfulness(&words("a b"), &words("d e"), &idf), 0.0);
        assert_eq!(faithfulness(&Vec::<&str>::new(), &x, &idf), 0.0);
    }

    #[test]
    fn idf_formula() {
        let idf = Idf::from_documents([words("a b"), words("a"), words("c")]).unwrap();
        assert_eq!(idf.weight("a"), (4.0_f64 / 3.0).ln() + 1.0);
        assert_eq!(idf.weight("zzz"), 4.0_f64.ln() + 1.0);
        assert!(Idf::from_documents(Vec::<Vec<&str>>::new()).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(a in "[a-f]( [a-f]){0,15}", b in "[a-f]( [a-f]){0,15}") {
            let idf = Idf::from_documents([words(&a), words(&b)]).unwrap();
            let ab = faithfulness(&words(&a), &words(&b), &idf);
            let ba = faithfulness(&words(&b), &words(&a), &idf);
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!((faithfulness(&words(&a), &words(&a), &idf) - 1.0).abs() < 1e-12);
        }
    }
}
