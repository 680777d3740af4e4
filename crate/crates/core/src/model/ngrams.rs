//! Unigram and bigram vocabularies and TF-IDF document vectors.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::features::tfidf::idf_weight;

/// Row-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(n_cols: usize) -> Self {
        SparseMatrix {
            n_cols,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Append a row; entries must have strictly increasing columns.
    pub fn push_row(&mut self, entries: &[(usize, f64)]) -> Result<()> {
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::InvalidArgument("sparse row columns must increase".into()));
            }
        }
        if let Some(&(c, _)) = entries.iter().find(|(c, v)| *c >= self.n_cols || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad sparse entry in column {c}")));
        }
        self.indices.extend(entries.iter().map(|e| e.0));
        self.values.extend(entries.iter().map(|e| e.1));
        self.indptr.push(self.indices.len());
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    /// Rows with no nonzero entries.
    pub fn empty_rows(&self) -> Vec<bool> {
        (0..self.n_rows()).map(|i| self.indptr[i] == self.indptr[i + 1]).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> SparseMatrix {
        let mut out = SparseMatrix::new(self.n_cols);
        for &r in rows {
            let (idx, val) = self.row(r);
            out.indices.extend_from_slice(idx);
            out.values.extend_from_slice(val);
            out.indptr.push(out.indices.len());
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows())
            .map(|i| {
                let mut r = vec![0.0; self.n_cols];
                let (idx, val) = self.row(i);
                for (&c, &v) in idx.iter().zip(val) {
                    r[c] = v;
                }
                r
            })
            .collect()
    }
}

/// Unigrams and space-joined bigrams of a token sequence.
pub fn ngrams<S: AsRef<str>>(tokens: &[S]) -> impl Iterator<Item = String> + '_ {
    let uni = tokens.iter().map(|t| t.as_ref().to_string());
    let bi = tokens
        .windows(2)
        .map(|w| format!("{} {}", w[0].as_ref(), w[1].as_ref()));
    uni.chain(bi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramVocab {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    df: Vec<usize>,
    pub n_docs: usize,
}

impl NgramVocab {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, i: usize) -> &str {
        &self.terms[i]
    }

    pub fn get(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self, i: usize) -> usize {
        self.df[i]
    }

    pub fn idf(&self, i: usize) -> f64 {
        idf_weight(self.n_docs, self.df[i])
    }
}

/// Every unigram and bigram occurring in at least `min_df` documents,
/// indexed in lexicographic order.
pub fn build_ngram_vocab<S: AsRef<str>>(docs: &[Vec<S>], min_df: usize) -> Result<NgramVocab> {
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for d in docs {
        let seen: HashSet<String> = ngrams(d).collect();
        for g in seen {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    let kept: Vec<(String, usize)> = df.into_iter().filter(|&(_, c)| c >= min_df.max(1)).collect();
    if kept.is_empty() {
        return Err(Error::Empty(format!("no n-gram occurs in {min_df} or more documents")));
    }
    let index = kept.iter().enumerate().map(|(i, (t, _))| (t.clone(), i)).collect();
    let (terms, df) = kept.into_iter().unzip();
    Ok(NgramVocab {
        terms,
        index,
        df,
        n_docs: docs.len(),
    })
}

/// Raw counts times smoothed idf, each row scaled to unit length. Unknown
/// n-grams are dropped; documents with none left give empty rows.
pub fn tfidf_transform<S: AsRef<str>>(docs: &[Vec<S>], vocab: &NgramVocab) -> SparseMatrix {
    let mut m = SparseMatrix::new(vocab.len());
    for d in docs {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for g in ngrams(d) {
            if let Some(i) = vocab.get(&g) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        let mut row: Vec<(usize, f64)> = counts.into_iter().map(|(i, c)| (i, c * vocab.idf(i))).collect();
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in &mut row {
                e.1 /= norm;
            }
        }
        m.push_row(&row).expect("sorted finite row");
    }
    m
}
