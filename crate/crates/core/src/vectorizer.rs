//! TF-IDF weighting over a shared headline/body vocabulary.
//!
//! Weights are raw term counts times the smoothed inverse document frequency
//! `ln((1 + N) / (1 + df)) + 1`, and every transformed document is scaled to
//! unit L2 norm.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, SparseVector};

#[derive(Debug, Clone, PartialEq)]
pub struct VectorizerModel {
    vocabulary: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<u64>,
    n_docs: u64,
    idf: Vec<f64>,
}

pub fn smoothed_idf(n_docs: u64, doc_freq: u64) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + doc_freq as f64)).ln() + 1.0
}

impl VectorizerModel {
    /// Rebuilds a model from its persisted parts. `vocabulary` is in column order.
    pub fn from_parts(vocabulary: Vec<String>, doc_freq: Vec<u64>, n_docs: u64) -> Result<Self> {
        if vocabulary.len() != doc_freq.len() {
            return Err(Error::DimensionMismatch {
                expected: vocabulary.len(),
                actual: doc_freq.len(),
            });
        }
        if n_docs == 0 || doc_freq.iter().any(|&df| df == 0 || df > n_docs) {
            return Err(Error::InvalidMatrix(
                "document frequencies must lie in 1..=n_docs".into(),
            ));
        }
        let index: HashMap<String, usize> = vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        if index.len() != vocabulary.len() {
            return Err(Error::InvalidMatrix("vocabulary has repeated terms".into()));
        }
        let idf = doc_freq.iter().map(|&df| smoothed_idf(n_docs, df)).collect();
        Ok(Self {
            vocabulary,
            index,
            doc_freq,
            n_docs,
            idf,
        })
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self) -> &[u64] {
        &self.doc_freq
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    /// count × idf per in-vocabulary term, before normalization.
    pub fn weights<S: AsRef<str>>(&self, doc: &[S]) -> SparseVector {
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        for token in doc {
            if let Some(&i) = self.index.get(token.as_ref()) {
                *counts.entry(i).or_default() += 1;
            }
        }
        let entries = counts
            .into_iter()
            .map(|(i, count)| (i, count as f64 * self.idf[i]))
            .collect();
        SparseVector::from_entries(self.dim(), entries).expect("indices come from the vocabulary")
    }

    pub fn transform<S: AsRef<str>>(&self, doc: &[S]) -> SparseVector {
        let weights = self.weights(doc);
        let norm = weights.norm();
        if norm == 0.0 {
            weights
        } else {
            weights.scale(1.0 / norm)
        }
    }

    /// Transforms each document into one row of a doc × term matrix.
    pub fn transform_all<S: AsRef<str> + Sync>(&self, docs: &[Vec<S>]) -> CsrMatrix {
        let rows: Vec<SparseVector> = docs.par_iter().map(|d| self.transform(d)).collect();
        CsrMatrix::from_rows(self.dim(), &rows).expect("rows share the model dimension")
    }
}

/// Learns the vocabulary (sorted lexicographically) and document frequencies.
pub fn fit<S: AsRef<str>>(corpus: &[Vec<S>]) -> Result<VectorizerModel> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut doc_freq: BTreeMap<&str, u64> = BTreeMap::new();
    for doc in corpus {
        let mut seen: Vec<&str> = doc.iter().map(AsRef::as_ref).collect();
        seen.sort_unstable();
        seen.dedup();
        for term in seen {
            *doc_freq.entry(term).or_default() += 1;
        }
    }
    let (vocabulary, doc_freq): (Vec<String>, Vec<u64>) = doc_freq
        .into_iter()
        .map(|(term, df)| (term.to_string(), df))
        .unzip();
    VectorizerModel::from_parts(vocabulary, doc_freq, corpus.len() as u64)
}
