//! Soft cosine similarity over an implicit term-similarity matrix.
//!
//! `S = E Eᵀ` where row `t` of `E` is the L2-normalized SVD embedding of term
//! `t` (zero rows stay zero). `S` is never formed: `uᵀ S v` is evaluated as
//! `(Eᵀ u) · (Eᵀ v)`, which costs O(nnz · k) per vector.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::reducer::SvdModel;
use crate::sparse::SparseVector;

/// Self-forms at or below this are treated as zero vectors.
pub const DEGENERATE_NORM_SQ: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct TermSimilarityMatrix {
    /// V × k, row-major, unit or zero rows.
    embeddings: Vec<f64>,
    n_terms: usize,
    k: usize,
}

impl TermSimilarityMatrix {
    /// Builds `S` from arbitrary term embeddings (V × k, row-major).
    pub fn from_embeddings(n_terms: usize, k: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != n_terms * k {
            return Err(Error::DimensionMismatch {
                expected: n_terms * k,
                actual: rows.len(),
            });
        }
        let mut embeddings = rows.to_vec();
        if k > 0 {
            for row in embeddings.chunks_mut(k) {
                let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    row.iter_mut().for_each(|x| *x /= norm);
                }
            }
        }
        Ok(Self {
            embeddings,
            n_terms,
            k,
        })
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    /// `Eᵀ u`: the vector's image in the normalized embedding space.
    pub fn embed(&self, u: &SparseVector) -> Result<Vec<f64>> {
        if u.dim() != self.n_terms {
            return Err(Error::DimensionMismatch {
                expected: self.n_terms,
                actual: u.dim(),
            });
        }
        let mut out = vec![0.0; self.k];
        for (t, x) in u.iter() {
            let row = &self.embeddings[t * self.k..(t + 1) * self.k];
            for (o, e) in out.iter_mut().zip(row) {
                *o += x * e;
            }
        }
        Ok(out)
    }

    /// Single entry `s_ij`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let a = &self.embeddings[i * self.k..(i + 1) * self.k];
        let b = &self.embeddings[j * self.k..(j + 1) * self.k];
        dot(a, b)
    }

    /// `uᵀ S v`.
    pub fn quadratic_form(&self, u: &SparseVector, v: &SparseVector) -> Result<f64> {
        Ok(dot(&self.embed(u)?, &self.embed(v)?))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn build_term_similarity(model: &SvdModel) -> TermSimilarityMatrix {
    TermSimilarityMatrix::from_embeddings(model.n_terms(), model.k(), model.term_embeddings())
        .expect("model embeddings are V x k")
}

/// Soft cosine from precomputed embeddings `Eᵀu`, `Eᵀv`.
pub fn soft_cosine_embedded(eu: &[f64], ev: &[f64]) -> f64 {
    let uu = dot(eu, eu);
    let vv = dot(ev, ev);
    if uu <= DEGENERATE_NORM_SQ || vv <= DEGENERATE_NORM_SQ {
        return 0.0;
    }
    (dot(eu, ev) / (uu.sqrt() * vv.sqrt())).clamp(-1.0, 1.0)
}

pub fn soft_cosine(u: &SparseVector, v: &SparseVector, sim: &TermSimilarityMatrix) -> Result<f64> {
    Ok(soft_cosine_embedded(&sim.embed(u)?, &sim.embed(v)?))
}

/// How a headline/body pair becomes a network input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureMode {
    ScmOnly,
    Concat,
    #[default]
    ConcatScm,
}

impl FeatureMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::ScmOnly => "scm_only",
            FeatureMode::Concat => "concat",
            FeatureMode::ConcatScm => "concat_scm",
        }
    }

    pub fn feature_len(self, k: usize) -> usize {
        match self {
            FeatureMode::ScmOnly => 1,
            FeatureMode::Concat => 2 * k,
            FeatureMode::ConcatScm => 2 * k + 1,
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scm_only" => Ok(FeatureMode::ScmOnly),
            "concat" => Ok(FeatureMode::Concat),
            "concat_scm" => Ok(FeatureMode::ConcatScm),
            other => Err(Error::UnknownFeatureMode(other.to_string())),
        }
    }
}

/// Network input for one headline/body pair of TF-IDF vectors.
pub fn pair_feature(
    model: &SvdModel,
    sim: &TermSimilarityMatrix,
    headline: &SparseVector,
    body: &SparseVector,
    mode: FeatureMode,
) -> Result<Vec<f64>> {
    let scm = || soft_cosine(headline, body, sim);
    Ok(match mode {
        FeatureMode::ScmOnly => vec![scm()?],
        FeatureMode::Concat => {
            let mut out = model.project(headline)?;
            out.extend(model.project(body)?);
            out
        }
        FeatureMode::ConcatScm => {
            let mut out = model.project(headline)?;
            out.extend(model.project(body)?);
            out.push(scm()?);
            out
        }
    })
}
