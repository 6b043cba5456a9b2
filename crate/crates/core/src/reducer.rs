//! Truncated SVD of the document × term matrix and elbow rank selection.
//!
//! The factorization is a seeded randomized range finder (Gaussian sketch,
//! oversampling, QR-stabilized subspace iteration) followed by an exact SVD
//! of the small projected matrix. Subspace iteration runs at least
//! `power_iterations` times and continues until every retained Ritz triplet
//! has residual `|A v - s u| <= tolerance * s_max`, or `max_power_iterations`
//! is reached.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvdConfig {
    pub oversampling: usize,
    pub power_iterations: usize,
    pub max_power_iterations: usize,
    pub tolerance: f64,
}

impl Default for SvdConfig {
    fn default() -> Self {
        Self {
            oversampling: 10,
            power_iterations: 4,
            max_power_iterations: 200,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvdModel {
    /// V × k, row-major; row t is the right-singular-vector coordinates of term t.
    term_embeddings: Vec<f64>,
    singular_values: Vec<f64>,
    explained_variance_ratio: Vec<f64>,
    n_terms: usize,
    k: usize,
}

impl SvdModel {
    pub fn from_parts(
        n_terms: usize,
        term_embeddings: Vec<f64>,
        singular_values: Vec<f64>,
        explained_variance_ratio: Vec<f64>,
    ) -> Result<Self> {
        let k = singular_values.len();
        if term_embeddings.len() != n_terms * k {
            return Err(Error::DimensionMismatch {
                expected: n_terms * k,
                actual: term_embeddings.len(),
            });
        }
        if explained_variance_ratio.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: explained_variance_ratio.len(),
            });
        }
        if singular_values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidMatrix(
                "singular values must be non-increasing".into(),
            ));
        }
        Ok(Self {
            term_embeddings,
            singular_values,
            explained_variance_ratio,
            n_terms,
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn explained_variance_ratio(&self) -> &[f64] {
        &self.explained_variance_ratio
    }

    pub fn term_embeddings(&self) -> &[f64] {
        &self.term_embeddings
    }

    pub fn term_row(&self, term: usize) -> &[f64] {
        &self.term_embeddings[term * self.k..(term + 1) * self.k]
    }

    /// Running sum of the explained variance ratios.
    pub fn cumulative_explained_variance(&self) -> Vec<f64> {
        self.explained_variance_ratio
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect()
    }

    /// Keeps the leading `k` components.
    pub fn truncate(&self, k: usize) -> SvdModel {
        let k = k.min(self.k);
        let mut term_embeddings = Vec::with_capacity(self.n_terms * k);
        for t in 0..self.n_terms {
            term_embeddings.extend_from_slice(&self.term_row(t)[..k]);
        }
        SvdModel {
            term_embeddings,
            singular_values: self.singular_values[..k].to_vec(),
            explained_variance_ratio: self.explained_variance_ratio[..k].to_vec(),
            n_terms: self.n_terms,
            k,
        }
    }

    /// Maps a term-space vector to latent coordinates (`x V`). For a row of
    /// the fitting matrix this is the matching row of `U Σ`.
    pub fn project(&self, vec: &SparseVector) -> Result<Vec<f64>> {
        if vec.dim() != self.n_terms {
            return Err(Error::DimensionMismatch {
                expected: self.n_terms,
                actual: vec.dim(),
            });
        }
        let mut out = vec![0.0; self.k];
        for (t, x) in vec.iter() {
            for (o, e) in out.iter_mut().zip(self.term_row(t)) {
                *o += x * e;
            }
        }
        Ok(out)
    }
}

fn orthonormal_basis(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

fn sparse_times(a: &CsrMatrix, dense: &DMatrix<f64>) -> DMatrix<f64> {
    let width = dense.ncols();
    let out = a.mul_dense(dense.as_slice(), width);
    DMatrix::from_column_slice(a.n_rows(), width, &out)
}

struct Ritz {
    singular_values: Vec<f64>,
    /// n × l right singular vectors.
    v: DMatrix<f64>,
    /// m × l left singular vectors.
    u: DMatrix<f64>,
}

fn rayleigh_ritz(at: &CsrMatrix, q: &DMatrix<f64>) -> Ritz {
    // B^T = A^T Q, n × l
    let bt = sparse_times(at, q);
    let svd = bt.svd(true, true);
    // B^T = W S Z^T  =>  B = Z S W^T, so right vectors of B are W, left are Q Z.
    let w = svd.u.expect("requested");
    let z = svd.v_t.expect("requested").transpose();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let singular_values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let v = w.select_columns(order.iter());
    let u = q * z.select_columns(order.iter());
    Ritz {
        singular_values,
        v,
        u,
    }
}

fn max_residual(a: &CsrMatrix, ritz: &Ritz, k: usize) -> f64 {
    let vk = ritz.v.columns(0, k).into_owned();
    let av = sparse_times(a, &vk);
    (0..k)
        .map(|j| (av.column(j) - ritz.u.column(j) * ritz.singular_values[j]).norm())
        .fold(0.0, f64::max)
}

/// Rank-`k_max` truncated SVD of `matrix` (documents × terms).
pub fn fit_svd(matrix: &CsrMatrix, k_max: usize, seed: u64) -> Result<SvdModel> {
    fit_svd_with(matrix, k_max, seed, &SvdConfig::default())
}

pub fn fit_svd_with(matrix: &CsrMatrix, k_max: usize, seed: u64, config: &SvdConfig) -> Result<SvdModel> {
    let (m, n) = (matrix.n_rows(), matrix.n_cols());
    if m == 0 || n == 0 {
        return Err(Error::InvalidMatrix(format!("matrix is {m} x {n}")));
    }
    let max = m.min(n) - 1;
    if k_max == 0 || k_max > max {
        return Err(Error::RankOutOfRange { k_max, max });
    }

    let l = (k_max + config.oversampling).min(m.min(n));
    let at = matrix.transpose();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(n, l, |_, _| StandardNormal.sample(&mut rng));

    let mut q = orthonormal_basis(sparse_times(matrix, &omega));
    let mut iteration = 0;
    let ritz = loop {
        if iteration >= config.power_iterations {
            let ritz = rayleigh_ritz(&at, &q);
            let scale = ritz.singular_values.first().copied().unwrap_or(0.0);
            if iteration >= config.max_power_iterations
                || max_residual(matrix, &ritz, k_max) <= config.tolerance * scale
            {
                break ritz;
            }
        }
        let z = orthonormal_basis(sparse_times(&at, &q));
        q = orthonormal_basis(sparse_times(matrix, &z));
        iteration += 1;
    };

    let total = matrix.frobenius_norm_sq();
    let singular_values: Vec<f64> = ritz.singular_values[..k_max].to_vec();
    let explained_variance_ratio = singular_values
        .iter()
        .map(|s| if total > 0.0 { s * s / total } else { 0.0 })
        .collect();

    let mut term_embeddings = vec![0.0; n * k_max];
    for j in 0..k_max {
        let col = ritz.v.column(j);
        // fix the sign so the largest-magnitude coordinate is positive
        let pivot = col.iter().fold(0.0_f64, |best, &x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for t in 0..n {
            term_embeddings[t * k_max + j] = sign * col[t];
        }
    }

    SvdModel::from_parts(n, term_embeddings, singular_values, explained_variance_ratio)
}

/// Knee of a non-decreasing curve: the 1-based index with the largest
/// perpendicular distance to the chord joining the first and last points.
/// Near-ties (within a relative 1e-12) resolve to the smallest index.
pub fn elbow(curve: &[f64]) -> Result<usize> {
    let n = curve.len();
    if n < 3 {
        return Err(Error::InvalidCurve(format!("need at least 3 points, got {n}")));
    }
    if let Some(bad) = curve.iter().position(|y| !y.is_finite() || *y < -1e-9 || *y > 1.0 + 1e-9) {
        return Err(Error::InvalidCurve(format!(
            "value {} at index {} is outside [0, 1]",
            curve[bad],
            bad + 1
        )));
    }
    if let Some(bad) = curve.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::InvalidCurve(format!(
            "curve decreases at index {}",
            bad + 2
        )));
    }

    // Perpendicular distance is |deviation| / |chord|; the denominator is
    // shared by every point, so compare the unnormalized deviations.
    let (y0, rise) = (curve[0], curve[n - 1] - curve[0]);
    let run = (n - 1) as f64;
    let deviation: Vec<f64> = curve
        .iter()
        .enumerate()
        .map(|(i, y)| ((y - y0) * run - rise * i as f64).abs())
        .collect();
    let best = deviation.iter().copied().fold(0.0, f64::max);
    let slack = 1e-12 * (rise.abs() * run + curve.iter().map(|y| y.abs()).fold(0.0, f64::max) * run);
    if best <= slack {
        return Ok(1);
    }
    let k = deviation
        .iter()
        .position(|&d| d >= best - slack)
        .expect("maximum is attained");
    Ok(k + 1)
}

/// Elbow of the cumulative explained-variance curve, or `k` itself when the
/// model has fewer than three components.
pub fn elbow_rank(model: &SvdModel) -> Result<usize> {
    if model.k() < 3 {
        return Ok(model.k());
    }
    elbow(&model.cumulative_explained_variance())
}
