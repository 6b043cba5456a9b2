//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's numerical code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense SVD by one-sided (Hestenes) Jacobi rotations.
pub struct DenseSvd {
    /// Descending singular values, length min(m, n).
    pub sigma: Vec<f64>,
    /// m × r left singular vectors, column j in `u[j]`.
    pub u: Vec<Vec<f64>>,
    /// n × r right singular vectors, column j in `v[j]`.
    pub v: Vec<Vec<f64>>,
}

/// `a` is row-major m × n.
pub fn jacobi_svd(m: usize, n: usize, a: &[f64]) -> DenseSvd {
    if m < n {
        let mut t = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                t[j * m + i] = a[i * n + j];
            }
        }
        let svd = jacobi_svd(n, m, &t);
        return DenseSvd {
            sigma: svd.sigma,
            u: svd.v,
            v: svd.u,
        };
    }
    // columns of A and accumulated rotations V (n × n), stored by column
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a[i * n + j]).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (cols[p][i], cols[q][i]);
                    cols[p][i] = c * x - s * y;
                    cols[q][i] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[p][i], v[q][i]);
                    v[p][i] = c * x - s * y;
                    v[q][i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let u = order
        .iter()
        .map(|&j| {
            let s = norms[j];
            cols[j].iter().map(|x| if s > 0.0 { x / s } else { 0.0 }).collect()
        })
        .collect();
    let v = order.iter().map(|&j| v[j].clone()).collect();
    DenseSvd { sigma, u, v }
}

/// Row-major random matrix; `density` < 1 zeroes entries at random.
pub fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize, density: f64) -> Vec<f64> {
    (0..m * n)
        .map(|_| {
            if rng.random::<f64>() < density {
                rng.random_range(-1.0..1.0)
            } else {
                0.0
            }
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Knee by explicit point-to-line distance over every index (1-based).
pub fn brute_force_elbow(curve: &[f64]) -> usize {
    let n = curve.len();
    let (x1, y1, x2, y2) = (1.0, curve[0], n as f64, curve[n - 1]);
    let len = ((y2 - y1).powi(2) + (x2 - x1).powi(2)).sqrt();
    let mut best = (0.0, 1);
    for (i, &y) in curve.iter().enumerate() {
        let x = (i + 1) as f64;
        let d = ((y2 - y1) * x - (x2 - x1) * y + x2 * y1 - y2 * x1).abs() / len;
        if d > best.0 {
            best = (d, i + 1);
        }
    }
    best.1
}

/// Confusion counts by direct tally: counts[t][p].
pub fn tally(truths: &[usize], preds: &[usize]) -> [[u64; 4]; 4] {
    let mut counts = [[0u64; 4]; 4];
    for i in 0..truths.len() {
        counts[truths[i]][preds[i]] += 1;
    }
    counts
}

/// Per-class precision, recall, F1, accuracy by walking every pair.
pub fn brute_force_class_metrics(truths: &[usize], preds: &[usize], class: usize) -> [f64; 4] {
    let (mut tp, mut fp, mut fn_, mut tn) = (0.0, 0.0, 0.0, 0.0);
    for (&t, &p) in truths.iter().zip(preds) {
        match (t == class, p == class) {
            (true, true) => tp += 1.0,
            (false, true) => fp += 1.0,
            (true, false) => fn_ += 1.0,
            (false, false) => tn += 1.0,
        }
    }
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let precision = div(tp, tp + fp);
    let recall = div(tp, tp + fn_);
    let f1 = div(2.0 * precision * recall, precision + recall);
    [precision, recall, f1, div(tp + tn, tp + tn + fp + fn_)]
}
