//! Confusion matrices, one-vs-rest class metrics and the FNC weighted score.

use crate::corpus::Stance;
use crate::error::{Error, Result};

const N: usize = Stance::COUNT;

/// Rows are true stances, columns predicted stances, both in [`Stance::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[u64; N]; N],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn get(&self, truth: Stance, predicted: Stance) -> u64 {
        self.counts[truth.index()][predicted.index()]
    }

    pub fn trace(&self) -> u64 {
        (0..N).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_total(&self, truth: Stance) -> u64 {
        self.counts[truth.index()].iter().sum()
    }

    pub fn column_total(&self, predicted: Stance) -> u64 {
        self.counts.iter().map(|row| row[predicted.index()]).sum()
    }

    /// One-vs-rest reduction for `class`.
    pub fn one_vs_rest(&self, class: Stance) -> BinaryCounts {
        let c = class.index();
        let tp = self.counts[c][c];
        let fp = self.column_total(class) - tp;
        let fn_ = self.row_total(class) - tp;
        BinaryCounts {
            tp,
            fp,
            fn_,
            tn: self.total() - tp - fp - fn_,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn harmonic_f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Binary accuracy of the one-vs-rest reduction.
    pub accuracy: f64,
}

impl ClassMetrics {
    pub fn from_counts(c: BinaryCounts) -> Self {
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        Self {
            precision,
            recall,
            f1: harmonic_f1(precision, recall),
            accuracy: ratio(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn_),
        }
    }
}

pub fn confusion(truths: &[Stance], preds: &[Stance]) -> Result<ConfusionMatrix> {
    if truths.len() != preds.len() {
        return Err(Error::LengthMismatch {
            left: truths.len(),
            right: preds.len(),
        });
    }
    if truths.is_empty() {
        return Err(Error::EmptyConfusion);
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in truths.iter().zip(preds) {
        cm.counts[t.index()][p.index()] += 1;
    }
    Ok(cm)
}

pub fn class_metrics(cm: &ConfusionMatrix, class: Stance) -> ClassMetrics {
    ClassMetrics::from_counts(cm.one_vs_rest(class))
}

pub fn overall_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    match cm.total() {
        0 => Err(Error::EmptyConfusion),
        total => Ok(cm.trace() as f64 / total as f64),
    }
}

/// Precision, recall and F1 aggregated across classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Averaged {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Micro averaging pools the one-vs-rest counts; for single-label
/// multiclass data it equals overall accuracy.
pub fn micro_average(cm: &ConfusionMatrix) -> Averaged {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for class in Stance::ALL {
        let c = cm.one_vs_rest(class);
        tp += c.tp;
        fp += c.fp;
        fn_ += c.fn_;
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    Averaged {
        precision,
        recall,
        f1: harmonic_f1(precision, recall),
    }
}

/// Unweighted mean of the per-class metrics.
pub fn macro_average(cm: &ConfusionMatrix) -> Averaged {
    let per: Vec<ClassMetrics> = Stance::ALL.iter().map(|&c| class_metrics(cm, c)).collect();
    let mean = |f: fn(&ClassMetrics) -> f64| per.iter().map(f).sum::<f64>() / N as f64;
    Averaged {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FncScore {
    pub points: f64,
    pub max_points: f64,
    pub relative: f64,
}

/// FNC-1 weighted score: 0.25 for an exact label match, 0.50 more when that
/// label is related, and 0.25 whenever both labels are related.
pub fn fnc_score(truths: &[Stance], preds: &[Stance]) -> Result<FncScore> {
    if truths.len() != preds.len() {
        return Err(Error::LengthMismatch {
            left: truths.len(),
            right: preds.len(),
        });
    }
    if truths.is_empty() {
        return Err(Error::EmptyConfusion);
    }
    let pair_points = |t: Stance, p: Stance| {
        let mut points = 0.0;
        if t == p {
            points += 0.25;
            if t.is_related() {
                points += 0.50;
            }
        }
        if t.is_related() && p.is_related() {
            points += 0.25;
        }
        points
    };
    let points: f64 = truths.iter().zip(preds).map(|(&t, &p)| pair_points(t, p)).sum();
    let max_points: f64 = truths.iter().map(|&t| pair_points(t, t)).sum();
    Ok(FncScore {
        points,
        max_points,
        relative: if max_points > 0.0 { points / max_points } else { 0.0 },
    })
}
