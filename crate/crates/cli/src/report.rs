//! Evaluation report: a `key = value` file for machines and a table for people.

use std::fmt::Write as _;

use stance_core::metrics::{
    class_metrics, confusion, fnc_score, macro_average, micro_average, overall_accuracy, Averaged, ClassMetrics,
    ConfusionMatrix, FncScore,
};
use stance_core::Stance;

use crate::error::{AtStage, CliError, Result, Stage};

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub per_class: [ClassMetrics; 4],
    pub micro: Averaged,
    pub macro_avg: Averaged,
    pub fnc: FncScore,
}

impl Report {
    pub fn from_predictions(truths: &[Stance], preds: &[Stance]) -> Result<Self> {
        let cm = confusion(truths, preds).at(Stage::Evaluate)?;
        Self::from_confusion(cm)
    }

    /// Every figure in the report is a function of the confusion matrix.
    pub fn from_confusion(cm: ConfusionMatrix) -> Result<Self> {
        let mut truths = Vec::new();
        let mut preds = Vec::new();
        for t in Stance::ALL {
            for p in Stance::ALL {
                let n = cm.get(t, p) as usize;
                truths.extend(std::iter::repeat_n(t, n));
                preds.extend(std::iter::repeat_n(p, n));
            }
        }
        Ok(Self {
            accuracy: overall_accuracy(&cm).at(Stage::Evaluate)?,
            per_class: Stance::ALL.map(|c| class_metrics(&cm, c)),
            micro: micro_average(&cm),
            macro_avg: macro_average(&cm),
            fnc: fnc_score(&truths, &preds).at(Stage::Evaluate)?,
            confusion: cm,
        })
    }

    pub fn pairs(&self) -> u64 {
        self.confusion.total()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
        kv("pairs", self.pairs().to_string());
        kv("accuracy", self.accuracy.to_string());
        for (class, m) in Stance::ALL.iter().zip(&self.per_class) {
            kv(&format!("{class}.precision"), m.precision.to_string());
            kv(&format!("{class}.recall"), m.recall.to_string());
            kv(&format!("{class}.f1"), m.f1.to_string());
            kv(&format!("{class}.one_vs_rest_accuracy"), m.accuracy.to_string());
        }
        for (name, avg) in [("micro", &self.micro), ("macro", &self.macro_avg)] {
            kv(&format!("{name}.precision"), avg.precision.to_string());
            kv(&format!("{name}.recall"), avg.recall.to_string());
            kv(&format!("{name}.f1"), avg.f1.to_string());
        }
        kv("fnc.points", self.fnc.points.to_string());
        kv("fnc.max_points", self.fnc.max_points.to_string());
        kv("fnc.relative", self.fnc.relative.to_string());
        for t in Stance::ALL {
            let row: Vec<String> = Stance::ALL.iter().map(|&p| self.confusion.get(t, p).to_string()).collect();
            kv(&format!("confusion.{t}"), row.join(" "));
        }
        out
    }

    /// Rebuilds a report from [`Report::to_text`] output. Derived figures
    /// are recomputed from the confusion rows and must agree with the file.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cm = ConfusionMatrix::default();
        let mut seen = [false; 4];
        for line in text.lines() {
            let Some((key, value)) = line.split_once(" = ") else {
                return Err(CliError::corrupt(format!("report line `{line}` is not `key = value`")));
            };
            if let Some(name) = key.strip_prefix("confusion.") {
                let t: Stance = name.parse().map_err(|_| CliError::corrupt(format!("report key `{key}`")))?;
                let counts: Vec<u64> = value
                    .split(' ')
                    .map(|c| c.parse().map_err(|_| CliError::corrupt(format!("report row `{line}`"))))
                    .collect::<Result<_>>()?;
                if counts.len() != 4 {
                    return Err(CliError::corrupt(format!("report row `{line}`")));
                }
                cm.counts[t.index()].copy_from_slice(&counts);
                seen[t.index()] = true;
            }
        }
        if seen.contains(&false) {
            return Err(CliError::corrupt("report is missing confusion rows"));
        }
        let report = Self::from_confusion(cm)?;
        if report.to_text() != text {
            return Err(CliError::corrupt("report figures disagree with its confusion matrix"));
        }
        Ok(report)
    }

    /// Human-readable layout: per-stance table, averages, confusion, FNC score.
    pub fn render_table(&self) -> String {
        let pct = |v: f64| format!("{:.2}", 100.0 * v);
        let mut out = String::new();
        writeln!(out, "pairs evaluated: {}", self.pairs()).unwrap();
        writeln!(out, "overall accuracy: {}%", pct(self.accuracy)).unwrap();
        writeln!(out).unwrap();
        writeln!(
            out,
            "{:<10} {:>22} {:>10} {:>10} {:>10}",
            "stance", "one-vs-rest accuracy", "precision", "recall", "f-score"
        )
        .unwrap();
        for (class, m) in Stance::ALL.iter().zip(&self.per_class) {
            writeln!(
                out,
                "{:<10} {:>22} {:>10} {:>10} {:>10}",
                class.as_str(),
                pct(m.accuracy),
                pct(m.precision),
                pct(m.recall),
                pct(m.f1)
            )
            .unwrap();
        }
        for (name, avg) in [("micro avg", &self.micro), ("macro avg", &self.macro_avg)] {
            writeln!(
                out,
                "{:<10} {:>22} {:>10} {:>10} {:>10}",
                name,
                "",
                pct(avg.precision),
                pct(avg.recall),
                pct(avg.f1)
            )
            .unwrap();
        }
        writeln!(out).unwrap();
        writeln!(out, "confusion (rows = truth, columns = predicted)").unwrap();
        write!(out, "{:<10}", "").unwrap();
        for p in Stance::ALL {
            write!(out, " {:>10}", p.as_str()).unwrap();
        }
        writeln!(out).unwrap();
        for t in Stance::ALL {
            write!(out, "{:<10}", t.as_str()).unwrap();
            for p in Stance::ALL {
                write!(out, " {:>10}", self.confusion.get(t, p)).unwrap();
            }
            writeln!(out).unwrap();
        }
        writeln!(out).unwrap();
        writeln!(
            out,
            "FNC score: {} / {} ({}%)",
            self.fnc.points,
            self.fnc.max_points,
            pct(self.fnc.relative)
        )
        .unwrap();
        out
    }
}
