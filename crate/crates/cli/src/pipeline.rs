//! End-to-end commands: preprocess, fit, train, evaluate, predict, report.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use stance_core::corpus::{join_pairs, load_bodies, load_stances, StancePair};
use stance_core::neuralnet::{build, train, transfer, N_CLASSES};
use stance_core::reducer::{elbow_rank, fit_svd_with, SvdConfig};
use stance_core::similarity::{build_term_similarity, pair_feature, soft_cosine};
use stance_core::textprep::preprocess;
use stance_core::vectorizer::fit;
use stance_core::{
    FeatureMode, SparseVector, Stance, SvdModel, TermSimilarityMatrix, TrainHistory, VectorizerModel,
};

use crate::bundle::{Bundle, StageHistory};
use crate::config::PipelineConfig;
use crate::error::{AtStage, CliError, Code, Result, Stage};
use crate::report::Report;

fn required<'a>(value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| CliError::config(format!("`{key}` is required")))
}

pub fn load_pairs(bodies: &Path, stances: &Path, labeled: bool) -> Result<Vec<StancePair>> {
    let table = load_bodies(bodies).at(Stage::Load)?;
    let rows = load_stances(stances, labeled).at(Stage::Load)?;
    join_pairs(&rows, &table).at(Stage::Load)
}

/// Whether a stance file's header carries the `Stance` column.
pub fn has_stance_column(path: &Path) -> Result<bool> {
    use std::io::BufRead;
    let file = std::fs::File::open(path).map_err(|e| CliError::io(Stage::Load, path, e))?;
    let mut header = String::new();
    std::io::BufReader::new(file)
        .read_line(&mut header)
        .map_err(|e| CliError::io(Stage::Load, path, e))?;
    Ok(header.trim_end().ends_with(",Stance"))
}

/// Frozen text side of the pipeline: TF-IDF, latent space and term similarity.
pub struct Featurizer<'a> {
    vectorizer: &'a VectorizerModel,
    svd: &'a SvdModel,
    sim: TermSimilarityMatrix,
    mode: FeatureMode,
}

impl<'a> Featurizer<'a> {
    pub fn new(vectorizer: &'a VectorizerModel, svd: &'a SvdModel, mode: FeatureMode) -> Self {
        Self {
            vectorizer,
            svd,
            sim: build_term_similarity(svd),
            mode,
        }
    }

    pub fn vectorize(&self, text: &str) -> SparseVector {
        self.vectorizer.transform(&preprocess(text))
    }

    pub fn input_dim(&self) -> usize {
        self.mode.feature_len(self.svd.k())
    }

    pub fn feature(&self, headline: &SparseVector, body: &SparseVector) -> Result<Vec<f64>> {
        pair_feature(self.svd, &self.sim, headline, body, self.mode).at(Stage::Featurize)
    }

    pub fn soft_cosine(&self, headline: &SparseVector, body: &SparseVector) -> Result<f64> {
        soft_cosine(headline, body, &self.sim).at(Stage::Featurize)
    }

    /// Features in pair order; each distinct body is vectorized once.
    pub fn pairs(&self, pairs: &[StancePair]) -> Result<Vec<Vec<f64>>> {
        let mut unique: BTreeMap<u64, &str> = BTreeMap::new();
        for p in pairs {
            unique.entry(p.body_id).or_insert(&p.body_text);
        }
        let bodies: HashMap<u64, SparseVector> = unique
            .into_par_iter()
            .map(|(id, text)| (id, self.vectorize(text)))
            .collect();
        pairs
            .par_iter()
            .map(|p| self.feature(&self.vectorize(&p.headline), &bodies[&p.body_id]))
            .collect()
    }
}

/// Documents for the TF-IDF fit: each distinct body (by id) then each
/// distinct headline (by first appearance).
pub fn fitting_documents(pairs: &[StancePair]) -> Vec<&str> {
    let mut bodies: BTreeMap<u64, &str> = BTreeMap::new();
    let mut seen = HashSet::new();
    let mut headlines = Vec::new();
    for p in pairs {
        bodies.entry(p.body_id).or_insert(&p.body_text);
        if seen.insert(p.headline.as_str()) {
            headlines.push(p.headline.as_str());
        }
    }
    bodies.into_values().chain(headlines).collect()
}

pub struct TextModels {
    pub vectorizer: VectorizerModel,
    pub svd: SvdModel,
    pub pilot_rank: usize,
}

pub fn fit_text_models(pairs: &[StancePair], cfg: &PipelineConfig) -> Result<TextModels> {
    let docs: Vec<Vec<String>> = fitting_documents(pairs).into_par_iter().map(preprocess).collect();
    let vectorizer = fit(&docs).at(Stage::Vectorize)?;
    let matrix = vectorizer.transform_all(&docs);
    let max_rank = matrix.n_rows().min(matrix.n_cols()).saturating_sub(1);
    if max_rank == 0 {
        return Err(CliError::new(
            Code::Input,
            Stage::Reduce,
            format!(
                "{} documents over {} terms are too few for a latent space",
                matrix.n_rows(),
                matrix.n_cols()
            ),
        ));
    }
    let pilot_rank = match cfg.rank {
        Some(r) => r,
        None => cfg.k_max.min(cfg.pilot_cap).min(max_rank),
    };
    let svd_cfg = SvdConfig {
        power_iterations: cfg.svd_power_iterations,
        max_power_iterations: cfg.svd_max_power_iterations,
        tolerance: cfg.svd_tolerance,
        ..SvdConfig::default()
    };
    let pilot = fit_svd_with(&matrix, pilot_rank, cfg.seed, &svd_cfg).at(Stage::Reduce)?;
    let svd = match cfg.rank {
        Some(_) => pilot,
        None => {
            let k = elbow_rank(&pilot).at(Stage::Reduce)?;
            pilot.truncate(k)
        }
    };
    Ok(TextModels {
        vectorizer,
        svd,
        pilot_rank,
    })
}

fn labels_of(pairs: &[StancePair]) -> Result<Vec<Stance>> {
    pairs
        .iter()
        .map(|p| {
            p.stance
                .ok_or_else(|| CliError::new(Code::Input, Stage::Load, "training pairs must be labeled"))
        })
        .collect()
}

fn log_history(log: &mut dyn Write, stage: &str, history: &TrainHistory) {
    for (e, rec) in history.epochs.iter().enumerate() {
        let _ = writeln!(
            log,
            "{stage} epoch {:>3}: loss {:.6} categorical_accuracy {:.4}",
            e + 1,
            rec.loss,
            rec.categorical_accuracy
        );
    }
}

/// Writes tokenized pairs as `body_id<TAB>stance<TAB>headline tokens<TAB>body tokens`.
pub fn cmd_preprocess(bodies: &Path, stances: &Path, labeled: bool, out: &mut dyn Write) -> Result<usize> {
    let pairs = load_pairs(bodies, stances, labeled)?;
    let mut cache: HashMap<u64, String> = HashMap::new();
    for p in &pairs {
        let body = cache
            .entry(p.body_id)
            .or_insert_with(|| preprocess(&p.body_text).join(" "));
        let stance = p.stance.map_or("", Stance::as_str);
        writeln!(out, "{}\t{}\t{}\t{}", p.body_id, stance, preprocess(&p.headline).join(" "), body)
            .map_err(|e| CliError::new(Code::Io, Stage::Preprocess, e))?;
    }
    Ok(pairs.len())
}

/// Fits TF-IDF and the latent space only; the bundle has no network.
pub fn cmd_fit(cfg: &PipelineConfig, log: &mut dyn Write) -> Result<Bundle> {
    let (bodies, stances) = (required(&cfg.bodies, "bodies")?, required(&cfg.stances, "stances")?);
    let pairs = load_pairs(bodies, stances, has_stance_column(stances)?)?;
    let dir = required(&cfg.bundle, "bundle")?;
    let text = fit_text_models(&pairs, cfg)?;
    log_text_models(log, &text);
    let bundle = Bundle {
        config: cfg.clone(),
        vectorizer: text.vectorizer,
        svd: text.svd,
        pilot_rank: text.pilot_rank,
        network: None,
        history: Vec::new(),
        report: None,
    };
    bundle.save(dir)?;
    Ok(bundle)
}

fn log_text_models(log: &mut dyn Write, text: &TextModels) {
    let cumulative = text.svd.cumulative_explained_variance();
    let _ = writeln!(
        log,
        "vocabulary {} terms over {} documents; pilot rank {}; retained rank {} (explained variance {:.4})",
        text.vectorizer.dim(),
        text.vectorizer.n_docs(),
        text.pilot_rank,
        text.svd.k(),
        cumulative.last().copied().unwrap_or(0.0)
    );
}

pub fn cmd_train(cfg: &PipelineConfig, log: &mut dyn Write) -> Result<Bundle> {
    let pairs = load_pairs(required(&cfg.bodies, "bodies")?, required(&cfg.stances, "stances")?, true)?;
    let dir = required(&cfg.bundle, "bundle")?;
    let labels = labels_of(&pairs)?;
    let text = fit_text_models(&pairs, cfg)?;
    log_text_models(log, &text);

    let featurizer = Featurizer::new(&text.vectorizer, &text.svd, cfg.feature_mode);
    let features = featurizer.pairs(&pairs)?;

    let net = build(featurizer.input_dim(), &cfg.layers, cfg.seed.wrapping_add(1)).at(Stage::Train)?;
    let (net, first) = train(net, &features, &labels, &cfg.stage1_train_config(&labels)).at(Stage::Train)?;
    log_history(log, "stage1", &first);
    let mut history = vec![StageHistory {
        stage: "stage1".into(),
        history: first,
    }];

    let net = if cfg.transfer {
        let net = transfer(&net, &cfg.transfer_head, cfg.seed.wrapping_add(3)).at(Stage::Transfer)?;
        let (net, second) = train(net, &features, &labels, &cfg.stage2_train_config(&labels)).at(Stage::FineTune)?;
        log_history(log, "stage2", &second);
        history.push(StageHistory {
            stage: "stage2".into(),
            history: second,
        });
        net
    } else {
        net
    };

    let preds = features
        .par_iter()
        .map(|x| net.predict(x))
        .collect::<stance_core::Result<Vec<_>>>()
        .at(Stage::Evaluate)?;
    let report = Report::from_predictions(&labels, &preds)?;
    drop(featurizer);

    let bundle = Bundle {
        config: cfg.clone(),
        vectorizer: text.vectorizer,
        svd: text.svd,
        pilot_rank: text.pilot_rank,
        network: Some(net),
        history,
        report: Some(report),
    };
    bundle.save(dir)?;
    Ok(bundle)
}

pub struct Evaluation {
    pub pairs: Vec<StancePair>,
    pub predictions: Vec<Stance>,
    pub report: Report,
}

pub fn evaluate_pairs(bundle: &Bundle, pairs: Vec<StancePair>) -> Result<Evaluation> {
    let net = bundle.require_network()?;
    let labels = labels_of(&pairs)?;
    let featurizer = Featurizer::new(&bundle.vectorizer, &bundle.svd, bundle.config.feature_mode);
    let predictions = featurizer
        .pairs(&pairs)?
        .par_iter()
        .map(|x| net.predict(x))
        .collect::<stance_core::Result<Vec<_>>>()
        .at(Stage::Evaluate)?;
    let report = Report::from_predictions(&labels, &predictions)?;
    Ok(Evaluation {
        pairs,
        predictions,
        report,
    })
}

pub fn cmd_evaluate(bundle_dir: &Path, bodies: &Path, stances: &Path) -> Result<Evaluation> {
    let bundle = Bundle::load(bundle_dir)?;
    evaluate_pairs(&bundle, load_pairs(bodies, stances, true)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub stance: Stance,
    pub probabilities: [f64; N_CLASSES],
    pub scm: f64,
}

pub fn predict_pair(bundle: &Bundle, headline: &str, body: &str) -> Result<Prediction> {
    let net = bundle.require_network()?;
    let featurizer = Featurizer::new(&bundle.vectorizer, &bundle.svd, bundle.config.feature_mode);
    let (h, b) = (featurizer.vectorize(headline), featurizer.vectorize(body));
    let x = featurizer.feature(&h, &b)?;
    let probabilities = net.forward(&x).at(Stage::Predict)?;
    Ok(Prediction {
        stance: stance_core::neuralnet::argmax_stance(&probabilities),
        probabilities,
        scm: featurizer.soft_cosine(&h, &b)?,
    })
}

pub fn cmd_predict(bundle_dir: &Path, headline: &str, body: &str) -> Result<Prediction> {
    predict_pair(&Bundle::load(bundle_dir)?, headline, body)
}

/// Loads a bundle and returns its archived report.
pub fn cmd_report(bundle_dir: &Path) -> Result<(Bundle, Report)> {
    let bundle = Bundle::load(bundle_dir)?;
    let report = bundle
        .report
        .clone()
        .ok_or_else(|| CliError::new(Code::Model, Stage::Bundle, "bundle holds no report; run `train`"))?;
    Ok((bundle, report))
}
