//! On-disk artifact bundle: a directory with `manifest.txt`, binary arrays
//! and a few text files. The manifest pins the format version, the
//! effective configuration and a SHA-256 per file.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};
use stance_core::neuralnet::EpochRecord;
use stance_core::{LayerSpec, NetworkModel, SvdModel, TrainHistory, VectorizerModel};

use crate::artifact::Array;
use crate::config::PipelineConfig;
use crate::error::{CliError, Code, Result, Stage};
use crate::report::Report;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.txt";
const VOCAB: &str = "vocab.txt";
const EMBEDDINGS: &str = "svd_term_embeddings.bin";
const SINGULAR_VALUES: &str = "svd_singular_values.bin";
const EXPLAINED: &str = "svd_explained_variance.bin";
const HISTORY: &str = "history.txt";
const REPORT: &str = "report.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct StageHistory {
    pub stage: String,
    pub history: TrainHistory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub config: PipelineConfig,
    pub vectorizer: VectorizerModel,
    pub svd: SvdModel,
    /// Rank of the decomposition the elbow was read from.
    pub pilot_rank: usize,
    pub network: Option<NetworkModel>,
    pub history: Vec<StageHistory>,
    pub report: Option<Report>,
}

fn weights_file(i: usize) -> String {
    format!("net_layer{i}_weights.bin")
}

fn biases_file(i: usize) -> String {
    format!("net_layer{i}_biases.bin")
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn join_layers(layers: &[LayerSpec]) -> String {
    layers.iter().map(LayerSpec::to_string).collect::<Vec<_>>().join(",")
}

impl Bundle {
    /// Data files in write order, excluding the manifest.
    pub fn files(&self) -> Vec<(String, Vec<u8>)> {
        let mut files = Vec::new();
        let mut vocab = String::new();
        for (term, df) in self.vectorizer.vocabulary().iter().zip(self.vectorizer.doc_freq()) {
            writeln!(vocab, "{term}\t{df}").unwrap();
        }
        files.push((VOCAB.to_string(), vocab.into_bytes()));
        files.push((
            EMBEDDINGS.to_string(),
            Array::matrix(self.svd.n_terms(), self.svd.k(), self.svd.term_embeddings().to_vec()).encode(),
        ));
        files.push((
            SINGULAR_VALUES.to_string(),
            Array::vector(self.svd.singular_values().to_vec()).encode(),
        ));
        files.push((
            EXPLAINED.to_string(),
            Array::vector(self.svd.explained_variance_ratio().to_vec()).encode(),
        ));
        if let Some(net) = &self.network {
            for (i, (w, b)) in net.weights().iter().zip(net.biases()).enumerate() {
                let row_major = w.transpose().as_slice().to_vec();
                files.push((weights_file(i), Array::matrix(w.nrows(), w.ncols(), row_major).encode()));
                files.push((biases_file(i), Array::vector(b.as_slice().to_vec()).encode()));
            }
        }
        if !self.history.is_empty() {
            let mut text = String::from("stage\tepoch\tloss\tcategorical_accuracy\n");
            for stage in &self.history {
                for (e, rec) in stage.history.epochs.iter().enumerate() {
                    writeln!(text, "{}\t{}\t{}\t{}", stage.stage, e + 1, rec.loss, rec.categorical_accuracy).unwrap();
                }
            }
            files.push((HISTORY.to_string(), text.into_bytes()));
        }
        if let Some(report) = &self.report {
            files.push((REPORT.to_string(), report.to_text().into_bytes()));
        }
        files
    }

    pub fn manifest(&self, files: &[(String, Vec<u8>)]) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| writeln!(out, "{k} = {v}").unwrap();
        kv("format_version", &FORMAT_VERSION);
        kv("vectorizer.n_docs", &self.vectorizer.n_docs());
        kv("vectorizer.terms", &self.vectorizer.dim());
        kv("svd.pilot_rank", &self.pilot_rank);
        kv("svd.rank", &self.svd.k());
        if let Some(net) = &self.network {
            kv("network.input_dim", &net.input_dim());
            kv("network.layers", &join_layers(net.layers()));
            kv("network.seed", &net.rng_seed());
        }
        for (key, value) in self.config.archived_entries() {
            kv(&format!("config.{key}"), &value);
        }
        for (name, bytes) in files {
            kv(&format!("sha256.{name}"), &sha256_hex(bytes));
        }
        out
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(Stage::Bundle, dir, e))?;
        let files = self.files();
        for (name, bytes) in &files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| CliError::io(Stage::Bundle, &path, e))?;
        }
        let path = dir.join(MANIFEST);
        fs::write(&path, self.manifest(&files)).map_err(|e| CliError::io(Stage::Bundle, &path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest_path = dir.join(MANIFEST);
        let text = fs::read_to_string(&manifest_path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => CliError::corrupt(format!("{} is missing", manifest_path.display())),
            _ => CliError::io(Stage::Bundle, &manifest_path, e),
        })?;
        let manifest = Manifest::parse(&text)?;

        let version: u32 = manifest.value("format_version")?;
        if version != FORMAT_VERSION {
            return Err(CliError::new(
                Code::Version,
                Stage::Bundle,
                format!("bundle format {version} is not supported (expected {FORMAT_VERSION})"),
            ));
        }

        let mut files: HashMap<String, Vec<u8>> = HashMap::new();
        for (key, expected) in &manifest.entries {
            let Some(name) = key.strip_prefix("sha256.") else { continue };
            if name.contains(['/', '\\']) || name.starts_with('.') {
                return Err(CliError::corrupt(format!("manifest names an unsafe file `{name}`")));
            }
            let path = dir.join(name);
            let bytes = fs::read(&path).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => CliError::corrupt(format!("{name} is missing")),
                _ => CliError::io(Stage::Bundle, &path, e),
            })?;
            if sha256_hex(&bytes) != *expected {
                return Err(CliError::corrupt(format!("hash mismatch for {name}")));
            }
            files.insert(name.to_string(), bytes);
        }
        let file = |name: &str| {
            files
                .get(name)
                .ok_or_else(|| CliError::corrupt(format!("manifest does not list {name}")))
        };
        let array = |name: &str, rank: usize| -> Result<Array> {
            let a = Array::decode(file(name)?).map_err(|e| CliError::corrupt(format!("{name}: {e}")))?;
            a.expect_rank(rank).map_err(|e| CliError::corrupt(format!("{name}: {e}")))?;
            Ok(a)
        };
        let model_err = |what: &str, e: stance_core::Error| CliError::corrupt(format!("{what}: {e}"));

        let mut config = PipelineConfig {
            bundle: Some(dir.to_path_buf()),
            ..PipelineConfig::default()
        };
        for (key, value) in &manifest.entries {
            if let Some(k) = key.strip_prefix("config.") {
                config.set(k, value).map_err(|e| CliError::corrupt(format!("manifest {key}: {}", e.message)))?;
            }
        }

        let vocab_text = std::str::from_utf8(file(VOCAB)?).map_err(|_| CliError::corrupt("vocab.txt is not UTF-8"))?;
        let mut vocabulary = Vec::new();
        let mut doc_freq = Vec::new();
        for line in vocab_text.lines() {
            let (term, df) = line
                .split_once('\t')
                .ok_or_else(|| CliError::corrupt(format!("vocab line `{line}`")))?;
            vocabulary.push(term.to_string());
            doc_freq.push(df.parse().map_err(|_| CliError::corrupt(format!("vocab line `{line}`")))?);
        }
        let vectorizer = VectorizerModel::from_parts(vocabulary, doc_freq, manifest.value("vectorizer.n_docs")?)
            .map_err(|e| model_err("vectorizer", e))?;

        let emb = array(EMBEDDINGS, 2)?;
        let sv = array(SINGULAR_VALUES, 1)?;
        let evr = array(EXPLAINED, 1)?;
        let svd = SvdModel::from_parts(emb.dims[0] as usize, emb.data, sv.data, evr.data)
            .map_err(|e| model_err("svd", e))?;
        if svd.k() != emb.dims[1] as usize || svd.n_terms() != vectorizer.dim() {
            return Err(CliError::corrupt("svd shape does not match the vocabulary"));
        }

        let network = if manifest.get("network.layers").is_some() {
            let layers: Vec<LayerSpec> = manifest
                .get("network.layers")
                .unwrap()
                .split(',')
                .map(|s| s.parse().map_err(|e| model_err("network.layers", e)))
                .collect::<Result<_>>()?;
            let mut weights = Vec::new();
            let mut biases = Vec::new();
            for i in 0..layers.len() {
                let w = array(&weights_file(i), 2)?;
                weights.push(DMatrix::from_row_slice(w.dims[0] as usize, w.dims[1] as usize, &w.data));
                biases.push(DVector::from_vec(array(&biases_file(i), 1)?.data));
            }
            let net = NetworkModel::from_parts(
                manifest.value("network.input_dim")?,
                layers,
                weights,
                biases,
                manifest.value("network.seed")?,
            )
            .map_err(|e| model_err("network", e))?;
            Some(net)
        } else {
            None
        };

        let history = match files.get(HISTORY) {
            Some(bytes) => parse_history(bytes)?,
            None => Vec::new(),
        };
        let report = match files.get(REPORT) {
            Some(bytes) => Some(Report::parse(
                std::str::from_utf8(bytes).map_err(|_| CliError::corrupt("report.txt is not UTF-8"))?,
            )?),
            None => None,
        };

        Ok(Self {
            config,
            vectorizer,
            svd,
            pilot_rank: manifest.value("svd.pilot_rank")?,
            network,
            history,
            report,
        })
    }

    pub fn require_network(&self) -> Result<&NetworkModel> {
        self.network
            .as_ref()
            .ok_or_else(|| CliError::new(Code::Model, Stage::Bundle, "bundle holds no trained network; run `train`"))
    }
}

fn parse_history(bytes: &[u8]) -> Result<Vec<StageHistory>> {
    let bad = |line: &str| CliError::corrupt(format!("history line `{line}`"));
    let text = std::str::from_utf8(bytes).map_err(|_| CliError::corrupt("history.txt is not UTF-8"))?;
    let mut out: Vec<StageHistory> = Vec::new();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split('\t').collect();
        let [stage, _, loss, acc] = cols[..] else { return Err(bad(line)) };
        let record = EpochRecord {
            loss: loss.parse().map_err(|_| bad(line))?,
            categorical_accuracy: acc.parse().map_err(|_| bad(line))?,
        };
        match out.last_mut() {
            Some(last) if last.stage == stage => last.history.epochs.push(record),
            _ => out.push(StageHistory {
                stage: stage.to_string(),
                history: TrainHistory { epochs: vec![record] },
            }),
        }
    }
    Ok(out)
}

struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for line in text.lines() {
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| CliError::corrupt(format!("manifest line `{line}`")))?;
            if entries.iter().any(|(seen, _)| seen == k) {
                return Err(CliError::corrupt(format!("manifest repeats `{k}`")));
            }
            entries.push((k.to_string(), v.to_string()));
        }
        Ok(Self { entries })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn value<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let value = self
            .get(key)
            .ok_or_else(|| CliError::corrupt(format!("manifest lacks `{key}`")))?;
        value
            .parse()
            .map_err(|_| CliError::corrupt(format!("manifest `{key}` has bad value `{value}`")))
    }
}
