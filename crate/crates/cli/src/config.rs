//! Flat `key = value` run configuration. Keys mirror the long CLI flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use stance_core::neuralnet::{default_layers, default_transfer_head, Optimizer};
use stance_core::{FeatureMode, LayerSpec, TrainConfig};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
}

impl From<&TrainConfig> for Schedule {
    fn from(cfg: &TrainConfig) -> Self {
        Self {
            batch_size: cfg.batch_size,
            epochs: cfg.epochs,
            learning_rate: cfg.learning_rate,
            optimizer: cfg.optimizer,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub bodies: Option<PathBuf>,
    pub stances: Option<PathBuf>,
    pub bundle: Option<PathBuf>,
    pub k_max: usize,
    pub pilot_cap: usize,
    /// Fixed retained rank; bypasses the elbow when set.
    pub rank: Option<usize>,
    pub svd_power_iterations: usize,
    pub svd_max_power_iterations: usize,
    pub svd_tolerance: f64,
    pub feature_mode: FeatureMode,
    pub layers: Vec<LayerSpec>,
    pub transfer: bool,
    pub transfer_head: Vec<LayerSpec>,
    pub stage1: Schedule,
    pub stage2: Schedule,
    pub class_weights: bool,
    pub early_stop: Option<usize>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            bodies: None,
            stances: None,
            bundle: None,
            k_max: 5000,
            pilot_cap: 1024,
            rank: None,
            svd_power_iterations: 4,
            svd_max_power_iterations: 200,
            svd_tolerance: 1e-10,
            feature_mode: FeatureMode::default(),
            layers: default_layers(),
            transfer: true,
            transfer_head: default_transfer_head(),
            stage1: Schedule::from(&TrainConfig::default()),
            stage2: Schedule::from(&TrainConfig::fine_tune()),
            class_weights: false,
            early_stop: None,
            seed: 0,
        }
    }
}

/// Every accepted key, in archive order.
pub const KEYS: &[&str] = &[
    "bodies",
    "stances",
    "bundle",
    "k-max",
    "pilot-cap",
    "rank",
    "svd-power-iterations",
    "svd-max-power-iterations",
    "svd-tolerance",
    "feature-mode",
    "layers",
    "transfer",
    "transfer-head",
    "batch-size",
    "epochs",
    "learning-rate",
    "optimizer",
    "fine-tune-batch-size",
    "fine-tune-epochs",
    "fine-tune-learning-rate",
    "fine-tune-optimizer",
    "class-weights",
    "early-stop",
    "seed",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| CliError::config(format!("invalid value `{value}` for `{key}`")))
}

fn positive(key: &str, value: &str) -> Result<usize> {
    match parse::<usize>(key, value)? {
        0 => Err(CliError::config(format!("`{key}` must be positive"))),
        n => Ok(n),
    }
}

fn positive_real(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse(key, value)?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::config(format!("`{key}` must be a positive real")))
    }
}

fn optional<T>(key: &str, value: &str, f: impl Fn(&str, &str) -> Result<T>) -> Result<Option<T>> {
    if value == "none" {
        Ok(None)
    } else {
        f(key, value).map(Some)
    }
}

fn path(_key: &str, value: &str) -> Result<PathBuf> {
    Ok(PathBuf::from(value))
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(CliError::config(format!("invalid value `{value}` for `{key}`"))),
    }
}

fn layers(key: &str, value: &str) -> Result<Vec<LayerSpec>> {
    value
        .split(',')
        .map(|s| s.trim().parse::<LayerSpec>().map_err(|e| CliError::config(format!("`{key}`: {e}"))))
        .collect()
}

fn join_layers(layers: &[LayerSpec]) -> String {
    layers.iter().map(LayerSpec::to_string).collect::<Vec<_>>().join(",")
}

fn show_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), T::to_string)
}

impl PipelineConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "bodies" => self.bodies = optional(key, value, path)?,
            "stances" => self.stances = optional(key, value, path)?,
            "bundle" => self.bundle = optional(key, value, path)?,
            "k-max" => self.k_max = positive(key, value)?,
            "pilot-cap" => self.pilot_cap = positive(key, value)?,
            "rank" => self.rank = optional(key, value, positive)?,
            "svd-power-iterations" => self.svd_power_iterations = parse(key, value)?,
            "svd-max-power-iterations" => self.svd_max_power_iterations = parse(key, value)?,
            "svd-tolerance" => self.svd_tolerance = positive_real(key, value)?,
            "feature-mode" => {
                self.feature_mode = value.parse().map_err(|e| CliError::config(format!("`{key}`: {e}")))?
            }
            "layers" => self.layers = layers(key, value)?,
            "transfer" => self.transfer = boolean(key, value)?,
            "transfer-head" => self.transfer_head = layers(key, value)?,
            "batch-size" => self.stage1.batch_size = positive(key, value)?,
            "epochs" => self.stage1.epochs = positive(key, value)?,
            "learning-rate" => self.stage1.learning_rate = positive_real(key, value)?,
            "optimizer" => self.stage1.optimizer = parse(key, value)?,
            "fine-tune-batch-size" => self.stage2.batch_size = positive(key, value)?,
            "fine-tune-epochs" => self.stage2.epochs = positive(key, value)?,
            "fine-tune-learning-rate" => self.stage2.learning_rate = positive_real(key, value)?,
            "fine-tune-optimizer" => self.stage2.optimizer = parse(key, value)?,
            "class-weights" => self.class_weights = boolean(key, value)?,
            "early-stop" => self.early_stop = optional(key, value, positive)?,
            "seed" => self.seed = parse(key, value)?,
            other => return Err(CliError::config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or_else(|| "none".into(), |p| p.display().to_string());
        Some(match key {
            "bodies" => path(&self.bodies),
            "stances" => path(&self.stances),
            "bundle" => path(&self.bundle),
            "k-max" => self.k_max.to_string(),
            "pilot-cap" => self.pilot_cap.to_string(),
            "rank" => show_opt(&self.rank),
            "svd-power-iterations" => self.svd_power_iterations.to_string(),
            "svd-max-power-iterations" => self.svd_max_power_iterations.to_string(),
            "svd-tolerance" => self.svd_tolerance.to_string(),
            "feature-mode" => self.feature_mode.to_string(),
            "layers" => join_layers(&self.layers),
            "transfer" => self.transfer.to_string(),
            "transfer-head" => join_layers(&self.transfer_head),
            "batch-size" => self.stage1.batch_size.to_string(),
            "epochs" => self.stage1.epochs.to_string(),
            "learning-rate" => self.stage1.learning_rate.to_string(),
            "optimizer" => self.stage1.optimizer.as_str().to_string(),
            "fine-tune-batch-size" => self.stage2.batch_size.to_string(),
            "fine-tune-epochs" => self.stage2.epochs.to_string(),
            "fine-tune-learning-rate" => self.stage2.learning_rate.to_string(),
            "fine-tune-optimizer" => self.stage2.optimizer.as_str().to_string(),
            "class-weights" => self.class_weights.to_string(),
            "early-stop" => show_opt(&self.early_stop),
            "seed" => self.seed.to_string(),
            _ => return None,
        })
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| CliError::config(format!("line {}: {}", n + 1, e.message)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(crate::error::Stage::Config, path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Effective settings in [`KEYS`] order. The bundle path is left out so
    /// that the archive does not depend on where it was written.
    pub fn archived_entries(&self) -> Vec<(&'static str, String)> {
        KEYS.iter()
            .filter(|k| **k != "bundle")
            .map(|k| (*k, self.get(k).expect("known key")))
            .collect()
    }

    pub fn to_text(&self) -> String {
        self.archived_entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn stage1_train_config(&self, labels: &[stance_core::Stance]) -> TrainConfig {
        self.train_config(&self.stage1, labels, self.seed.wrapping_add(2))
    }

    pub fn stage2_train_config(&self, labels: &[stance_core::Stance]) -> TrainConfig {
        self.train_config(&self.stage2, labels, self.seed.wrapping_add(4))
    }

    fn train_config(&self, s: &Schedule, labels: &[stance_core::Stance], seed: u64) -> TrainConfig {
        TrainConfig {
            batch_size: s.batch_size,
            epochs: s.epochs,
            learning_rate: s.learning_rate,
            optimizer: s.optimizer,
            seed,
            class_weights: self
                .class_weights
                .then(|| stance_core::neuralnet::inverse_frequency_weights(labels)),
            early_stop: self.early_stop,
        }
    }
}
