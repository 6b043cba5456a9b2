//! Dense feedforward stance classifier.
//!
//! Layers are fully connected with ReLU hidden activations and a 4-way
//! softmax output. Training minimizes mean categorical cross-entropy with
//! minibatch backpropagation (Adam or plain SGD). A trained network can seed
//! a deeper one through [`transfer`], which copies every pre-softmax layer
//! and appends freshly initialized layers.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Stance;
use crate::error::{Error, Result};

pub const N_CLASSES: usize = Stance::COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Softmax,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Softmax => "softmax",
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "softmax" => Ok(Activation::Softmax),
            other => Err(Error::Architecture(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub units: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub const fn relu(units: usize) -> Self {
        Self {
            units,
            activation: Activation::Relu,
        }
    }

    pub const fn softmax(units: usize) -> Self {
        Self {
            units,
            activation: Activation::Softmax,
        }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.units, self.activation.as_str())
    }
}

impl FromStr for LayerSpec {
    type Err = Error;

    /// Parses `units:activation`, e.g. `1024:relu`.
    fn from_str(s: &str) -> Result<Self> {
        let (units, activation) = s
            .split_once(':')
            .ok_or_else(|| Error::Architecture(format!("layer `{s}` is not units:activation")))?;
        let units = units
            .trim()
            .parse()
            .map_err(|_| Error::Architecture(format!("bad unit count in `{s}`")))?;
        Ok(Self {
            units,
            activation: activation.trim().parse()?,
        })
    }
}

/// The first-stage architecture: 1024 relu, 128 relu, 4 softmax.
pub fn default_layers() -> Vec<LayerSpec> {
    vec![
        LayerSpec::relu(1024),
        LayerSpec::relu(128),
        LayerSpec::softmax(N_CLASSES),
    ]
}

/// Layers appended by [`transfer`] by default.
pub fn default_transfer_head() -> Vec<LayerSpec> {
    vec![LayerSpec::relu(128), LayerSpec::softmax(N_CLASSES)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    input_dim: usize,
    layers: Vec<LayerSpec>,
    /// Layer i maps dim(i-1) -> units(i); stored as (fan_in x fan_out).
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
    rng_seed: u64,
}

fn validate_layers(layers: &[LayerSpec]) -> Result<()> {
    let last = layers
        .last()
        .ok_or_else(|| Error::Architecture("network needs at least one layer".into()))?;
    if let Some(i) = layers.iter().position(|l| l.units == 0) {
        return Err(Error::Architecture(format!("layer {i} has zero units")));
    }
    if let Some(i) = layers[..layers.len() - 1]
        .iter()
        .position(|l| l.activation == Activation::Softmax)
    {
        return Err(Error::Architecture(format!(
            "softmax is only allowed on the output layer (found at layer {i})"
        )));
    }
    if last.activation != Activation::Softmax || last.units != N_CLASSES {
        return Err(Error::Architecture(format!(
            "output layer must be {N_CLASSES}:softmax, got {last}"
        )));
    }
    Ok(())
}

fn init_layer(rng: &mut ChaCha8Rng, fan_in: usize, spec: LayerSpec) -> (DMatrix<f64>, DVector<f64>) {
    let limit = match spec.activation {
        // He-uniform
        Activation::Relu => (6.0 / fan_in as f64).sqrt(),
        // Glorot-uniform
        Activation::Softmax => (6.0 / (fan_in + spec.units) as f64).sqrt(),
    };
    let weights = DMatrix::from_fn(fan_in, spec.units, |_, _| rng.random_range(-limit..limit));
    (weights, DVector::zeros(spec.units))
}

/// Initializes a network; deterministic given `seed`.
pub fn build(input_dim: usize, layers: &[LayerSpec], seed: u64) -> Result<NetworkModel> {
    if input_dim == 0 {
        return Err(Error::Architecture("input dimension must be positive".into()));
    }
    validate_layers(layers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fan_in = input_dim;
    let (mut weights, mut biases) = (Vec::new(), Vec::new());
    for &spec in layers {
        let (w, b) = init_layer(&mut rng, fan_in, spec);
        weights.push(w);
        biases.push(b);
        fan_in = spec.units;
    }
    Ok(NetworkModel {
        input_dim,
        layers: layers.to_vec(),
        weights,
        biases,
        rng_seed: seed,
    })
}

/// Per-parameter loss gradients, shaped like the model's weights and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

fn softmax_rows(z: &mut DMatrix<f64>) {
    for mut row in z.row_iter_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.iter_mut().for_each(|v| *v = (*v - max).exp());
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= sum);
    }
}

/// `ln softmax(z)[class]` for one row of logits.
fn log_softmax_at(z: &[f64], class: usize) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    z[class] - max - lse
}

impl NetworkModel {
    /// Reassembles a model from stored parameters, checking every shape.
    pub fn from_parts(
        input_dim: usize,
        layers: Vec<LayerSpec>,
        weights: Vec<DMatrix<f64>>,
        biases: Vec<DVector<f64>>,
        rng_seed: u64,
    ) -> Result<Self> {
        let model = Self {
            input_dim,
            layers,
            weights,
            biases,
            rng_seed,
        };
        model.check_shapes()?;
        Ok(model)
    }

    fn check_shapes(&self) -> Result<()> {
        validate_layers(&self.layers)?;
        if self.weights.len() != self.layers.len() || self.biases.len() != self.layers.len() {
            return Err(Error::Architecture(format!(
                "{} layers but {} weight and {} bias tensors",
                self.layers.len(),
                self.weights.len(),
                self.biases.len()
            )));
        }
        let mut fan_in = self.input_dim;
        for (i, spec) in self.layers.iter().enumerate() {
            let w = &self.weights[i];
            if w.shape() != (fan_in, spec.units) || self.biases[i].len() != spec.units {
                return Err(Error::Architecture(format!(
                    "layer {i}: expected {fan_in}x{} weights, found {}x{}",
                    spec.units,
                    w.nrows(),
                    w.ncols()
                )));
            }
            fan_in = spec.units;
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn weights(&self) -> &[DMatrix<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[DVector<f64>] {
        &self.biases
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    fn all_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Pre-activations and activations of every layer for a batch (rows = samples).
    /// The final activation holds softmax probabilities.
    fn forward_batch(&self, x: &DMatrix<f64>) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<DMatrix<f64>> = Vec::with_capacity(self.layers.len());
        for (i, spec) in self.layers.iter().enumerate() {
            let input = if i == 0 { x } else { &post[i - 1] };
            let mut z = input * &self.weights[i];
            let bias = self.biases[i].transpose();
            for mut row in z.row_iter_mut() {
                row += &bias;
            }
            let mut a = z.clone();
            match spec.activation {
                Activation::Relu => a.apply(|v| *v = v.max(0.0)),
                Activation::Softmax => softmax_rows(&mut a),
            }
            pre.push(z);
            post.push(a);
        }
        (pre, post)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input"));
        }
        Ok(())
    }

    /// Class probabilities in [`Stance::ALL`] order.
    pub fn forward(&self, x: &[f64]) -> Result<[f64; N_CLASSES]> {
        self.check_input(x)?;
        let batch = DMatrix::from_row_slice(1, self.input_dim, x);
        let (_, post) = self.forward_batch(&batch);
        let out = post.last().expect("at least one layer");
        let mut probs = [0.0; N_CLASSES];
        probs.iter_mut().zip(out.iter()).for_each(|(p, v)| *p = *v);
        Ok(probs)
    }

    /// Post-activation output of every layer for one input.
    pub fn activations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(x)?;
        let batch = DMatrix::from_row_slice(1, self.input_dim, x);
        let (_, post) = self.forward_batch(&batch);
        Ok(post.into_iter().map(|a| a.iter().copied().collect()).collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Stance> {
        Ok(argmax_stance(&self.forward(x)?))
    }

    /// Weighted mean cross-entropy of a batch and its gradients.
    fn loss_and_gradients(&self, x: &DMatrix<f64>, labels: &[usize], sample_weights: &[f64]) -> (f64, Gradients) {
        let n = x.nrows() as f64;
        let (pre, post) = self.forward_batch(x);
        let logits = pre.last().expect("at least one layer");
        let loss = labels
            .iter()
            .enumerate()
            .map(|(r, &y)| {
                let row: Vec<f64> = logits.row(r).iter().copied().collect();
                -sample_weights[r] * log_softmax_at(&row, y)
            })
            .sum::<f64>()
            / n;

        // dL/dz at the softmax layer: w_i (p_i - y_i) / n
        let mut delta = post.last().expect("at least one layer").clone();
        for (r, &y) in labels.iter().enumerate() {
            delta[(r, y)] -= 1.0;
            let scale = sample_weights[r] / n;
            delta.row_mut(r).iter_mut().for_each(|v| *v *= scale);
        }

        let depth = self.layers.len();
        let mut grad_w = vec![DMatrix::zeros(0, 0); depth];
        let mut grad_b = vec![DVector::zeros(0); depth];
        for i in (0..depth).rev() {
            let input = if i == 0 { x } else { &post[i - 1] };
            grad_w[i] = input.transpose() * &delta;
            grad_b[i] = delta.row_sum().transpose();
            if i > 0 {
                let mut back = &delta * self.weights[i].transpose();
                back.zip_apply(&pre[i - 1], |d, z| {
                    if z <= 0.0 {
                        *d = 0.0
                    }
                });
                delta = back;
            }
        }
        (
            loss,
            Gradients {
                weights: grad_w,
                biases: grad_b,
            },
        )
    }

    /// Cross-entropy of one labeled sample.
    pub fn loss(&self, x: &[f64], y: Stance) -> Result<f64> {
        self.check_input(x)?;
        let batch = DMatrix::from_row_slice(1, self.input_dim, x);
        Ok(self.loss_and_gradients(&batch, &[y.index()], &[1.0]).0)
    }

    /// Analytic loss gradients for one labeled sample.
    pub fn backprop(&self, x: &[f64], y: Stance) -> Result<Gradients> {
        self.check_input(x)?;
        let batch = DMatrix::from_row_slice(1, self.input_dim, x);
        Ok(self.loss_and_gradients(&batch, &[y.index()], &[1.0]).1)
    }

    fn parameter_mut(&mut self, index: usize) -> &mut f64 {
        let mut index = index;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            if index < w.len() {
                return &mut w.as_mut_slice()[index];
            }
            index -= w.len();
            if index < b.len() {
                return &mut b.as_mut_slice()[index];
            }
            index -= b.len();
        }
        panic!("parameter index out of range")
    }
}

/// Argmax over [`Stance::ALL`] order; exact ties go to the lowest index.
pub fn argmax_stance(probs: &[f64; N_CLASSES]) -> Stance {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    Stance::from_index(best).expect("index below N_CLASSES")
}

fn flatten(grads: &Gradients) -> Vec<f64> {
    grads
        .weights
        .iter()
        .zip(&grads.biases)
        .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
        .collect()
}

/// Gradients with magnitude below this are compared by absolute error.
pub const GRADIENT_ABS_FLOOR: f64 = 1e-4;
pub const GRADIENT_STEP: f64 = 1e-5;

/// Largest discrepancy between analytic gradients and central finite
/// differences over every parameter: relative error, or absolute error when
/// both values are below [`GRADIENT_ABS_FLOOR`].
pub fn gradient_check(model: &NetworkModel, x: &[f64], y: Stance) -> Result<f64> {
    gradient_check_with(model, x, y, |m, x, y| m.backprop(x, y))
}

/// [`gradient_check`] against an arbitrary analytic gradient routine.
pub fn gradient_check_with<F>(model: &NetworkModel, x: &[f64], y: Stance, analytic: F) -> Result<f64>
where
    F: Fn(&NetworkModel, &[f64], Stance) -> Result<Gradients>,
{
    let analytic = flatten(&analytic(model, x, y)?);
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for (index, &a) in analytic.iter().enumerate() {
        let original = *probe.parameter_mut(index);
        *probe.parameter_mut(index) = original + GRADIENT_STEP;
        let plus = probe.loss(x, y)?;
        *probe.parameter_mut(index) = original - GRADIENT_STEP;
        let minus = probe.loss(x, y)?;
        *probe.parameter_mut(index) = original;

        let numeric = (plus - minus) / (2.0 * GRADIENT_STEP);
        let scale = a.abs().max(numeric.abs());
        let err = if scale < GRADIENT_ABS_FLOOR {
            (a - numeric).abs()
        } else {
            (a - numeric).abs() / scale
        };
        worst = worst.max(err);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    Sgd,
    Adam,
}

impl Optimizer {
    pub fn as_str(self) -> &'static str {
        match self {
            Optimizer::Sgd => "sgd",
            Optimizer::Adam => "adam",
        }
    }
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::Adam),
            other => Err(Error::Architecture(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
    /// Per-class loss weights in [`Stance::ALL`] order.
    pub class_weights: Option<[f64; N_CLASSES]>,
    /// Stop after this many epochs without a lower training loss.
    pub early_stop: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 512,
            epochs: 80,
            learning_rate: 1e-3,
            optimizer: Optimizer::Adam,
            seed: 0,
            class_weights: None,
            early_stop: None,
        }
    }
}

impl TrainConfig {
    /// Fine-tuning schedule used after [`transfer`].
    pub fn fine_tune() -> Self {
        Self {
            epochs: 20,
            learning_rate: 1e-4,
            ..Self::default()
        }
    }
}

/// Weights proportional to `n / (classes * count)`; absent classes get 1.
pub fn inverse_frequency_weights(labels: &[Stance]) -> [f64; N_CLASSES] {
    let mut counts = [0usize; N_CLASSES];
    for s in labels {
        counts[s.index()] += 1;
    }
    let n = labels.len() as f64;
    let mut weights = [1.0; N_CLASSES];
    for (w, &c) in weights.iter_mut().zip(&counts) {
        if c > 0 {
            *w = n / (N_CLASSES as f64 * c as f64);
        }
    }
    weights
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub loss: f64,
    pub categorical_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-8;

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

fn apply_update(model: &mut NetworkModel, grads: &Gradients, cfg: &TrainConfig, adam: &mut AdamState) {
    let lr = cfg.learning_rate;
    let params = model
        .weights
        .iter_mut()
        .zip(model.biases.iter_mut())
        .flat_map(|(w, b)| w.as_mut_slice().iter_mut().chain(b.as_mut_slice().iter_mut()));
    let grads = grads
        .weights
        .iter()
        .zip(&grads.biases)
        .flat_map(|(w, b)| w.iter().chain(b.iter()));
    match cfg.optimizer {
        Optimizer::Sgd => {
            for (p, g) in params.zip(grads) {
                *p -= lr * g;
            }
        }
        Optimizer::Adam => {
            adam.step += 1;
            let c1 = 1.0 - ADAM_BETA1.powi(adam.step);
            let c2 = 1.0 - ADAM_BETA2.powi(adam.step);
            for (((p, g), m), v) in params.zip(grads).zip(adam.m.iter_mut()).zip(adam.v.iter_mut()) {
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
            }
        }
    }
}

/// Minibatch training; the data order is reshuffled every epoch from
/// `cfg.seed`. Deterministic given its inputs.
pub fn train(
    mut model: NetworkModel,
    features: &[Vec<f64>],
    labels: &[Stance],
    cfg: &TrainConfig,
) -> Result<(NetworkModel, TrainHistory)> {
    if features.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: features.len(),
        });
    }
    for row in features {
        if row.len() != model.input_dim {
            return Err(Error::DimensionMismatch {
                expected: model.input_dim,
                actual: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training features"));
        }
    }
    if cfg.batch_size == 0 || !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
        return Err(Error::Architecture(
            "batch size and learning rate must be positive".into(),
        ));
    }

    let class_weights = cfg.class_weights.unwrap_or([1.0; N_CLASSES]);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..features.len()).collect();
    let n_params = model.parameter_count();
    let mut adam = AdamState {
        m: vec![0.0; n_params],
        v: vec![0.0; n_params],
        step: 0,
    };
    let mut history = TrainHistory::default();
    let mut best_loss = f64::INFINITY;
    let mut stale = 0;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (batch_index, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut x = DMatrix::zeros(batch.len(), model.input_dim);
            for (r, &i) in batch.iter().enumerate() {
                x.set_row(r, &RowDVector::from_row_slice(&features[i]));
            }
            let ys: Vec<usize> = batch.iter().map(|&i| labels[i].index()).collect();
            let weights: Vec<f64> = ys.iter().map(|&y| class_weights[y]).collect();

            let (_, post) = model.forward_batch(&x);
            let probs = post.last().expect("at least one layer");
            for (r, &y) in ys.iter().enumerate() {
                let mut p = [0.0; N_CLASSES];
                p.iter_mut().zip(probs.row(r).iter()).for_each(|(d, s)| *d = *s);
                if argmax_stance(&p).index() == y {
                    correct += 1;
                }
            }

            let (loss, grads) = model.loss_and_gradients(&x, &ys, &weights);
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: batch_index,
                    loss,
                });
            }
            loss_sum += loss * batch.len() as f64;
            apply_update(&mut model, &grads, cfg, &mut adam);
            if !model.all_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: batch_index,
                    loss: f64::NAN,
                });
            }
        }
        let record = EpochRecord {
            loss: loss_sum / features.len() as f64,
            categorical_accuracy: correct as f64 / features.len() as f64,
        };
        history.epochs.push(record);

        if let Some(patience) = cfg.early_stop {
            if record.loss < best_loss {
                best_loss = record.loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }
    Ok((model, history))
}

/// Copies every pre-softmax layer of `trained` and appends freshly
/// initialized `extra` layers (which must end in the 4-way softmax).
pub fn transfer(trained: &NetworkModel, extra: &[LayerSpec], seed: u64) -> Result<NetworkModel> {
    trained.check_shapes()?;
    if trained.layers.len() < 2 {
        return Err(Error::Architecture(
            "source network has no hidden layers to transfer".into(),
        ));
    }
    let keep = trained.layers.len() - 1;
    let mut layers = trained.layers[..keep].to_vec();
    layers.extend_from_slice(extra);
    validate_layers(&layers)?;
    if extra.is_empty() {
        return Err(Error::Architecture("transfer head is empty".into()));
    }

    let mut weights = trained.weights[..keep].to_vec();
    let mut biases = trained.biases[..keep].to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fan_in = trained.layers[keep - 1].units;
    for &spec in extra {
        let (w, b) = init_layer(&mut rng, fan_in, spec);
        weights.push(w);
        biases.push(b);
        fan_in = spec.units;
    }
    NetworkModel::from_parts(trained.input_dim, layers, weights, biases, seed)
}
