mod common;

use common::rng;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use stance_core::neuralnet::{
    build, gradient_check, train, LayerSpec, NetworkModel, Optimizer, TrainConfig,
};
use stance_core::Stance;

fn random_small_network(gen: &mut ChaCha8Rng, seed: u64) -> NetworkModel {
    let input = gen.random_range(2..=6);
    let hidden = gen.random_range(1..=2);
    let mut layers: Vec<LayerSpec> = (0..hidden).map(|_| LayerSpec::relu(gen.random_range(2..=12))).collect();
    layers.push(LayerSpec::softmax(4));
    assert!(layers.iter().map(|l| l.units).sum::<usize>() <= 64);
    let mut model = build(input, &layers, seed).unwrap();
    // nonzero biases so every parameter group is exercised
    let biases: Vec<_> = model
        .biases()
        .iter()
        .map(|b| b.map(|_| gen.random_range(-0.1..0.1)))
        .collect();
    model = NetworkModel::from_parts(
        model.input_dim(),
        model.layers().to_vec(),
        model.weights().to_vec(),
        biases,
        seed,
    )
    .unwrap();
    model
}

#[test]
fn gradients_match_finite_differences() {
    let mut gen = rng(50);
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let model = random_small_network(&mut gen, seed);
        let x: Vec<f64> = (0..model.input_dim()).map(|_| gen.random_range(-1.0..1.0)).collect();
        let y = Stance::from_index(gen.random_range(0..4)).unwrap();
        let err = gradient_check(&model, &x, y).unwrap();
        assert!(err < 1e-5, "seed {seed}: {err}");
        worst = worst.max(err);
    }
    println!("worst gradient error over 50 networks: {worst:.3e}");
}

/// Four Gaussian blobs at the corners of a square; linearly separable.
pub fn four_clusters(seed: u64, per_class: usize) -> (Vec<Vec<f64>>, Vec<Stance>) {
    let mut gen = rng(seed);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let centers = [(3.0, 3.0), (-3.0, 3.0), (-3.0, -3.0), (3.0, -3.0)];
    let mut x = Vec::new();
    let mut y = Vec::new();
    for _ in 0..per_class {
        for (c, &(cx, cy)) in centers.iter().enumerate() {
            x.push(vec![cx + noise.sample(&mut gen), cy + noise.sample(&mut gen)]);
            y.push(Stance::from_index(c).unwrap());
        }
    }
    (x, y)
}

#[test]
fn learns_separable_clusters() {
    let (x, y) = four_clusters(4, 100);
    let model = build(2, &[LayerSpec::relu(32), LayerSpec::relu(16), LayerSpec::softmax(4)], 1).unwrap();
    let cfg = TrainConfig {
        batch_size: 32,
        epochs: 200,
        seed: 2,
        ..TrainConfig::default()
    };
    let (trained, history) = train(model, &x, &y, &cfg).unwrap();
    assert_eq!(history.epochs.len(), 200);
    let correct = x
        .iter()
        .zip(&y)
        .filter(|(xi, yi)| trained.predict(xi).unwrap() == **yi)
        .count();
    let accuracy = correct as f64 / x.len() as f64;
    assert!(accuracy >= 0.99, "{accuracy}");
    assert!(history.epochs.iter().all(|e| (0.0..=1.0).contains(&e.categorical_accuracy)));
}

#[test]
fn training_is_deterministic() {
    let (x, y) = four_clusters(9, 20);
    let model = build(2, &[LayerSpec::relu(8), LayerSpec::softmax(4)], 3).unwrap();
    let cfg = TrainConfig {
        batch_size: 16,
        epochs: 5,
        seed: 11,
        ..TrainConfig::default()
    };
    let a = train(model.clone(), &x, &y, &cfg).unwrap();
    let b = train(model, &x, &y, &cfg).unwrap();
    assert_eq!(a, b);
}

fn relu_pattern(model: &NetworkModel, x: &[Vec<f64>]) -> Vec<bool> {
    let hidden = model.layers().len() - 1;
    x.iter()
        .flat_map(|xi| {
            let acts = model.activations(xi).unwrap();
            acts[..hidden].iter().flatten().map(|a| *a > 0.0).collect::<Vec<_>>()
        })
        .collect()
}

#[test]
fn small_steps_do_not_increase_loss() {
    let mut checked = 0;
    for seed in 0..10 {
        let (x, y) = four_clusters(100 + seed, 8);
        let mut model = build(2, &[LayerSpec::relu(6), LayerSpec::softmax(4)], seed).unwrap();
        let cfg = TrainConfig {
            batch_size: x.len(),
            epochs: 1,
            learning_rate: 1e-4,
            optimizer: Optimizer::Sgd,
            seed,
            ..TrainConfig::default()
        };
        let pattern = relu_pattern(&model, &x);
        let mut losses = Vec::new();
        for _ in 0..21 {
            let (next, history) = train(model, &x, &y, &cfg).unwrap();
            losses.push(history.epochs[0].loss);
            model = next;
        }
        if relu_pattern(&model, &x) != pattern {
            continue;
        }
        checked += 1;
        for w in losses.windows(2) {
            assert!(w[1] <= w[0], "seed {seed}: {losses:?}");
        }
    }
    assert!(checked >= 5, "only {checked} smooth regions");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn softmax_sums_to_one(seed in 0u64..1000, x in prop::collection::vec(-50.0f64..50.0, 5)) {
        let model = build(5, &[LayerSpec::relu(7), LayerSpec::relu(3), LayerSpec::softmax(4)], seed).unwrap();
        let p = model.forward(&x).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn prediction_survives_monotone_logit_maps(
        seed in 0u64..1000,
        x in prop::collection::vec(-3.0f64..3.0, 4),
        scale in 0.01f64..20.0,
        shift in -10.0f64..10.0,
    ) {
        let model = build(4, &[LayerSpec::relu(6), LayerSpec::softmax(4)], seed).unwrap();
        // logits -> scale * logits + shift, applied through the output layer
        let mut weights = model.weights().to_vec();
        let mut biases = model.biases().to_vec();
        weights[1] *= scale;
        biases[1] = biases[1].map(|b| scale * b + shift);
        let mapped = NetworkModel::from_parts(4, model.layers().to_vec(), weights, biases, seed).unwrap();
        prop_assert_eq!(model.predict(&x).unwrap(), mapped.predict(&x).unwrap());
    }
}
