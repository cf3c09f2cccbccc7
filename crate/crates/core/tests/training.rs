mod support;

use std::time::Instant;

use zoorank_core::evaluation::{confusion_matrix, overall_metrics};
use zoorank_core::nn::{predict, train, TrainStatus};
use zoorank_core::zoo::instantiate;
use zoorank_core::{HyperparameterConfig, OptimizerKind, Template};

fn mlp(epochs: u32, optimizer: OptimizerKind, learning_rate: f64, seed: u64) -> HyperparameterConfig {
    HyperparameterConfig { template: Template::Mlp, layers: 1, epochs, batch_size: 16, optimizer, learning_rate, seed }
}

#[test]
fn separable_blobs_are_learned() {
    let split = support::blob_split(3);
    assert_eq!((split.train.len(), split.test.len()), (200, 100));
    let started = Instant::now();
    let config = mlp(50, OptimizerKind::Adam, 1e-3, 0);
    let mut model = instantiate::<f32>(&config, split.input_shape(), 2).unwrap();
    let report = train(&mut model, &split, &config, &mut |_| {}).unwrap();
    let (pred, _) = predict(&mut model, &split.test.features).unwrap();
    let cm = confusion_matrix(&pred, &split.test.labels, &split.test.class_names).unwrap();
    let acc = overall_metrics(&cm).accuracy;
    assert_eq!(report.status, TrainStatus::Completed);
    assert_eq!(report.loss_curve.len(), 50);
    assert!(report.loss_curve[49] < report.loss_curve[0]);
    assert!(acc >= 0.95, "test accuracy {acc}");
    assert!(started.elapsed().as_secs_f64() < 30.0);
}

#[test]
fn every_optimizer_reduces_the_loss() {
    let split = support::blob_split(4);
    for (opt, lr) in [(OptimizerKind::Sgd, 0.05), (OptimizerKind::Momentum, 0.01), (OptimizerKind::Adam, 0.005)] {
        let config = mlp(5, opt, lr, 1);
        let mut model = instantiate::<f32>(&config, split.input_shape(), 2).unwrap();
        let report = train(&mut model, &split, &config, &mut |_| {}).unwrap();
        assert!(report.loss_curve[4] < report.loss_curve[0], "{opt}: {:?}", report.loss_curve);
    }
}

#[test]
fn training_is_reproducible() {
    let split = support::blob_split(5);
    let config = mlp(3, OptimizerKind::Momentum, 0.01, 77);
    let run = || {
        let mut model = instantiate::<f32>(&config, split.input_shape(), 2).unwrap();
        let mut epochs = Vec::new();
        let report = train(&mut model, &split, &config, &mut |p| epochs.push(p.epoch)).unwrap();
        assert_eq!(epochs, [0, 1, 2]);
        (report.loss_curve, model.params().iter().map(|p| p.data().to_vec()).collect::<Vec<_>>())
    };
    assert_eq!(run(), run());
}

#[test]
fn exploding_learning_rate_is_reported_as_divergence() {
    let split = support::blob_split(6);
    // The engine itself accepts rates far outside the search domain.
    let mut model = instantiate::<f32>(&mlp(20, OptimizerKind::Sgd, 0.1, 0), split.input_shape(), 2).unwrap();
    let config = mlp(20, OptimizerKind::Sgd, 1e30, 0);
    let report = train(&mut model, &split, &config, &mut |_| {}).unwrap();
    assert_eq!(report.status, TrainStatus::Diverged);
    assert!(report.loss_curve.len() < 20);
    assert!(report.loss_curve.iter().all(|l| l.is_finite()));
}

#[test]
fn convolutional_templates_train_on_images() {
    // Two classes of 8x8 images: bright top half versus bright bottom half.
    use zoorank_core::{dataset, LabeledDataset, Tensor};
    let n = 64;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let class = i % 2;
        for _c in 0..3 {
            for y in 0..8 {
                for x in 0..8 {
                    let lit = (y < 4) == (class == 0);
                    data.push(if lit { 1.0 } else { 0.0 } + 0.1 * ((i * 7 + y * 3 + x) % 5) as f32);
                }
            }
        }
        labels.push(class);
    }
    let ds = LabeledDataset::new(
        "halves",
        Tensor::new(vec![n, 3, 8, 8], data).unwrap(),
        labels,
        vec!["top".into(), "bottom".into()],
    )
    .unwrap();
    let split = dataset::normalize(dataset::stratified_split(&ds, 0.25, 0).unwrap());
    for template in [Template::MiniCnn, Template::MiniVgg, Template::MiniDeep] {
        let config = HyperparameterConfig {
            template,
            layers: 1,
            epochs: 10,
            batch_size: 16,
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-2,
            seed: 2,
        };
        let mut model = instantiate::<f32>(&config, split.input_shape(), 2).unwrap();
        train(&mut model, &split, &config, &mut |_| {}).unwrap();
        let (pred, _) = predict(&mut model, &split.test.features).unwrap();
        let correct = pred.iter().zip(&split.test.labels).filter(|(p, t)| p == t).count();
        assert_eq!(correct, split.test.len(), "{template}");
    }
}
