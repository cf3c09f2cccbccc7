//! Independent oracles and fixtures shared by integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use zoorank_core::dataset::{stratified_split, DatasetSplit};
use zoorank_core::evaluation::{ClassMetrics, OverallMetrics};
use zoorank_core::nn::{Layer, OptimizerKind};
use zoorank_core::progress::ProgressSink;
use zoorank_core::recommender::{rank_runs, Evaluator, RunOutcome};
use zoorank_core::results::{quantize, DatasetInfo, Recommendation, ResultsFile, FORMAT_VERSION};
use zoorank_core::zoo::{IntRange, LogRange, Scale};
use zoorank_core::{
    HyperparameterConfig, LabeledDataset, Metric, RunRecord, RunStatus, Scope, SearchSpace, Template, Tensor,
};

// ---------------------------------------------------------------------------
// Finite differences

pub const FD_STEP: f64 = 1e-5;
/// Denominator floor of the relative error, so that near-zero gradients are
/// compared absolutely.
pub const FD_FLOOR: f64 = 1e-6;

pub fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(FD_FLOOR)
}

fn weighted_sum(y: &Tensor<f64>, w: &[f64]) -> f64 {
    y.data().iter().zip(w).map(|(a, b)| a * b).sum()
}

/// Largest relative error between the analytic input and parameter gradients
/// of `f(x) = <w, layer(x)>` and central differences.
pub fn layer_gradient_error(layer: &mut Layer<f64>, x: &Tensor<f64>, w_seed: u64) -> f64 {
    let y = layer.forward(x.clone()).expect("forward");
    let mut rng = ChaCha8Rng::seed_from_u64(w_seed);
    let w: Vec<f64> = (0..y.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let g = Tensor::new(y.shape().to_vec(), w.clone()).unwrap();
    let (dx, dparams) = layer.backward(g, true).expect("backward");
    let dx = dx.expect("input gradient");

    let f = |layer: &mut Layer<f64>, x: &Tensor<f64>| weighted_sum(&layer.forward(x.clone()).unwrap(), &w);
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let mut xp = x.clone();
        xp.data_mut()[i] += FD_STEP;
        let mut xm = x.clone();
        xm.data_mut()[i] -= FD_STEP;
        let numeric = (f(layer, &xp) - f(layer, &xm)) / (2.0 * FD_STEP);
        worst = worst.max(rel_error(dx.data()[i], numeric));
    }
    for (j, grad) in dparams.iter().enumerate() {
        for e in 0..grad.len() {
            let original = layer.params()[j].data()[e];
            layer.params_mut()[j].data_mut()[e] = original + FD_STEP;
            let fp = f(layer, x);
            layer.params_mut()[j].data_mut()[e] = original - FD_STEP;
            let fm = f(layer, x);
            layer.params_mut()[j].data_mut()[e] = original;
            worst = worst.max(rel_error(grad.data()[e], (fp - fm) / (2.0 * FD_STEP)));
        }
    }
    worst
}

/// Uniform values in `[-1, 1]` whose magnitude is at least `margin`, so that
/// relu kinks are further than the finite-difference step from any input.
pub fn tensor_away_from_zero(shape: &[usize], margin: f64, rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let m = rng.random_range(margin..1.0);
            if rng.random_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// A permutation of evenly spaced values, so that no pooling window holds
/// two values closer than `spacing`.
pub fn tensor_distinct(shape: &[usize], spacing: f64, rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let mut data: Vec<f64> = (0..n).map(|i| (i as f64 - n as f64 / 2.0) * spacing).collect();
    data.shuffle(rng);
    Tensor::new(shape.to_vec(), data).unwrap()
}

// ---------------------------------------------------------------------------
// Metrics by per-sample counting

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

fn div(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// One-vs-rest metrics of class `k`, counted sample by sample.
pub fn oracle_class_metrics(pred: &[usize], truth: &[usize], k: usize) -> OracleMetrics {
    let (mut tp, mut fp, mut tn, mut fnn) = (0, 0, 0, 0);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p == k, t == k) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fnn += 1,
        }
    }
    OracleMetrics {
        accuracy: div(tp + tn, pred.len()),
        precision: div(tp, tp + fp),
        sensitivity: div(tp, tp + fnn),
        specificity: div(tn, tn + fp),
    }
}

pub fn class_metrics_match(m: &ClassMetrics, o: &OracleMetrics) -> bool {
    m.accuracy == o.accuracy
        && m.precision == o.precision
        && m.sensitivity == o.sensitivity
        && m.specificity == o.specificity
}

// ---------------------------------------------------------------------------
// Gaussian blobs

/// `k` isotropic unit-variance blobs in `dim` dimensions with centres spaced
/// `separation` standard deviations apart along the first axis.
pub fn gaussian_blobs(per_class: usize, k: usize, dim: usize, separation: f64, seed: u64) -> LabeledDataset<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut features = Vec::with_capacity(per_class * k * dim);
    let mut labels = Vec::with_capacity(per_class * k);
    for i in 0..per_class * k {
        let class = i % k;
        for d in 0..dim {
            let centre = if d == 0 { separation * class as f64 } else { 0.0 };
            features.push((centre + normal.sample(&mut rng)) as f32);
        }
        labels.push(class);
    }
    let names = (0..k).map(|c| format!("blob{c}")).collect();
    LabeledDataset::new("blobs", Tensor::new(vec![per_class * k, dim], features).unwrap(), labels, names).unwrap()
}

/// 300 two-class blobs split 200 / 100 and standardized.
pub fn blob_split(seed: u64) -> DatasetSplit<f32> {
    let ds = gaussian_blobs(150, 2, 2, 4.0, seed);
    zoorank_core::dataset::normalize(stratified_split(&ds, 1.0 / 3.0, seed).unwrap())
}

// ---------------------------------------------------------------------------
// Lookup-table objective

pub const PLANTED: (Template, OptimizerKind, u32) = (Template::MiniVgg, OptimizerKind::Momentum, 64);

/// The 48-cell grid of templates, optimizers and batch sizes; depth, epochs
/// and learning rate are pinned.
pub fn table_space() -> SearchSpace {
    SearchSpace {
        layers: IntRange { min: 2, max: 2 },
        epochs: IntRange { min: 5, max: 5 },
        learning_rate: LogRange { min: 1e-3, max: 1e-3, scale: Scale::Log },
        ..SearchSpace::default()
    }
}

/// Each matching dimension of the planted optimum adds a fixed amount; a
/// small hash-based offset keeps every cell distinct.
pub fn table_value(c: &HyperparameterConfig) -> f64 {
    let t = Template::ALL.iter().position(|&x| x == c.template).unwrap();
    let o = OptimizerKind::ALL.iter().position(|&x| x == c.optimizer).unwrap();
    let b = [16, 32, 64, 128].iter().position(|&x| x == c.batch_size).unwrap();
    let cell = (t * 3 + o) * 4 + b;
    let offset = ((cell * 37 + 11) % 48) as f64 / 48.0 * 0.02;
    0.2 + 0.25 * f64::from(c.template == PLANTED.0)
        + 0.2 * f64::from(c.optimizer == PLANTED.1)
        + 0.15 * f64::from(c.batch_size == PLANTED.2)
        + offset
}

/// Brute-force argmax of [`table_value`] over the grid.
pub fn table_optimum() -> (HyperparameterConfig, f64) {
    zoorank_core::recommender::grid_configs(&table_space())
        .into_iter()
        .map(|c| {
            let v = table_value(&c);
            (c, v)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

pub struct TableObjective;

impl Evaluator for TableObjective {
    fn evaluate(&mut self, _: usize, c: &HyperparameterConfig, _: &mut dyn ProgressSink) -> RunOutcome {
        RunOutcome {
            status: RunStatus::Completed,
            parameter_count: 1,
            overall: OverallMetrics { accuracy: table_value(c), ..Default::default() },
            per_class: Vec::new(),
            loss_curve: vec![0.0; c.epochs as usize],
            wall_time_seconds: 0.0,
        }
    }
}

// ---------------------------------------------------------------------------
// Valid results documents

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    quantize(rng.random_range(0.0..=1.0))
}

/// A random document satisfying every invariant checked on load.
pub fn valid_results_file(seed: u64) -> ResultsFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(2..=5usize);
    let supports: Vec<u64> = (0..k).map(|_| rng.random_range(1..20)).collect();
    let test_size = supports.iter().sum::<u64>() as usize;
    let space = SearchSpace::default();
    let budget = rng.random_range(1..=8usize);
    let n_runs = rng.random_range(1..=budget);
    let mut runs: Vec<RunRecord> = (0..n_runs)
        .map(|i| {
            let mut config = space.sample(&mut rng);
            config.epochs = rng.random_range(1..=6);
            config.seed = seed.wrapping_add(i as u64);
            let failed = rng.random_bool(0.2);
            let (overall, per_class, loss_curve) = if failed {
                let done = rng.random_range(0..config.epochs as usize);
                (OverallMetrics::default(), Vec::new(), (0..done).map(|_| unit(&mut rng) * 3.0).map(quantize).collect())
            } else {
                let per_class: Vec<ClassMetrics> = (0..k)
                    .map(|j| ClassMetrics {
                        class_index: j,
                        accuracy: unit(&mut rng),
                        precision: unit(&mut rng),
                        sensitivity: unit(&mut rng),
                        specificity: unit(&mut rng),
                        support: supports[j],
                    })
                    .collect();
                let overall = OverallMetrics {
                    accuracy: unit(&mut rng),
                    macro_precision: unit(&mut rng),
                    macro_sensitivity: unit(&mut rng),
                    macro_specificity: unit(&mut rng),
                };
                let curve = (0..config.epochs).map(|_| quantize(rng.random_range(0.0..3.0))).collect();
                (overall, per_class, curve)
            };
            RunRecord {
                run_id: RunRecord::run_id_for(i),
                config,
                parameter_count: rng.random_range(1..1_000_000),
                status: if failed { RunStatus::Failed } else { RunStatus::Completed },
                overall,
                per_class,
                loss_curve,
                wall_time_seconds: quantize(rng.random_range(0.0..100.0)),
                rank: 0,
            }
        })
        .collect();
    let ranked: Vec<String> =
        rank_runs(&runs, Metric::Accuracy, Scope::Overall).unwrap().iter().map(|r| r.run.run_id.clone()).collect();
    for r in &mut runs {
        r.rank = ranked.iter().position(|id| *id == r.run_id).unwrap() + 1;
    }
    runs.sort_by_key(|r| r.rank);
    ResultsFile {
        format_version: FORMAT_VERSION.into(),
        dataset: DatasetInfo {
            name: format!("synthetic-{seed}"),
            num_classes: k,
            class_names: (0..k).map(|j| format!("class {j}")).collect(),
            input_shape: vec![rng.random_range(1..10)],
            train_size: rng.random_range(1..500),
            test_size,
        },
        space,
        strategy: zoorank_core::Strategy::ALL[rng.random_range(0..3)],
        budget,
        recommendation: Recommendation { best: ranked[0].clone(), ranked },
        runs,
    }
}

/// Ten single-field corruptions of a valid document, each of which must be
/// rejected on load. The document needs a completed run ranked first.
/// A named single-field edit of a valid results document.
pub type Corruption = (&'static str, fn(&mut serde_json::Value));

pub fn corruptions() -> Vec<Corruption> {
    vec![
        ("unsupported format_version", |v| v["format_version"] = "2".into()),
        ("unknown top-level key", |v| {
            v.as_object_mut().unwrap().insert("extra".into(), 1.into());
        }),
        ("missing run status", |v| {
            v["runs"][0].as_object_mut().unwrap().remove("status");
        }),
        ("per-class metric above 1", |v| v["runs"][0]["per_class"][0]["precision"] = 1.2.into()),
        ("dangling ranked run id", |v| v["recommendation"]["ranked"][0] = "run-9999".into()),
        ("best differs from first ranked", |v| v["recommendation"]["best"] = v["recommendation"]["ranked"][1].clone()),
        ("duplicate rank", |v| v["runs"][1]["rank"] = 1.into()),
        ("batch size outside domain", |v| v["runs"][0]["config"]["batch_size"] = 50.into()),
        ("class_names shorter than num_classes", |v| {
            v["dataset"]["class_names"].as_array_mut().unwrap().pop();
        }),
        ("negative overall accuracy", |v| v["runs"][0]["overall"]["accuracy"] = (-0.1).into()),
    ]
}

/// A small fixed document used by the corruption checks: two completed runs
/// on two classes.
pub fn two_run_file() -> ResultsFile {
    let class = |j: usize, acc: f64| ClassMetrics {
        class_index: j,
        accuracy: acc,
        precision: acc,
        sensitivity: acc,
        specificity: acc,
        support: 5,
    };
    let run = |i: usize, acc: f64| RunRecord {
        run_id: RunRecord::run_id_for(i),
        config: HyperparameterConfig {
            template: Template::Mlp,
            layers: 1 + i as u32,
            epochs: 2,
            batch_size: 32,
            optimizer: OptimizerKind::Adam,
            learning_rate: 0.001,
            seed: i as u64,
        },
        parameter_count: 100,
        status: RunStatus::Completed,
        overall: OverallMetrics { accuracy: acc, macro_precision: acc, macro_sensitivity: acc, macro_specificity: acc },
        per_class: vec![class(0, acc), class(1, acc)],
        loss_curve: vec![0.7, 0.5],
        wall_time_seconds: 0.0,
        rank: 1 + i,
    };
    ResultsFile {
        format_version: FORMAT_VERSION.into(),
        dataset: DatasetInfo {
            name: "pair".into(),
            num_classes: 2,
            class_names: vec!["a".into(), "b".into()],
            input_shape: vec![4],
            train_size: 40,
            test_size: 10,
        },
        space: SearchSpace::default(),
        strategy: zoorank_core::Strategy::Random,
        budget: 2,
        runs: vec![run(0, 0.9), run(1, 0.6)],
        recommendation: Recommendation { ranked: vec!["run-0001".into(), "run-0002".into()], best: "run-0001".into() },
    }
}
