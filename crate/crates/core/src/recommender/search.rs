use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::acquisition::expected_improvement;
use super::encoding::encode_config;
use super::ranking::{rank_runs, Scope};
use super::surrogate::GaussianProcess;
use super::{SearchError, Strategy};
use crate::dataset::DatasetSplit;
use crate::evaluation::{confusion_matrix, overall_metrics, per_class_metrics, ClassMetrics, Metric, OverallMetrics};
use crate::nn::{predict, train, EpochProgress, OptimizerKind, TrainStatus};
use crate::progress::{ProgressEvent, ProgressSink};
use crate::results::{Recommendation, RunRecord, RunStatus};
use crate::scalar::Scalar;
use crate::zoo::{self, HyperparameterConfig, SearchSpace};

/// Proposals drawn at random before the surrogate is used.
pub const COLD_START: usize = 5;
/// Random candidates scored by expected improvement per proposal.
pub const CANDIDATE_COUNT: usize = 500;
/// Epoch count of grid points, clamped into the space.
pub const GRID_EPOCHS: u32 = 10;

/// One evaluated configuration as seen by the surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub config: HyperparameterConfig,
    pub objective: f64,
    pub failed: bool,
}

impl Observation {
    /// Objective fed to the surrogate: failed runs score 0.
    pub fn value(&self) -> f64 {
        if self.failed {
            0.0
        } else {
            self.objective
        }
    }
}

fn evaluated(history: &[Observation], c: &HyperparameterConfig) -> bool {
    history.iter().any(|o| o.config.same_point(c))
}

/// Next configuration to evaluate (with seed 0).
///
/// The first [`COLD_START`] proposals, and any proposal before a run has
/// succeeded, are uniform draws. Afterwards [`CANDIDATE_COUNT`] draws are
/// scored by expected improvement under a GP fitted to `history`; ties go to
/// the lexicographically smaller encoding. Already evaluated points are never
/// proposed: if every draw was one, the result is [`SearchError::Exhausted`].
pub fn propose_next<R: Rng + ?Sized>(
    space: &SearchSpace,
    history: &[Observation],
    rng: &mut R,
) -> Result<HyperparameterConfig, SearchError> {
    let problems = space.check();
    if !problems.is_empty() {
        return Err(SearchError::Validation(problems.join("; ")));
    }
    if history.len() < COLD_START || history.iter().all(|o| o.failed) {
        return (0..CANDIDATE_COUNT)
            .map(|_| space.sample(rng))
            .find(|c| !evaluated(history, c))
            .ok_or(SearchError::Exhausted);
    }
    let gp = GaussianProcess::fit(history)?;
    let best = history.iter().map(Observation::value).fold(f64::NEG_INFINITY, f64::max);
    let mut chosen: Option<(f64, super::EncodedPoint, HyperparameterConfig)> = None;
    for _ in 0..CANDIDATE_COUNT {
        let c = space.sample(rng);
        if evaluated(history, &c) {
            continue;
        }
        let x = encode_config(&c)?;
        let ei = expected_improvement(&gp, &x, best);
        let better = match &chosen {
            None => true,
            Some((best_ei, best_x, _)) => match ei.total_cmp(best_ei) {
                Ordering::Greater => true,
                Ordering::Equal => x.lex_cmp(best_x) == Ordering::Less,
                Ordering::Less => false,
            },
        };
        if better {
            chosen = Some((ei, x, c));
        }
    }
    chosen.map(|(_, _, c)| c).ok_or(SearchError::Exhausted)
}

fn grid_learning_rate(optimizer: OptimizerKind) -> f64 {
    match optimizer {
        OptimizerKind::Sgd | OptimizerKind::Momentum => 1e-2,
        OptimizerKind::Adam => 1e-3,
    }
}

/// Lattice over template, optimizer, batch size and depth, in that nesting
/// order, with [`GRID_EPOCHS`] epochs and a per-optimizer learning rate.
pub fn grid_configs(space: &SearchSpace) -> Vec<HyperparameterConfig> {
    let epochs = GRID_EPOCHS.clamp(space.epochs.min, space.epochs.max);
    let mut out = Vec::new();
    for &template in &space.templates {
        for &optimizer in &space.optimizers {
            let learning_rate = grid_learning_rate(optimizer).clamp(space.learning_rate.min, space.learning_rate.max);
            for &batch_size in &space.batch_sizes {
                for layers in space.layers.min..=space.layers.max {
                    out.push(HyperparameterConfig {
                        template,
                        layers,
                        epochs,
                        batch_size,
                        optimizer,
                        learning_rate,
                        seed: 0,
                    });
                }
            }
        }
    }
    out
}

/// Result of evaluating one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub parameter_count: u64,
    pub overall: OverallMetrics,
    pub per_class: Vec<ClassMetrics>,
    pub loss_curve: Vec<f64>,
    pub wall_time_seconds: f64,
}

impl RunOutcome {
    pub fn failed(parameter_count: u64, loss_curve: Vec<f64>) -> Self {
        Self {
            status: RunStatus::Failed,
            parameter_count,
            overall: OverallMetrics::default(),
            per_class: Vec::new(),
            loss_curve,
            wall_time_seconds: 0.0,
        }
    }
}

/// Turns a configuration into a scored run.
pub trait Evaluator {
    fn evaluate(&mut self, run_index: usize, config: &HyperparameterConfig, sink: &mut dyn ProgressSink) -> RunOutcome;
}

/// Trains on `split.train` and scores on `split.test`.
pub struct TrainingEvaluator<'a, T: Scalar> {
    pub split: &'a DatasetSplit<T>,
    /// Keep measured wall time; otherwise it is written as 0 so that output
    /// depends only on the inputs.
    pub record_timing: bool,
}

impl<T: Scalar> Evaluator for TrainingEvaluator<'_, T> {
    fn evaluate(&mut self, run_index: usize, config: &HyperparameterConfig, sink: &mut dyn ProgressSink) -> RunOutcome {
        let split = self.split;
        let shape = split.input_shape();
        let k = split.num_classes();
        let params = zoo::parameter_count(config.template, config.layers, shape, k).unwrap_or(0) as u64;
        let Ok(mut model) = zoo::instantiate::<T>(config, shape, k) else {
            return RunOutcome::failed(params, Vec::new());
        };
        let mut on_epoch =
            |p: EpochProgress| sink.emit(ProgressEvent::EpochFinished { run_index, epoch: p.epoch, loss: p.loss });
        let Ok(report) = train(&mut model, split, config, &mut on_epoch) else {
            return RunOutcome::failed(params, Vec::new());
        };
        if report.status == TrainStatus::Diverged {
            return RunOutcome::failed(params, report.loss_curve);
        }
        let Ok((predicted, _)) = predict(&mut model, &split.test.features) else {
            return RunOutcome::failed(params, report.loss_curve);
        };
        let Ok(cm) = confusion_matrix(&predicted, &split.test.labels, &split.test.class_names) else {
            return RunOutcome::failed(params, report.loss_curve);
        };
        RunOutcome {
            status: RunStatus::Completed,
            parameter_count: params,
            overall: overall_metrics(&cm),
            per_class: per_class_metrics(&cm),
            loss_curve: report.loss_curve,
            wall_time_seconds: if self.record_timing { report.wall_time_seconds } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub strategy: Strategy,
    pub budget: usize,
    /// In rank order.
    pub runs: Vec<RunRecord>,
    pub recommendation: Recommendation,
    /// In evaluation order.
    pub history: Vec<Observation>,
}

/// Evaluates up to `budget` configurations and ranks them by overall accuracy.
///
/// Run `i` trains with seed `seed + i`. Grid search stops early once its
/// lattice is used up. Bayesian search falls back to a uniform draw when no
/// unevaluated candidate is found.
pub fn search(
    evaluator: &mut dyn Evaluator,
    space: &SearchSpace,
    budget: usize,
    strategy: Strategy,
    seed: u64,
    sink: &mut dyn ProgressSink,
) -> Result<SearchOutcome, SearchError> {
    if budget == 0 {
        return Err(SearchError::Validation("budget must be at least 1".into()));
    }
    let problems = space.check();
    if !problems.is_empty() {
        return Err(SearchError::Validation(problems.join("; ")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = if strategy == Strategy::Grid { grid_configs(space) } else { Vec::new() };
    let mut history = Vec::with_capacity(budget);
    let mut records = Vec::with_capacity(budget);
    for run_index in 0..budget {
        let mut config = match strategy {
            Strategy::Random => space.sample(&mut rng),
            Strategy::Grid => match grid.get(run_index) {
                Some(c) => c.clone(),
                None => break,
            },
            Strategy::Bayesian => match propose_next(space, &history, &mut rng) {
                Ok(c) => c,
                Err(SearchError::Exhausted) => space.sample(&mut rng),
                Err(e) => return Err(e),
            },
        };
        config.seed = seed.wrapping_add(run_index as u64);
        sink.emit(ProgressEvent::RunStarted { run_index, budget, config: config.clone() });
        let out = evaluator.evaluate(run_index, &config, sink);
        let mut record = RunRecord {
            run_id: RunRecord::run_id_for(run_index),
            config: config.clone(),
            parameter_count: out.parameter_count,
            status: out.status,
            overall: out.overall,
            per_class: out.per_class,
            loss_curve: out.loss_curve,
            wall_time_seconds: out.wall_time_seconds,
            rank: 0,
        };
        record.canonicalize();
        sink.emit(ProgressEvent::RunFinished { run_index, status: record.status, accuracy: record.overall.accuracy });
        history.push(Observation {
            config,
            objective: record.overall.accuracy,
            failed: record.status == RunStatus::Failed,
        });
        records.push(record);
    }
    let ranked: Vec<String> =
        rank_runs(&records, Metric::Accuracy, Scope::Overall)?.iter().map(|r| r.run.run_id.clone()).collect();
    for r in &mut records {
        r.rank = ranked.iter().position(|id| *id == r.run_id).map_or(0, |p| p + 1);
    }
    records.sort_by_key(|r| r.rank);
    let best = ranked[0].clone();
    Ok(SearchOutcome { strategy, budget, runs: records, recommendation: Recommendation { ranked, best }, history })
}

/// [`search`] with a [`TrainingEvaluator`] over `split`.
pub fn run_search<T: Scalar>(
    split: &DatasetSplit<T>,
    space: &SearchSpace,
    budget: usize,
    strategy: Strategy,
    seed: u64,
    record_timing: bool,
    sink: &mut dyn ProgressSink,
) -> Result<SearchOutcome, SearchError> {
    let mut evaluator = TrainingEvaluator { split, record_timing };
    search(&mut evaluator, space, budget, strategy, seed, sink)
}
