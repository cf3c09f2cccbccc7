use serde::Serialize;

use crate::results::RunStatus;
use crate::zoo::HyperparameterConfig;

/// Notifications emitted while a search runs. Run indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ProgressEvent {
    RunStarted { run_index: usize, budget: usize, config: HyperparameterConfig },
    EpochFinished { run_index: usize, epoch: usize, loss: f64 },
    RunFinished { run_index: usize, status: RunStatus, accuracy: f64 },
}

pub trait ProgressSink {
    fn emit(&mut self, event: ProgressEvent);
}

impl<F: FnMut(ProgressEvent)> ProgressSink for F {
    fn emit(&mut self, event: ProgressEvent) {
        self(event)
    }
}

/// Discards every event.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoProgress;

impl ProgressSink for NoProgress {
    fn emit(&mut self, _: ProgressEvent) {}
}
