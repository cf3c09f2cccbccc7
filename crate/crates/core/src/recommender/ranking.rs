use std::cmp::Ordering;

use super::encoding::encode_unchecked;
use super::SearchError;
use crate::evaluation::Metric;
use crate::results::{RunRecord, RunStatus};

/// What a ranking metric is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// Overall accuracy or the macro average of the other metrics.
    Overall,
    /// One-vs-rest metric of a single class.
    Class(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedRun<'a> {
    pub run: &'a RunRecord,
    pub value: f64,
}

/// Orders runs best first by `metric` over `scope`.
///
/// Failed runs go last. Ties go to higher overall accuracy, then fewer
/// parameters, then the lexicographically smaller config encoding, then the
/// run id, which makes the order total.
pub fn rank_runs(runs: &[RunRecord], metric: Metric, scope: Scope) -> Result<Vec<RankedRun<'_>>, SearchError> {
    if let Scope::Class(k) = scope {
        if let Some(r) = runs.iter().find(|r| r.status == RunStatus::Completed && k >= r.per_class.len()) {
            return Err(SearchError::Validation(format!(
                "class {k} out of range, {} has {} classes",
                r.run_id,
                r.per_class.len()
            )));
        }
    }
    let mut ranked: Vec<RankedRun> =
        runs.iter().map(|run| RankedRun { run, value: run.metric(metric, scope) }).collect();
    ranked.sort_by(|a, b| compare(a, b));
    Ok(ranked)
}

fn compare(a: &RankedRun, b: &RankedRun) -> Ordering {
    let failed = |r: &RankedRun| r.run.status == RunStatus::Failed;
    failed(a)
        .cmp(&failed(b))
        .then_with(|| b.value.total_cmp(&a.value))
        .then_with(|| {
            b.run.metric(Metric::Accuracy, Scope::Overall).total_cmp(&a.run.metric(Metric::Accuracy, Scope::Overall))
        })
        .then_with(|| a.run.parameter_count.cmp(&b.run.parameter_count))
        .then_with(|| encode_unchecked(&a.run.config).lex_cmp(&encode_unchecked(&b.run.config)))
        .then_with(|| a.run.run_id.cmp(&b.run.run_id))
}
