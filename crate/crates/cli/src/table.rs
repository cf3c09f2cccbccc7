//! Plain-text tables for the terminal.

use std::fmt::Write;

use zoorank_core::recommender::RankedRun;
use zoorank_core::zoo::TemplateInfo;
use zoorank_core::{Metric, ResultsFile, Scope};

pub fn scope_label(scope: Scope, results: &ResultsFile) -> String {
    match scope {
        Scope::Overall => "overall".into(),
        Scope::Class(k) => format!("class {k} ({})", results.dataset.class_names[k]),
    }
}

pub fn ranking(results: &ResultsFile, ranked: &[RankedRun], metric: Metric, scope: Scope) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} runs of {} on {}, ranked by {metric} ({})",
        ranked.len(),
        results.strategy,
        results.dataset.name,
        scope_label(scope, results)
    );
    let _ = writeln!(
        out,
        "{:>4}  {:<8}  {:<9}  {:>6}  {:>6}  {:>5}  {:<8}  {:>9}  {:>9}  {:<9}  {:>8}",
        "rank",
        "run",
        "template",
        "layers",
        "epochs",
        "batch",
        "opt",
        "lr",
        "params",
        "status",
        metric.name()
    );
    for (i, r) in ranked.iter().enumerate() {
        let c = &r.run.config;
        let _ = writeln!(
            out,
            "{:>4}  {:<8}  {:<9}  {:>6}  {:>6}  {:>5}  {:<8}  {:>9.3e}  {:>9}  {:<9}  {:>8.4}",
            i + 1,
            r.run.run_id,
            c.template.name(),
            c.layers,
            c.epochs,
            c.batch_size,
            c.optimizer.name(),
            c.learning_rate,
            r.run.parameter_count,
            match r.run.status {
                zoorank_core::RunStatus::Completed => "completed",
                zoorank_core::RunStatus::Failed => "failed",
            },
            r.value
        );
    }
    out
}

pub fn templates(infos: &[TemplateInfo], input_shape: &[usize], classes: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "templates for input {input_shape:?} and {classes} classes (parameters per depth 1..4)");
    for t in infos {
        let counts: Vec<String> =
            t.parameter_counts.iter().map(|(_, n)| n.map_or_else(|| "-".to_string(), |n| n.to_string())).collect();
        let _ = writeln!(out, "{:<9}  {:<36}  {}", t.name, counts.join(" / "), t.description);
    }
    out
}
