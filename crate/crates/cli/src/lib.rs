//! Command line front end and HTTP service over `zoorank-core`.

pub mod args;
pub mod server;
pub mod table;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, ReportArgs, SearchArgs, ServeArgs, TemplatesArgs};
use zoorank_core::{rank_runs, run_pipeline, ProgressEvent, ResultsError, ResultsFile, RunStatus, Scope};

/// Bad arguments or input data.
pub const EXIT_VALIDATION: i32 = 1;
/// Failure while processing valid input, e.g. I/O.
pub const EXIT_RUNTIME: i32 = 2;

/// Runs the command line and returns the process exit code.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let informational = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let text = e.render().to_string();
            if informational {
                let _ = write!(out, "{text}");
                return 0;
            }
            let _ = write!(err, "{text}");
            return EXIT_VALIDATION;
        }
    };
    let result = match cli.command {
        Command::Search(a) => search(&a, out, err),
        Command::Report(a) => report(&a, out),
        Command::Serve(a) => serve(a),
        Command::Templates(a) => templates(&a, out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure { code, message }) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn validation(message: impl ToString) -> Self {
        Failure { code: EXIT_VALIDATION, message: message.to_string() }
    }

    fn runtime(message: impl ToString) -> Self {
        Failure { code: EXIT_RUNTIME, message: message.to_string() }
    }

    fn results(e: ResultsError) -> Self {
        match e {
            ResultsError::Io(_) => Failure::runtime(e),
            _ => Failure::validation(e),
        }
    }
}

fn search(a: &SearchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let request = a.request();
    let quiet = a.quiet;
    let mut sink = |event: ProgressEvent| {
        if quiet {
            return;
        }
        match event {
            ProgressEvent::RunStarted { run_index, budget, config } => {
                let _ = writeln!(
                    err,
                    "run {}/{budget}: {} layers={} epochs={} batch={} {} lr={}",
                    run_index + 1,
                    config.template,
                    config.layers,
                    config.epochs,
                    config.batch_size,
                    config.optimizer,
                    config.learning_rate
                );
            }
            ProgressEvent::EpochFinished { .. } => {}
            ProgressEvent::RunFinished { run_index, status, accuracy } => {
                let outcome = match status {
                    RunStatus::Completed => format!("accuracy {accuracy:.4}"),
                    RunStatus::Failed => "failed".into(),
                };
                let _ = writeln!(err, "run {} finished: {outcome}", run_index + 1);
            }
        }
    };
    let results = run_pipeline::<f32>(&request, &mut sink).map_err(|e| {
        if e.is_validation() {
            Failure::validation(e)
        } else {
            Failure::runtime(e)
        }
    })?;
    results.save(&a.out).map_err(Failure::results)?;
    let ranked =
        rank_runs(&results.runs, zoorank_core::Metric::Accuracy, Scope::Overall).map_err(Failure::validation)?;
    let _ = write!(out, "{}", table::ranking(&results, &ranked, zoorank_core::Metric::Accuracy, Scope::Overall));
    let _ = writeln!(out, "recommended: {}", results.recommendation.best);
    let _ = writeln!(out, "results written to {}", a.out.display());
    Ok(())
}

fn report(a: &ReportArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let results = ResultsFile::load(&a.input).map_err(Failure::results)?;
    let scope = a.class.map_or(Scope::Overall, Scope::Class);
    if let Scope::Class(k) = scope {
        let n = results.dataset.num_classes;
        if k >= n {
            return Err(Failure::validation(format!(
                "class {k} out of range, the dataset has {n} classes (0..={})",
                n - 1
            )));
        }
    }
    let ranked = rank_runs(&results.runs, a.metric, scope).map_err(Failure::validation)?;
    let _ = write!(out, "{}", table::ranking(&results, &ranked, a.metric, scope));
    Ok(())
}

fn templates(a: &TemplatesArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if a.input_shape.is_empty() || a.input_shape.contains(&0) || a.classes < 2 {
        return Err(Failure::validation("input shape needs positive dimensions and at least 2 classes"));
    }
    let infos = zoorank_core::zoo::list_templates(&a.input_shape, a.classes);
    let _ = write!(out, "{}", table::templates(&infos, &a.input_shape, a.classes));
    Ok(())
}

fn serve(a: ServeArgs) -> Result<(), Failure> {
    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
    let initial = match &a.load {
        Some(path) => Some(ResultsFile::load(path).map_err(Failure::results)?),
        None => None,
    };
    let state = server::AppState::new(a.results_dir.clone(), initial);
    let app = server::router(state, a.static_dir.as_deref());
    let runtime = tokio::runtime::Runtime::new().map_err(Failure::runtime)?;
    runtime.block_on(async move {
        let addr = format!("{}:{}", a.host, a.port);
        let listener =
            tokio::net::TcpListener::bind(&addr).await.map_err(|e| Failure::runtime(format!("{addr}: {e}")))?;
        tracing::info!("listening on http://{addr}");
        axum::serve(listener, app).await.map_err(Failure::runtime)
    })
}
