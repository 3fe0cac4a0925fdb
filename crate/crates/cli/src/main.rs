mod args;
mod manifest;
mod report;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::error::ErrorKind;
use clap::Parser;
use lemmings_core::io::{
    bags_from_sequences, load_annotations, load_bag_list, load_bags, load_fasta, load_model, load_musk, save_bags,
    save_model,
};
use lemmings_core::{
    cross_validate, fit, leave_one_bag_out, objective_classification, objective_ranking, BagScorer, CvOptions, Dataset,
    HyperGrid, MilError, Task, Tuning,
};
use serde_json::json;

use args::{Cli, Command, CvArgs, FastaArgs, Format, InputArgs, PredictArgs, RerunArgs, TrainArgs};
use manifest::Manifest;

/// Usage problems found after clap accepted the arguments.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(msg.into()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            // clap's message up to the usage block, folded onto one line
            let text = e.render().to_string();
            let message: Vec<&str> = text
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("error: usage: {}", message.join(" ").trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (category, code) = classify(&e);
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {category}: {msg}");
            ExitCode::from(code)
        }
    }
}

fn classify(e: &anyhow::Error) -> (&'static str, u8) {
    if e.downcast_ref::<UsageError>().is_some() {
        return ("usage", 2);
    }
    for cause in e.chain() {
        if let Some(m) = cause.downcast_ref::<MilError>() {
            let mut m = m;
            while let MilError::Context { source, .. } = m {
                m = source;
            }
            let category = match m {
                MilError::Io { .. } => "io",
                MilError::Parse { .. } | MilError::InvalidDataset(_) => "data",
                MilError::DimensionMismatch { .. } => "dimension",
                MilError::ModelFormat(_) | MilError::KindMismatch { .. } => "model",
                MilError::InvalidParameter(_) => "parameter",
                _ => "runtime",
            };
            return (category, 1);
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return ("io", 1);
        }
    }
    ("runtime", 1)
}

fn run(command: Command) -> Result<()> {
    match command.clone() {
        Command::Train(a) => train(a, command),
        Command::Predict(a) => predict(a, command),
        Command::Cv(a) => cv(a, command),
        Command::BagsFromFasta(a) => bags_from_fasta(a, command),
        Command::Rerun(a) => rerun(a),
    }
}

fn load(input: &InputArgs) -> Result<Dataset> {
    let ds = match input.format {
        Format::Musk => load_musk(&input.input)?,
        Format::Bags => load_bags(&input.input)?,
    };
    Ok(ds)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn train(a: TrainArgs, invocation: Command) -> Result<()> {
    if !(a.lambda > 0.0 && a.lambda.is_finite()) {
        return Err(usage(format!("--lambda must be a positive number, got {}", a.lambda)));
    }
    let ds = load(&a.input)?;
    let spec = a.solver.spec(a.lambda);
    let (model, trace) = fit(&ds, &spec, a.solver.seed)?;
    let prepared = model.preprocess().apply(&ds)?;
    let objective = match spec.kind.task() {
        Task::Classification => objective_classification(&prepared, &model, a.lambda)?,
        Task::Ranking => objective_ranking(&prepared, &model, a.lambda)?,
    };
    save_model(&model, &a.out)?;
    let iterations = spec.iterations.resolve(ds.len());
    let resolved = json!({
        "kind": spec.kind.as_str(),
        "iterations": iterations,
        "bags": ds.len(),
        "instances": ds.n_instances(),
        "dim": ds.dim(),
    });
    Manifest::new(invocation, &[&a.input.input], &[&a.out], resolved)?.write_next_to(&a.out)?;
    println!(
        "objective={objective} violations={} iterations={iterations} model={}",
        trace.final_violations,
        a.out.display()
    );
    Ok(())
}

fn predict(a: PredictArgs, invocation: Command) -> Result<()> {
    let model = load_model(&a.model)?;
    let bags = match a.input.format {
        Format::Musk => load_musk(&a.input.input)?.into_bags(),
        Format::Bags => load_bag_list(&a.input.input)?,
    };
    // columns: bag_id, score, witness_index
    let mut out = String::new();
    if !bags.is_empty() {
        let ds = Dataset::new(bags, Task::Ranking)?;
        let scores = model.score_raw(&ds)?;
        for (bag, w) in ds.bags().iter().zip(scores) {
            let _ = writeln!(out, "{}\t{}\t{}", bag.id(), w.score, w.index);
        }
    }
    match &a.out {
        Some(path) => {
            write(path, &out)?;
            let resolved = json!({ "kind": model.kind().as_str(), "dim": model.dim() });
            Manifest::new(invocation, &[&a.model, &a.input.input], &[path], resolved)?.write_next_to(path)?;
        }
        None => print!("{out}"),
    }
    Ok(())
}

fn cv(a: CvArgs, invocation: Command) -> Result<()> {
    let ds = load(&a.input)?;
    let tuning = match &a.grid {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let grid: HyperGrid =
                serde_json::from_str(&text).map_err(|e| usage(format!("--grid {}: {e}", path.display())))?;
            Some(Tuning {
                grid,
                inner_folds: a.inner_folds,
            })
        }
        None => None,
    };
    let lambda = match (a.lambda, &tuning) {
        (Some(l), _) => l,
        (None, Some(t)) => t
            .grid
            .lambda
            .first()
            .copied()
            .ok_or_else(|| usage("--grid has no lambda values"))?,
        (None, None) => return Err(usage("--lambda is required without --grid")),
    };
    if a.jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    let spec = a.solver.spec(lambda);
    let opts = CvOptions {
        folds: a.folds,
        runs: a.runs,
        seed: a.solver.seed,
        stratified: !a.no_stratify,
        jobs: a.jobs,
        tuning,
    };
    let report = if a.loo {
        leave_one_bag_out(&ds, &spec, &opts)?
    } else {
        cross_validate(&ds, &spec, &opts)?
    };
    let mut json_text = serde_json::to_string_pretty(&report)?;
    json_text.push('\n');
    write(&a.out, &json_text)?;
    let table = report::render(&report);
    let table_path = with_suffix(&a.out, ".txt");
    write(&table_path, &table)?;
    let timing = report::render_timing(&report);
    write(&with_suffix(&a.out, ".timing.tsv"), &timing)?;

    let mut inputs: Vec<&Path> = vec![&a.input.input];
    if let Some(g) = &a.grid {
        inputs.push(g);
    }
    let resolved = json!({
        "kind": spec.kind.as_str(),
        "folds": report.folds,
        "runs": report.runs,
        "models_trained": report.models_trained(),
        "bags": ds.len(),
    });
    Manifest::new(invocation, &inputs, &[&a.out, &table_path], resolved)?.write_next_to(&a.out)?;
    print!("{table}");
    eprint!("{timing}");
    Ok(())
}

fn bags_from_fasta(a: FastaArgs, invocation: Command) -> Result<()> {
    let records = load_fasta(&a.fasta)?;
    let annotations = load_annotations(&a.annotations, &records)?;
    let ds = bags_from_sequences(&annotations, a.window, a.stride, a.skip_unknown)?;
    save_bags(&ds, &a.out)?;
    let resolved = json!({ "sequences": records.len(), "bags": ds.len(), "instances": ds.n_instances() });
    Manifest::new(invocation, &[&a.fasta, &a.annotations], &[&a.out], resolved)?.write_next_to(&a.out)?;
    println!(
        "bags={} instances={} out={}",
        ds.len(),
        ds.n_instances(),
        a.out.display()
    );
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn rerun(a: RerunArgs) -> Result<()> {
    let manifest = Manifest::read(&a.manifest)?;
    if manifest.version != env!("CARGO_PKG_VERSION") {
        bail!(
            "manifest was written by version {}, this is {}",
            manifest.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    manifest.check_inputs()?;
    let mut command = manifest.invocation;
    if let Some(out) = a.out {
        match &mut command {
            Command::Train(c) => c.out = out,
            Command::Predict(c) => c.out = Some(out),
            Command::Cv(c) => c.out = out,
            Command::BagsFromFasta(c) => c.out = out,
            Command::Rerun(_) => return Err(usage("a manifest cannot record rerun")),
        }
    }
    if matches!(command, Command::Rerun(_)) {
        return Err(usage("a manifest cannot record rerun"));
    }
    run(command)
}
