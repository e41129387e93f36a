//! `qfe` command-line interface.
//!
//! Every subcommand prints one JSON line on stdout: a summary on success, or
//! `{"status":"error","kind":...,"message":...}` with a nonzero exit code.
//! Per-epoch progress goes to stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qfe_core::trainer::{
    self, Checkpoint, ConfigBuilder, MetricsRecord, RunConfig, Split, SweepEntry,
};
use qfe_core::Error;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "qfe",
    version,
    about = "Train and evaluate hybrid quantum-classical CNNs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model; writes config.txt, metrics.csv and checkpoint.bin.
    Train(Overrides),
    /// Score a checkpoint on its data split.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Which split to score.
        #[arg(long, default_value = "test")]
        split: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train every ansatz × depth combination; writes runs/*.csv and summary.csv.
    Sweep(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Extra `key=value` override; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Suppress per-epoch progress on stderr.
    #[arg(long)]
    quiet: bool,
}

impl Overrides {
    fn apply(&self, mut builder: ConfigBuilder) -> Result<ConfigBuilder, Error> {
        if let Some(path) = &self.config {
            builder.merge(ConfigBuilder::parse(&std::fs::read_to_string(path)?)?);
        }
        for pair in &self.set {
            builder.set_pair(pair)?;
        }
        if let Some(seed) = self.seed {
            builder.set("train.seed", &seed.to_string())?;
        }
        if let Some(dir) = &self.data_dir {
            builder.set("data.dir", &dir.display().to_string())?;
        }
        if let Some(dir) = &self.out_dir {
            builder.set("out.dir", &dir.display().to_string())?;
        }
        Ok(builder)
    }

    fn resolve(&self) -> Result<RunConfig, Error> {
        self.apply(ConfigBuilder::new())?.resolve()
    }

    fn progress(&self) -> impl FnMut(&MetricsRecord) + Send {
        let quiet = self.quiet;
        move |r: &MetricsRecord| {
            if !quiet {
                eprintln!(
                    "epoch {:>3} {:<5} cost {:.6} accuracy {:.4} ({:.1}s, {} sims)",
                    r.epoch, r.split, r.cost, r.accuracy, r.seconds, r.sims
                );
            }
        }
    }
}

fn record_json(r: &MetricsRecord) -> Value {
    json!({
        "epoch": r.epoch,
        "split": r.split.to_string(),
        "cost": r.cost,
        "accuracy": r.accuracy,
        "sims": r.sims,
    })
}

fn run(cli: Cli) -> Result<Value, Error> {
    match cli.command {
        Command::Train(o) => {
            let config = o.resolve()?;
            let artifacts = trainer::train(&config, &mut o.progress())?;
            let outcome = &artifacts.outcome;
            Ok(json!({
                "status": "ok",
                "command": "train",
                "metrics": artifacts.metrics,
                "checkpoint": artifacts.checkpoint,
                "final_train": outcome.last(Split::Train).map(record_json),
                "final_test": outcome.last(Split::Test).map(record_json),
            }))
        }
        Command::Evaluate {
            checkpoint,
            split,
            overrides,
        } => {
            let ckpt = Checkpoint::load(&checkpoint)?;
            let (_, model) = trainer::restore(&ckpt)?;
            let config = overrides
                .apply(ConfigBuilder::parse(&ckpt.config_text)?)?
                .resolve()?;
            let (train_set, test_set) = trainer::load_data(&config)?;
            let data = match split.parse::<Split>()? {
                Split::Train => train_set,
                Split::Test => test_set,
            };
            let counter = qfe_core::gradients::SimCounter::new();
            let eval = trainer::evaluate(&model, &data, &counter)?;
            Ok(json!({
                "status": "ok",
                "command": "evaluate",
                "split": split,
                "samples": data.len(),
                "cost": eval.cost,
                "accuracy": eval.accuracy,
                "confusion": eval.confusion,
                "sims": counter.get(),
            }))
        }
        Command::Sweep(o) => {
            let config = o.resolve()?;
            let quiet = o.quiet;
            let mut on_run = |e: &SweepEntry| {
                if !quiet {
                    let last = e.records.last().expect("non-empty");
                    eprintln!(
                        "{:<10} test cost {:.6} accuracy {:.4}",
                        e.ansatz.to_string(),
                        last.cost,
                        last.accuracy
                    );
                }
            };
            let entries = trainer::sweep(&config, &mut on_run)?;
            Ok(json!({
                "status": "ok",
                "command": "sweep",
                "runs": entries.len(),
                "summary": config.out_dir.join("summary.csv"),
            }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!(
                "{}",
                json!({"status": "error", "kind": e.kind(), "message": e.to_string()})
            );
            ExitCode::from(2)
        }
    }
}
