use std::path::PathBuf;

use super::config::RunConfig;
use super::metrics::{write_metrics, MetricsRecord, Split};
use super::run::{fit, load_data, EpochSettings};
use crate::circuits::AnsatzPreset;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub ansatz: AnsatzPreset,
    pub metrics: PathBuf,
    pub records: Vec<MetricsRecord>,
    pub applied: Vec<EpochSettings>,
    pub optimizer_steps: u64,
}

impl SweepEntry {
    fn last(&self, split: Split) -> &MetricsRecord {
        self.records
            .iter()
            .rev()
            .find(|r| r.split == split)
            .expect("every run records both splits")
    }
}

/// Trains every `sweep.ansatze × sweep.depths` combination on one shared
/// data split. Writes `runs/<ansatz>-L<depth>.csv` per run and
/// `summary.csv` under `config.out_dir`.
pub fn sweep(config: &RunConfig, on_run: &mut dyn FnMut(&SweepEntry)) -> Result<Vec<SweepEntry>> {
    if config.sweep_ansatze.is_empty() || config.sweep_depths.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let (train, test) = load_data(config)?;
    let runs_dir = config.out_dir.join("runs");
    std::fs::create_dir_all(&runs_dir)?;
    std::fs::write(config.out_dir.join("config.txt"), config.to_text())?;
    let mut entries = Vec::new();
    for &kind in &config.sweep_ansatze {
        for &depth in &config.sweep_depths {
            let ansatz = AnsatzPreset::new(kind, depth)?;
            let run_config = RunConfig {
                ansatz,
                ..config.clone()
            };
            let outcome = fit(&run_config, &train, &test, &mut |_| {})?;
            let metrics = runs_dir.join(format!("{ansatz}.csv"));
            write_metrics(&metrics, &outcome.records)?;
            let entry = SweepEntry {
                ansatz,
                metrics,
                optimizer_steps: outcome.adam.steps(),
                records: outcome.records,
                applied: outcome.applied,
            };
            on_run(&entry);
            entries.push(entry);
        }
    }
    write_summary(config, &entries)?;
    Ok(entries)
}

fn write_summary(config: &RunConfig, entries: &[SweepEntry]) -> Result<()> {
    let mut w = csv::Writer::from_path(config.out_dir.join("summary.csv"))?;
    w.write_record([
        "ansatz",
        "layers",
        "epochs",
        "optimizer_steps",
        "final_train_cost",
        "final_train_accuracy",
        "final_test_cost",
        "final_test_accuracy",
        "sims",
        "seconds",
    ])?;
    for e in entries {
        let (train, test) = (e.last(Split::Train), e.last(Split::Test));
        w.write_record([
            e.ansatz.kind.name().to_string(),
            e.ansatz.layers.to_string(),
            e.applied.len().to_string(),
            e.optimizer_steps.to_string(),
            format!("{:?}", train.cost),
            format!("{:?}", train.accuracy),
            format!("{:?}", test.cost),
            format!("{:?}", test.accuracy),
            e.records.iter().map(|r| r.sims).sum::<u64>().to_string(),
            format!("{:.3}", e.records.iter().map(|r| r.seconds).sum::<f64>()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
