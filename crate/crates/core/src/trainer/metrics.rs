use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const METRICS_HEADER: [&str; 6] = ["epoch", "split", "cost", "accuracy", "seconds", "sims"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::Data(format!("unknown split {other:?}"))),
        }
    }
}

/// One row of the metrics CSV. Epoch 0 rows describe the initial model.
/// `sims` counts the circuit simulations spent producing the row: for train
/// rows the epoch's updates plus the evaluation pass, for test rows the
/// evaluation pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub split: Split,
    pub cost: f64,
    pub accuracy: f64,
    pub seconds: f64,
    pub sims: u64,
}

impl MetricsRecord {
    /// Bitwise equality on everything except wall-clock time.
    pub fn same_outcome(&self, other: &MetricsRecord) -> bool {
        self.epoch == other.epoch
            && self.split == other.split
            && self.cost.to_bits() == other.cost.to_bits()
            && self.accuracy.to_bits() == other.accuracy.to_bits()
            && self.sims == other.sims
    }
}

pub fn write_metrics(path: impl AsRef<Path>, records: &[MetricsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(METRICS_HEADER)?;
    for r in records {
        w.write_record([
            r.epoch.to_string(),
            r.split.to_string(),
            format!("{:?}", r.cost),
            format!("{:?}", r.accuracy),
            format!("{:.6}", r.seconds),
            r.sims.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics(path: impl AsRef<Path>) -> Result<Vec<MetricsRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().ne(METRICS_HEADER) {
        return Err(Error::Data(format!(
            "unexpected metrics header {:?}",
            r.headers()?
        )));
    }
    let bad = |what: &str, v: &str| Error::Data(format!("bad {what} {v:?} in metrics file"));
    r.records()
        .map(|row| {
            let row = row?;
            let field = |i: usize| row.get(i).unwrap_or("");
            Ok(MetricsRecord {
                epoch: field(0).parse().map_err(|_| bad("epoch", field(0)))?,
                split: field(1).parse()?,
                cost: field(2).parse().map_err(|_| bad("cost", field(2)))?,
                accuracy: field(3).parse().map_err(|_| bad("accuracy", field(3)))?,
                seconds: field(4).parse().map_err(|_| bad("seconds", field(4)))?,
                sims: field(5).parse().map_err(|_| bad("sims", field(5)))?,
            })
        })
        .collect()
}
