//! Initialization, Adam, and learning-rate / batch-size schedules.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{Error, Result};

/// QFE weights: i.i.d. uniform on `[-π, π]`.
pub fn init_qfe_weights<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let dist = Uniform::new_inclusive(-PI, PI).expect("valid range");
    (0..len).map(|_| dist.sample(rng)).collect()
}

/// Fully-connected weights: i.i.d. Gaussian with mean 0 and std 0.001.
pub fn init_fc_weights<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let dist = Normal::new(0.0, 0.001).expect("valid std");
    (0..len).map(|_| dist.sample(rng)).collect()
}

/// Adam with bias correction over several parameter groups.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(group_sizes: &[usize], lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: group_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: group_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// Rebuilds a saved optimizer state.
    pub fn from_parts(lr: f64, t: u64, m: Vec<Vec<f64>>, v: Vec<Vec<f64>>) -> Result<Self> {
        if m.len() != v.len() || m.iter().zip(&v).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::Shape("Adam moment shapes disagree".into()));
        }
        Ok(Adam {
            t,
            m,
            v,
            ..Adam::new(&[], lr)
        })
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moments(&self) -> &[Vec<f64>] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.v
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "Adam tracks {} groups, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.m[i].len() || g.len() != self.m[i].len() {
                return Err(Error::Shape(format!(
                    "Adam group {i}: expected {} values, got {} params and {} grads",
                    self.m[i].len(),
                    p.len(),
                    g.len()
                )));
            }
        }
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (group, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.m[group];
            let v = &mut self.v[group];
            for k in 0..p.len() {
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g[k];
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleRow {
    pub first_epoch: usize,
    pub last_epoch: usize,
    pub lr: f64,
    pub batch: usize,
}

/// Piecewise-constant learning rate and batch size over 1-based epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    rows: Vec<ScheduleRow>,
}

impl Schedule {
    /// Rows must start at epoch 1 and be contiguous.
    pub fn new(rows: Vec<ScheduleRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Config("schedule has no rows".into()));
        }
        let mut expected = 1;
        for row in &rows {
            if row.first_epoch != expected || row.last_epoch < row.first_epoch {
                return Err(Error::Config(format!(
                    "schedule row {}-{} breaks contiguity (expected start {expected})",
                    row.first_epoch, row.last_epoch
                )));
            }
            if !(row.lr.is_finite() && row.lr > 0.0) || row.batch == 0 {
                return Err(Error::Config(format!(
                    "schedule row {}-{} needs positive lr and batch",
                    row.first_epoch, row.last_epoch
                )));
            }
            expected = row.last_epoch + 1;
        }
        Ok(Schedule { rows })
    }

    /// The depth-sweep schedule: 1 → 0.01/32, 2–3 → 0.005/32, 4–6 → 0.001/32,
    /// 7–9 → 0.0005/16.
    pub fn table_one() -> Self {
        let row = |first_epoch, last_epoch, lr, batch| ScheduleRow {
            first_epoch,
            last_epoch,
            lr,
            batch,
        };
        Schedule::new(vec![
            row(1, 1, 0.01, 32),
            row(2, 3, 0.005, 32),
            row(4, 6, 0.001, 32),
            row(7, 9, 0.0005, 16),
        ])
        .expect("static schedule is valid")
    }

    /// One constant row covering `epochs` epochs.
    pub fn constant(epochs: usize, lr: f64, batch: usize) -> Result<Self> {
        Schedule::new(vec![ScheduleRow {
            first_epoch: 1,
            last_epoch: epochs,
            lr,
            batch,
        }])
    }

    pub fn rows(&self) -> &[ScheduleRow] {
        &self.rows
    }

    pub fn last_epoch(&self) -> usize {
        self.rows.last().map_or(0, |r| r.last_epoch)
    }

    pub fn for_epoch(&self, epoch: usize) -> Result<(f64, usize)> {
        self.rows
            .iter()
            .find(|r| (r.first_epoch..=r.last_epoch).contains(&epoch))
            .map(|r| (r.lr, r.batch))
            .ok_or_else(|| {
                Error::Config(format!(
                    "epoch {epoch} outside schedule 1..={}",
                    self.last_epoch()
                ))
            })
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            if r.first_epoch == r.last_epoch {
                write!(f, "{}:{:?}:{}", r.first_epoch, r.lr, r.batch)?;
            } else {
                write!(
                    f,
                    "{}-{}:{:?}:{}",
                    r.first_epoch, r.last_epoch, r.lr, r.batch
                )?;
            }
        }
        Ok(())
    }
}

/// Parses `table1` or a comma-separated list of `first[-last]:lr:batch` rows,
/// e.g. `1:0.01:32,2-3:0.005:32`.
impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("table1") {
            return Ok(Schedule::table_one());
        }
        let bad = |part: &str| Error::Config(format!("bad schedule row {part:?}"));
        let rows = s
            .split(',')
            .map(|part| {
                let fields: Vec<&str> = part.trim().split(':').collect();
                let [range, lr, batch] = fields[..] else {
                    return Err(bad(part));
                };
                let (first, last) = match range.split_once('-') {
                    Some((a, b)) => (a.trim(), b.trim()),
                    None => (range.trim(), range.trim()),
                };
                Ok(ScheduleRow {
                    first_epoch: first.parse().map_err(|_| bad(part))?,
                    last_epoch: last.parse().map_err(|_| bad(part))?,
                    lr: lr.trim().parse().map_err(|_| bad(part))?,
                    batch: batch.trim().parse().map_err(|_| bad(part))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Schedule::new(rows)
    }
}

/// Halves the learning rate when the monitored cost has not improved for
/// `patience` consecutive epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauHalving {
    pub patience: usize,
    best: f64,
    stale: usize,
}

impl PlateauHalving {
    pub fn new(patience: usize) -> Self {
        PlateauHalving {
            patience,
            best: f64::INFINITY,
            stale: 0,
        }
    }

    /// Records one epoch's cost; returns true when the rate should be halved.
    pub fn observe(&mut self, cost: f64) -> bool {
        if cost < self.best {
            self.best = cost;
            self.stale = 0;
            return false;
        }
        self.stale += 1;
        if self.patience > 0 && self.stale >= self.patience {
            self.stale = 0;
            return true;
        }
        false
    }
}
