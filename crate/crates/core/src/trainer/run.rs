use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::checkpoint::Checkpoint;
use super::config::{DataSource, RunConfig};
use super::metrics::{write_metrics, MetricsRecord, Split};
use super::model::{Model, ModelSpec};
use crate::data::{self, Dataset, RawMnist, CROP_SIDE};
use crate::error::{Error, Result};
use crate::gradients::SimCounter;
use crate::optim::{Adam, PlateauHalving};

/// Input tensor shape implied by the data settings.
pub fn input_shape(config: &RunConfig) -> (usize, usize, usize) {
    match config.data.source {
        DataSource::Mnist if config.data.downsample => (1, CROP_SIDE / 2, CROP_SIDE / 2),
        DataSource::Mnist => (1, CROP_SIDE, CROP_SIDE),
        DataSource::Stub => (1, config.data.stub_side, config.data.stub_side),
    }
}

/// Loads the train and test splits described by `config.data`.
pub fn load_data(config: &RunConfig) -> Result<(Dataset, Dataset)> {
    let d = &config.data;
    match d.source {
        DataSource::Mnist => {
            let raw = RawMnist::load(&d.dir, "train")?;
            let (train_idx, test_idx) = data::balanced_subset(
                &raw.labels,
                &d.digits,
                d.train_per_class,
                d.test_per_class,
                d.split_seed,
            )?;
            Ok((
                data::prepare(&raw, &train_idx, &d.digits, d.downsample)?,
                data::prepare(&raw, &test_idx, &d.digits, d.downsample)?,
            ))
        }
        DataSource::Stub => {
            let all = data::stub_dataset(
                d.stub_samples + d.stub_test_samples,
                d.stub_side,
                d.stub_classes,
                d.split_seed,
            )?;
            let train: Vec<usize> = (0..d.stub_samples).collect();
            let test: Vec<usize> = (d.stub_samples..all.len()).collect();
            Ok((all.subset(&train), all.subset(&test)))
        }
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub cost: f64,
    pub accuracy: f64,
    /// `confusion[true_class][predicted_class]`.
    pub confusion: Vec<Vec<usize>>,
}

/// Mean cross-entropy, accuracy and confusion matrix for precomputed logits.
pub fn score(logits: &[Vec<f64>], labels: &[usize], classes: usize) -> Result<Evaluation> {
    if logits.len() != labels.len() || logits.is_empty() {
        return Err(Error::Shape(format!(
            "{} logit rows for {} labels",
            logits.len(),
            labels.len()
        )));
    }
    let mut confusion = vec![vec![0; classes]; classes];
    let mut total = 0.0;
    let mut correct = 0usize;
    for (row, &label) in logits.iter().zip(labels) {
        let mut target = vec![0.0; classes];
        target[label] = 1.0;
        total += crate::layers::softmax_cross_entropy(row, &target)?.0;
        let predicted = argmax(row);
        confusion[label][predicted] += 1;
        correct += usize::from(predicted == label);
    }
    Ok(Evaluation {
        cost: total / logits.len() as f64,
        accuracy: correct as f64 / logits.len() as f64,
        confusion,
    })
}

pub fn evaluate(model: &Model, data: &Dataset, counter: &SimCounter) -> Result<Evaluation> {
    let logits = data
        .images
        .par_iter()
        .map(|image| model.logits(image, counter))
        .collect::<Result<Vec<_>>>()?;
    score(&logits, &data.labels, data.n_classes)
}

/// Learning rate, batch size and sample count used in one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochSettings {
    pub epoch: usize,
    pub lr: f64,
    pub batch: usize,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub records: Vec<MetricsRecord>,
    pub applied: Vec<EpochSettings>,
    pub model: Model,
    pub adam: Adam,
}

impl TrainOutcome {
    pub fn checkpoint(&self, config: &RunConfig) -> Checkpoint {
        Checkpoint {
            config_text: config.to_text(),
            epoch: self.applied.len() as u32,
            params: self.model.parameters().iter().map(|g| g.to_vec()).collect(),
            adam: self.adam.clone(),
        }
    }

    pub fn last(&self, split: Split) -> Option<&MetricsRecord> {
        self.records.iter().rev().find(|r| r.split == split)
    }
}

/// Rebuilds the configuration and model stored in a checkpoint.
pub fn restore(checkpoint: &Checkpoint) -> Result<(RunConfig, Model)> {
    let config = RunConfig::parse(&checkpoint.config_text)?;
    let spec = ModelSpec::from_config(&config, input_shape(&config))?;
    let mut model = Model::build(spec, &mut ChaCha8Rng::seed_from_u64(config.seed))?;
    model.set_parameters(&checkpoint.params)?;
    Ok((config, model))
}

fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Trains on in-memory splits without touching the filesystem.
///
/// Per-sample gradients are computed in parallel and summed in batch order,
/// so results do not depend on the worker count.
pub fn fit(
    config: &RunConfig,
    train: &Dataset,
    test: &Dataset,
    on_record: &mut (dyn FnMut(&MetricsRecord) + Send),
) -> Result<TrainOutcome> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::Data(
            "train and test splits must be non-empty".into(),
        ));
    }
    if train.n_classes != config.data.classes() || test.n_classes != config.data.classes() {
        return Err(Error::Data(format!(
            "datasets have {}/{} classes, config expects {}",
            train.n_classes,
            test.n_classes,
            config.data.classes()
        )));
    }
    let input = train.image_shape().expect("non-empty");
    let spec = ModelSpec::from_config(config, input)?;
    with_workers(config.workers, || {
        fit_inner(config, spec, train, test, on_record)
    })?
}

fn fit_inner(
    config: &RunConfig,
    spec: ModelSpec,
    train: &Dataset,
    test: &Dataset,
    on_record: &mut (dyn FnMut(&MetricsRecord) + Send),
) -> Result<TrainOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = Model::build(spec, &mut rng)?;
    let counter = SimCounter::new();
    let mut adam = Adam::new(&model.group_sizes(), config.schedule_for(1)?.0);
    let mut records = Vec::new();
    let mut applied = Vec::new();

    let mut record =
        |epoch, split, data: &Dataset, model: &Model, started: Instant, sims_before| {
            let eval = evaluate(model, data, &counter)?;
            let r = MetricsRecord {
                epoch,
                split,
                cost: eval.cost,
                accuracy: eval.accuracy,
                seconds: started.elapsed().as_secs_f64(),
                sims: counter.get() - sims_before,
            };
            on_record(&r);
            records.push(r);
            Ok::<_, Error>(r)
        };
    let t0 = Instant::now();
    record(0, Split::Train, train, &model, t0, counter.get())?;
    let t0 = Instant::now();
    record(0, Split::Test, test, &model, t0, counter.get())?;

    let mut pool: Vec<usize> = (0..train.len()).collect();
    let mut active = train.len();
    if config.growth.enabled() {
        pool.shuffle(&mut rng);
        active = ((train.len() as f64 * config.growth.initial_fraction).ceil() as usize).max(1);
    }
    let mut plateau = PlateauHalving::new(config.plateau_patience);
    let mut growth_best = f64::INFINITY;
    let mut growth_stale = 0;
    let mut halved_lr = config.lr;

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        let sims_before = counter.get();
        let (lr, batch) = match config.schedule {
            Some(_) => config.schedule_for(epoch)?,
            None => (halved_lr, config.batch),
        };
        adam.lr = lr;
        applied.push(EpochSettings {
            epoch,
            lr,
            batch,
            samples: active,
        });
        let mut order = pool[..active].to_vec();
        order.shuffle(&mut rng);
        for (b, chunk) in order.chunks(batch).enumerate() {
            let results = chunk
                .par_iter()
                .map(|&i| model.gradients(&train.images[i], &train.one_hot(i), &counter))
                .collect::<Result<Vec<_>>>()?;
            let bad: Vec<usize> = chunk
                .iter()
                .zip(&results)
                .filter(|(_, r)| {
                    !r.loss.is_finite() || r.grads.iter().flatten().any(|g| !g.is_finite())
                })
                .map(|(&i, _)| i)
                .collect();
            if !bad.is_empty() {
                return Err(Error::NonFinite {
                    epoch,
                    batch: b,
                    samples: bad,
                });
            }
            let mut sum: Vec<Vec<f64>> =
                model.group_sizes().iter().map(|&n| vec![0.0; n]).collect();
            for r in &results {
                for (acc, g) in sum.iter_mut().zip(&r.grads) {
                    for (a, x) in acc.iter_mut().zip(g) {
                        *a += x;
                    }
                }
            }
            let scale = 1.0 / chunk.len() as f64;
            sum.iter_mut().flatten().for_each(|g| *g *= scale);
            let grads: Vec<&[f64]> = sum.iter().map(Vec::as_slice).collect();
            adam.step(&mut model.parameters_mut(), &grads)?;
        }
        let train_row = record(epoch, Split::Train, train, &model, started, sims_before)?;
        let t = Instant::now();
        record(epoch, Split::Test, test, &model, t, counter.get())?;

        if config.schedule.is_none() && plateau.observe(train_row.cost) {
            halved_lr /= 2.0;
        }
        if config.growth.enabled() && active < train.len() {
            if train_row.cost < growth_best {
                growth_best = train_row.cost;
                growth_stale = 0;
            } else {
                growth_stale += 1;
            }
            if growth_stale >= config.growth.patience.max(1) {
                active = ((active as f64 * config.growth.factor).ceil() as usize).min(train.len());
                growth_stale = 0;
                growth_best = f64::INFINITY;
            }
        }
    }
    Ok(TrainOutcome {
        records,
        applied,
        model,
        adam,
    })
}

/// Files written by [`train`].
#[derive(Debug, Clone)]
pub struct TrainArtifacts {
    pub outcome: TrainOutcome,
    pub metrics: PathBuf,
    pub checkpoint: Option<PathBuf>,
}

/// Loads data, trains, and writes `config.txt`, `metrics.csv` and
/// `checkpoint.bin` under `config.out_dir`. A non-finite loss also leaves
/// `nonfinite.txt` describing the offending batch.
pub fn train(
    config: &RunConfig,
    on_record: &mut (dyn FnMut(&MetricsRecord) + Send),
) -> Result<TrainArtifacts> {
    let (train_set, test_set) = load_data(config)?;
    std::fs::create_dir_all(&config.out_dir)?;
    std::fs::write(config.out_dir.join("config.txt"), config.to_text())?;
    let outcome = match fit(config, &train_set, &test_set, on_record) {
        Err(e @ Error::NonFinite { .. }) => {
            std::fs::write(config.out_dir.join("nonfinite.txt"), format!("{e}\n"))?;
            return Err(e);
        }
        other => other?,
    };
    let metrics = config.out_dir.join("metrics.csv");
    write_metrics(&metrics, &outcome.records)?;
    let checkpoint = if config.checkpoint {
        let path = config.out_dir.join("checkpoint.bin");
        outcome.checkpoint(config).save(&path)?;
        Some(path)
    } else {
        None
    };
    Ok(TrainArtifacts {
        outcome,
        metrics,
        checkpoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_to_lowest() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0; 10]), 0);
        assert_eq!(argmax(&[-1.0, -0.5]), 1);
    }

    #[test]
    fn scoring_contracts() {
        let labels: Vec<usize> = (0..50).map(|i| i % 10).collect();
        let perfect: Vec<Vec<f64>> = labels
            .iter()
            .map(|&l| (0..10).map(|k| if k == l { 5.0 } else { 0.0 }).collect())
            .collect();
        let e = score(&perfect, &labels, 10).unwrap();
        assert_eq!(e.accuracy, 1.0);
        let uniform = vec![vec![0.3; 10]; 50];
        let e = score(&uniform, &labels, 10).unwrap();
        assert_eq!(e.accuracy, 0.1);
        assert!((e.cost - 10f64.ln()).abs() < 1e-12);
        for (c, row) in e.confusion.iter().enumerate() {
            assert_eq!(row.iter().sum::<usize>(), 5, "class {c}");
            assert_eq!(row[0], 5);
        }
    }
}
