//! Flat `key = value` run configuration.
//!
//! One entry per line, dotted keys, `#` starts a comment. Later sources
//! override earlier ones: file, then `--set` pairs, then explicit CLI flags.
//! Every key and its default is listed in [`KEYS`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::circuits::{AnsatzKind, AnsatzPreset};
use crate::error::{Error, Result};
use crate::layers::Activation;
use crate::optim::Schedule;
use crate::statevector::Observable;

/// Recognised keys with their defaults (`None` = no default).
pub const KEYS: &[(&str, Option<&str>)] = &[
    ("model.preset", Some("model2")),
    ("model.filters", None),
    ("model.fc_widths", Some("120,84")),
    ("model.kernel", Some("3")),
    ("ansatz.name", Some("sim15")),
    ("ansatz.layers", Some("1")),
    ("qfe.activation", Some("scaled-sigmoid")),
    ("qfe.observables", Some("Z0")),
    ("train.seed", None),
    ("train.epochs", None),
    ("train.lr", Some("0.01")),
    ("train.batch", Some("50")),
    ("train.schedule", None),
    ("train.plateau_patience", Some("2")),
    ("train.workers", Some("0")),
    ("train.growth.initial_fraction", Some("1")),
    ("train.growth.factor", Some("2")),
    ("train.growth.patience", Some("1")),
    ("data.source", Some("mnist")),
    ("data.dir", Some("data/mnist")),
    ("data.digits", Some("0,1,2,3,4,5,6,7,8,9")),
    ("data.train_per_class", Some("600")),
    ("data.test_per_class", Some("60")),
    ("data.downsample", Some("false")),
    ("data.split_seed", None),
    ("data.stub.samples", Some("64")),
    ("data.stub.test_samples", Some("32")),
    ("data.stub.side", Some("4")),
    ("data.stub.classes", Some("10")),
    ("out.dir", Some("runs/default")),
    ("out.checkpoint", Some("true")),
    ("sweep.ansatze", Some("sim1,sim2,sim9,sim14,sim15,qaoa")),
    ("sweep.depths", Some("1,2,3,4,5")),
];

const DEFAULT_EPOCHS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelPreset {
    /// QFE, pool, QFE, pool, three fully-connected layers.
    Model1,
    /// QFE, pool, QFE, QFE, global average pooling.
    Model2,
    /// A stack of QFE layers followed by global average pooling.
    QfeGap,
}

impl ModelPreset {
    pub fn name(self) -> &'static str {
        match self {
            ModelPreset::Model1 => "model1",
            ModelPreset::Model2 => "model2",
            ModelPreset::QfeGap => "qfe-gap",
        }
    }
}

impl FromStr for ModelPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "model1" => Ok(ModelPreset::Model1),
            "model2" => Ok(ModelPreset::Model2),
            "qfe-gap" => Ok(ModelPreset::QfeGap),
            other => Err(Error::Config(format!("unknown model preset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    Mnist,
    Stub,
}

/// Optional staged enlargement of the training set: start from a fraction
/// and multiply by `factor` whenever the train cost fails to improve for
/// `patience` epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Growth {
    pub initial_fraction: f64,
    pub factor: f64,
    pub patience: usize,
}

impl Growth {
    pub fn enabled(&self) -> bool {
        self.initial_fraction < 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub source: DataSource,
    pub dir: PathBuf,
    pub digits: Vec<u8>,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub downsample: bool,
    pub split_seed: u64,
    pub stub_samples: usize,
    pub stub_test_samples: usize,
    pub stub_side: usize,
    pub stub_classes: usize,
}

impl DataConfig {
    pub fn classes(&self) -> usize {
        match self.source {
            DataSource::Mnist => self.digits.len(),
            DataSource::Stub => self.stub_classes,
        }
    }
}

/// A fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelPreset,
    pub filters: Vec<usize>,
    pub fc_widths: Vec<usize>,
    pub kernel: usize,
    pub ansatz: AnsatzPreset,
    pub activation: Activation,
    pub observables: Vec<Observable>,
    pub seed: u64,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub schedule: Option<Schedule>,
    pub plateau_patience: usize,
    pub workers: usize,
    pub growth: Growth,
    pub data: DataConfig,
    pub out_dir: PathBuf,
    pub checkpoint: bool,
    pub sweep_ansatze: Vec<AnsatzKind>,
    pub sweep_depths: Vec<usize>,
}

/// Raw key/value pairs awaiting resolution.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigBuilder {
    values: BTreeMap<String, String>,
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses config text. Unknown and repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut builder = ConfigBuilder::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            if builder.values.contains_key(key) {
                return Err(Error::Config(format!(
                    "line {}: duplicate key {key:?}",
                    lineno + 1
                )));
            }
            builder
                .set(key, value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(builder)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<&mut Self> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(Error::Config(format!("unknown key {key:?}")));
        }
        self.values.insert(key.to_owned(), value.to_owned());
        Ok(self)
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<&mut Self> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {pair:?} is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    /// Overlays every key set in `other`.
    pub fn merge(&mut self, other: ConfigBuilder) -> &mut Self {
        self.values.extend(other.values);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn value(&self, key: &str) -> Option<&str> {
        self.get(key).or_else(|| {
            KEYS.iter()
                .find(|(k, _)| *k == key)
                .and_then(|(_, default)| *default)
        })
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.value(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("bad value {v:?} for {key}")))
            })
            .transpose()
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parsed(key)?
            .ok_or_else(|| Error::Config(format!("missing required key {key}")))
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let Some(v) = self.value(key) else {
            return Ok(Vec::new());
        };
        if v.trim().is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|item| {
                item.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad list item {item:?} in {key}")))
            })
            .collect()
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        let model: ModelPreset = self.required("model.preset")?;
        let seed: u64 = self.required("train.seed")?;
        let ansatz = AnsatzPreset::new(
            self.required("ansatz.name")?,
            self.required("ansatz.layers")?,
        )?;
        let observables = self
            .value("qfe.observables")
            .unwrap_or("Z0")
            .split(';')
            .map(str::parse)
            .collect::<Result<Vec<Observable>>>()?;
        let schedule: Option<Schedule> = self.get("train.schedule").map(str::parse).transpose()?;
        let epochs = match (self.parsed::<usize>("train.epochs")?, &schedule) {
            (Some(e), _) => e,
            (None, Some(s)) => s.last_epoch(),
            (None, None) => DEFAULT_EPOCHS,
        };
        let source = match self.value("data.source").unwrap_or("mnist") {
            "mnist" => DataSource::Mnist,
            "stub" => DataSource::Stub,
            other => return Err(Error::Config(format!("unknown data source {other:?}"))),
        };
        let data = DataConfig {
            source,
            dir: PathBuf::from(self.value("data.dir").unwrap_or_default()),
            digits: self.list("data.digits")?,
            train_per_class: self.required("data.train_per_class")?,
            test_per_class: self.required("data.test_per_class")?,
            downsample: self.required("data.downsample")?,
            split_seed: self.parsed("data.split_seed")?.unwrap_or(seed),
            stub_samples: self.required("data.stub.samples")?,
            stub_test_samples: self.required("data.stub.test_samples")?,
            stub_side: self.required("data.stub.side")?,
            stub_classes: self.required("data.stub.classes")?,
        };
        let classes = data.classes();
        let filters = match self.list::<usize>("model.filters")? {
            f if !f.is_empty() => f,
            _ => default_filters(model, classes),
        };
        let config = RunConfig {
            model,
            filters,
            fc_widths: self.list("model.fc_widths")?,
            kernel: self.required("model.kernel")?,
            ansatz,
            activation: self.required("qfe.activation")?,
            observables,
            seed,
            epochs,
            lr: self.required("train.lr")?,
            batch: self.required("train.batch")?,
            schedule,
            plateau_patience: self.required("train.plateau_patience")?,
            workers: self.required("train.workers")?,
            growth: Growth {
                initial_fraction: self.required("train.growth.initial_fraction")?,
                factor: self.required("train.growth.factor")?,
                patience: self.required("train.growth.patience")?,
            },
            data,
            out_dir: PathBuf::from(self.value("out.dir").unwrap_or_default()),
            checkpoint: self.required("out.checkpoint")?,
            sweep_ansatze: self.list("sweep.ansatze")?,
            sweep_depths: self.list("sweep.depths")?,
        };
        config.validate()?;
        Ok(config)
    }
}

fn default_filters(model: ModelPreset, classes: usize) -> Vec<usize> {
    match model {
        ModelPreset::Model1 => vec![4, 8],
        ModelPreset::Model2 => vec![4, 8, classes],
        ModelPreset::QfeGap => vec![classes],
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        ConfigBuilder::parse(text)?.resolve()
    }

    fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.kernel == 0 {
            return fail("model.kernel must be positive".into());
        }
        if self.filters.contains(&0) || self.fc_widths.contains(&0) {
            return fail("layer widths must be positive".into());
        }
        if self.epochs == 0 {
            return fail("train.epochs must be positive".into());
        }
        if let Some(s) = &self.schedule {
            if self.epochs > s.last_epoch() {
                return fail(format!(
                    "train.epochs {} exceeds schedule length {}",
                    self.epochs,
                    s.last_epoch()
                ));
            }
        }
        if !(self.lr.is_finite() && self.lr > 0.0) || self.batch == 0 {
            return fail("train.lr and train.batch must be positive".into());
        }
        let g = self.growth;
        // negated comparisons also reject NaN
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(g.initial_fraction > 0.0 && g.initial_fraction <= 1.0) || !(g.factor > 1.0) {
            return fail("growth needs fraction in (0, 1] and factor > 1".into());
        }
        if self.data.classes() < 2 {
            return fail("at least two classes are required".into());
        }
        let mut digits = self.data.digits.clone();
        digits.sort_unstable();
        digits.dedup();
        if digits.len() != self.data.digits.len() || digits.iter().any(|&d| d > 9) {
            return fail("data.digits must be distinct digits 0-9".into());
        }
        if self.sweep_depths.contains(&0) {
            return fail("sweep depths must be positive".into());
        }
        Ok(())
    }

    /// Learning rate and batch size for a 1-based epoch.
    pub fn schedule_for(&self, epoch: usize) -> Result<(f64, usize)> {
        match &self.schedule {
            Some(s) => s.for_epoch(epoch),
            None => Ok((self.lr, self.batch)),
        }
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let join = |v: &[usize]| {
            v.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("model.preset", self.model.name().into());
        put("model.filters", join(&self.filters));
        put("model.fc_widths", join(&self.fc_widths));
        put("model.kernel", self.kernel.to_string());
        put("ansatz.name", self.ansatz.kind.name().into());
        put("ansatz.layers", self.ansatz.layers.to_string());
        put("qfe.activation", self.activation.name().into());
        put(
            "qfe.observables",
            self.observables
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(";"),
        );
        put("train.seed", self.seed.to_string());
        put("train.epochs", self.epochs.to_string());
        put("train.lr", format!("{:?}", self.lr));
        put("train.batch", self.batch.to_string());
        if let Some(sched) = &self.schedule {
            put("train.schedule", sched.to_string());
        }
        put("train.plateau_patience", self.plateau_patience.to_string());
        put("train.workers", self.workers.to_string());
        put(
            "train.growth.initial_fraction",
            format!("{:?}", self.growth.initial_fraction),
        );
        put("train.growth.factor", format!("{:?}", self.growth.factor));
        put("train.growth.patience", self.growth.patience.to_string());
        let d = &self.data;
        put(
            "data.source",
            match d.source {
                DataSource::Mnist => "mnist".into(),
                DataSource::Stub => "stub".into(),
            },
        );
        put("data.dir", d.dir.display().to_string());
        put(
            "data.digits",
            d.digits
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        put("data.train_per_class", d.train_per_class.to_string());
        put("data.test_per_class", d.test_per_class.to_string());
        put("data.downsample", d.downsample.to_string());
        put("data.split_seed", d.split_seed.to_string());
        put("data.stub.samples", d.stub_samples.to_string());
        put("data.stub.test_samples", d.stub_test_samples.to_string());
        put("data.stub.side", d.stub_side.to_string());
        put("data.stub.classes", d.stub_classes.to_string());
        put("out.dir", self.out_dir.display().to_string());
        put("out.checkpoint", self.checkpoint.to_string());
        put(
            "sweep.ansatze",
            self.sweep_ansatze
                .iter()
                .map(|k| k.name())
                .collect::<Vec<_>>()
                .join(","),
        );
        put("sweep.depths", join(&self.sweep_depths));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_required_seed() {
        assert!(matches!(RunConfig::parse(""), Err(Error::Config(_))));
        let c = RunConfig::parse("train.seed = 5").unwrap();
        assert_eq!(c.model, ModelPreset::Model2);
        assert_eq!(c.filters, vec![4, 8, 10]);
        assert_eq!(c.fc_widths, vec![120, 84]);
        assert_eq!(c.ansatz.to_string(), "sim15-L1");
        assert_eq!(c.data.split_seed, 5);
        assert_eq!(c.epochs, DEFAULT_EPOCHS);
        assert_eq!(c.schedule_for(3).unwrap(), (0.01, 50));
        assert_eq!(c.sweep_ansatze.len() * c.sweep_depths.len(), 30);
    }

    #[test]
    fn comments_overrides_and_errors() {
        let text = "# run\ntrain.seed = 1  # inline\nansatz.name = qaoa\n\nansatz.layers=3\n";
        let mut b = ConfigBuilder::parse(text).unwrap();
        b.set_pair("ansatz.layers=4").unwrap();
        let c = b.resolve().unwrap();
        assert_eq!(c.ansatz.to_string(), "qaoa-L4");
        assert!(ConfigBuilder::parse("nope = 1").is_err());
        assert!(ConfigBuilder::parse("train.seed").is_err());
        assert!(ConfigBuilder::parse("train.seed=1\ntrain.seed=2").is_err());
        assert!(RunConfig::parse("train.seed = x").is_err());
        assert!(RunConfig::parse("train.seed = 1\nansatz.name = sim3").is_err());
        assert!(RunConfig::parse("train.seed = 1\ndata.digits = 1,1").is_err());
        assert!(
            RunConfig::parse("train.seed = 1\ntrain.schedule = table1\ntrain.epochs = 10").is_err()
        );
    }

    #[test]
    fn schedule_sets_epochs() {
        let c = RunConfig::parse("train.seed = 1\ntrain.schedule = table1").unwrap();
        assert_eq!(c.epochs, 9);
        assert_eq!(c.schedule_for(9).unwrap(), (0.0005, 16));
    }

    #[test]
    fn canonical_text_round_trips() {
        let text = "train.seed = 9\nmodel.preset = qfe-gap\ndata.source = stub\n\
                    qfe.observables = Z0; 0.5*X1 Y2 - 0.25\ntrain.schedule = table1\n\
                    train.growth.initial_fraction = 0.25";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.observables.len(), 2);
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }
}
