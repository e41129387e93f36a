//! Model assembly, training, evaluation and the ansatz/depth sweep.

mod checkpoint;
mod config;
mod metrics;
mod model;
mod run;
mod sweep;

pub use checkpoint::{Checkpoint, MAGIC, VERSION};
pub use config::{ConfigBuilder, DataConfig, DataSource, Growth, ModelPreset, RunConfig, KEYS};
pub use metrics::{read_metrics, write_metrics, MetricsRecord, Split, METRICS_HEADER};
pub use model::{Layer, LayerSpec, Model, ModelSpec, SampleGradients, Shape};
pub use run::{
    argmax, evaluate, fit, input_shape, load_data, restore, score, train, EpochSettings,
    Evaluation, TrainArtifacts, TrainOutcome,
};
pub use sweep::{sweep, SweepEntry};
