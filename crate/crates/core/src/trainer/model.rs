use rand::Rng;

use super::config::{ModelPreset, RunConfig};
use crate::circuits::{weight_count, AnsatzPreset};
use crate::error::{Error, Result};
use crate::gradients::SimCounter;
use crate::layers::{
    conv_output_size, gap_backward, gap_forward, maxpool_backward, maxpool_forward,
    softmax_cross_entropy, Activation, Dense, DenseActivation, DenseCache, FeatureMap, PoolCache,
    QfeCache, QfeConfig, QfeLayer,
};
use crate::optim::{init_fc_weights, init_qfe_weights};
use crate::statevector::Observable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Qfe {
        filters: usize,
    },
    MaxPool,
    Gap,
    Flatten,
    Dense {
        outputs: usize,
        activation: DenseActivation,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Map(usize, usize, usize),
    Vector(usize),
}

/// Ordered layer descriptors plus the settings shared by all QFE layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub input: (usize, usize, usize),
    pub classes: usize,
    pub layers: Vec<LayerSpec>,
    pub kernel: usize,
    pub ansatz: AnsatzPreset,
    pub observables: Vec<Observable>,
    pub activation: Activation,
}

impl ModelSpec {
    /// Expands a preset. `filters` lists QFE widths in order; for the GAP
    /// heads the last entry must produce exactly `classes` channels.
    pub fn preset(
        preset: ModelPreset,
        classes: usize,
        filters: &[usize],
        fc_widths: &[usize],
    ) -> Result<Vec<LayerSpec>> {
        use LayerSpec::*;
        let qfe = |filters| Qfe { filters };
        match preset {
            ModelPreset::Model1 => {
                let [f1, f2] = filters[..] else {
                    return Err(Error::Config(format!(
                        "model1 takes 2 filter counts, got {}",
                        filters.len()
                    )));
                };
                let mut layers = vec![qfe(f1), MaxPool, qfe(f2), MaxPool, Flatten];
                for &w in fc_widths {
                    layers.push(Dense {
                        outputs: w,
                        activation: DenseActivation::Relu,
                    });
                }
                layers.push(Dense {
                    outputs: classes,
                    activation: DenseActivation::Identity,
                });
                Ok(layers)
            }
            ModelPreset::Model2 => {
                let [f1, f2, f3] = filters[..] else {
                    return Err(Error::Config(format!(
                        "model2 takes 3 filter counts, got {}",
                        filters.len()
                    )));
                };
                Ok(vec![qfe(f1), MaxPool, qfe(f2), qfe(f3), Gap])
            }
            ModelPreset::QfeGap => {
                if filters.is_empty() {
                    return Err(Error::Config(
                        "qfe-gap needs at least one filter count".into(),
                    ));
                }
                let mut layers: Vec<_> = filters.iter().map(|&f| qfe(f)).collect();
                layers.push(Gap);
                Ok(layers)
            }
        }
    }

    pub fn from_config(config: &RunConfig, input: (usize, usize, usize)) -> Result<Self> {
        let classes = config.data.classes();
        let spec = ModelSpec {
            input,
            classes,
            layers: ModelSpec::preset(config.model, classes, &config.filters, &config.fc_widths)?,
            kernel: config.kernel,
            ansatz: config.ansatz,
            observables: config.observables.clone(),
            activation: config.activation,
        };
        spec.shapes()?;
        Ok(spec)
    }

    /// Output shape of every layer. The chain must end in `classes` logits.
    pub fn shapes(&self) -> Result<Vec<Shape>> {
        let (c, h, w) = self.input;
        let mut shape = Shape::Map(c, h, w);
        let mut out = Vec::with_capacity(self.layers.len());
        let mismatch = |i: usize, what: &str, s: Shape| {
            Error::Config(format!("layer {i} ({what}) cannot take input {s:?}"))
        };
        for (i, layer) in self.layers.iter().enumerate() {
            shape = match (*layer, shape) {
                (LayerSpec::Qfe { filters }, Shape::Map(_, h, w)) => {
                    let oh = conv_output_size(h, self.kernel, 1)
                        .map_err(|_| mismatch(i, "qfe", shape))?;
                    let ow = conv_output_size(w, self.kernel, 1)
                        .map_err(|_| mismatch(i, "qfe", shape))?;
                    Shape::Map(filters * self.observables.len(), oh, ow)
                }
                (LayerSpec::MaxPool, Shape::Map(c, h, w)) if h % 2 == 0 && w % 2 == 0 => {
                    Shape::Map(c, h / 2, w / 2)
                }
                (LayerSpec::Gap, Shape::Map(c, _, _)) => Shape::Vector(c),
                (LayerSpec::Flatten, Shape::Map(c, h, w)) => Shape::Vector(c * h * w),
                (LayerSpec::Dense { outputs, .. }, Shape::Vector(_)) => Shape::Vector(outputs),
                (l, s) => return Err(mismatch(i, &format!("{l:?}"), s)),
            };
            out.push(shape);
        }
        if shape != Shape::Vector(self.classes) {
            return Err(Error::Config(format!(
                "model ends in {shape:?}, expected {} logits",
                self.classes
            )));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub enum Layer {
    Qfe(QfeLayer),
    MaxPool,
    Gap,
    Flatten,
    Dense(Dense),
}

enum Value {
    Map(FeatureMap),
    Vector(Vec<f64>),
}

enum Cache {
    Qfe(QfeCache),
    Pool(PoolCache),
    Reshape((usize, usize, usize)),
    Dense(DenseCache),
}

/// Result of one forward+backward pass on a single sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGradients {
    pub loss: f64,
    pub logits: Vec<f64>,
    /// Same grouping as [`Model::parameters`].
    pub grads: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    layers: Vec<Layer>,
}

impl Model {
    /// QFE weights uniform on `[-π, π]`, dense weights `N(0, 0.001²)`, zero
    /// biases; drawn in layer order.
    pub fn build<R: Rng + ?Sized>(spec: ModelSpec, rng: &mut R) -> Result<Self> {
        let shapes = spec.shapes()?;
        let mut layers = Vec::with_capacity(spec.layers.len());
        let mut in_shape = Shape::Map(spec.input.0, spec.input.1, spec.input.2);
        for (layer, &out_shape) in spec.layers.iter().zip(&shapes) {
            layers.push(match (*layer, in_shape) {
                (LayerSpec::Qfe { filters }, Shape::Map(c, _, _)) => {
                    let config = QfeConfig {
                        kernel: spec.kernel,
                        observables: spec.observables.clone(),
                        activation: spec.activation,
                        ..QfeConfig::new(c, filters, spec.ansatz)
                    };
                    let per_circuit = weight_count(spec.ansatz, spec.kernel * spec.kernel)?;
                    let weights = init_qfe_weights(filters * c * per_circuit, rng);
                    let bias = vec![0.0; config.out_channels()];
                    Layer::Qfe(QfeLayer::new(config, weights, bias)?)
                }
                (LayerSpec::MaxPool, _) => Layer::MaxPool,
                (LayerSpec::Gap, _) => Layer::Gap,
                (LayerSpec::Flatten, _) => Layer::Flatten,
                (
                    LayerSpec::Dense {
                        outputs,
                        activation,
                    },
                    Shape::Vector(n),
                ) => {
                    let weights = init_fc_weights(n * outputs, rng);
                    Layer::Dense(Dense::new(
                        n,
                        outputs,
                        weights,
                        vec![0.0; outputs],
                        activation,
                    )?)
                }
                (l, s) => {
                    return Err(Error::Config(format!(
                        "layer {l:?} cannot take input {s:?}"
                    )))
                }
            });
            in_shape = out_shape;
        }
        Ok(Model { spec, layers })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Trainable groups in layer order: weights then bias for each QFE and
    /// dense layer.
    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Qfe(q) => {
                    out.push(q.weights.as_slice());
                    out.push(q.bias.as_slice());
                }
                Layer::Dense(d) => {
                    out.push(d.weights.as_slice());
                    out.push(d.bias.as_slice());
                }
                _ => {}
            }
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Qfe(q) => {
                    out.push(q.weights.as_mut_slice());
                    out.push(q.bias.as_mut_slice());
                }
                Layer::Dense(d) => {
                    out.push(d.weights.as_mut_slice());
                    out.push(d.bias.as_mut_slice());
                }
                _ => {}
            }
        }
        out
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.parameters().iter().map(|g| g.len()).collect()
    }

    /// Replaces all parameters; group count and sizes must match.
    pub fn set_parameters(&mut self, groups: &[Vec<f64>]) -> Result<()> {
        let sizes = self.group_sizes();
        if groups.len() != sizes.len() || groups.iter().zip(&sizes).any(|(g, &n)| g.len() != n) {
            return Err(Error::Shape(format!(
                "parameter groups {:?} do not match model {sizes:?}",
                groups.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        for (dst, src) in self.parameters_mut().into_iter().zip(groups) {
            dst.copy_from_slice(src);
        }
        Ok(())
    }

    fn run(
        &self,
        input: &FeatureMap,
        want_grads: bool,
        counter: &SimCounter,
    ) -> Result<(Vec<f64>, Vec<Cache>)> {
        if input.shape() != self.spec.input {
            return Err(Error::Shape(format!(
                "model expects input {:?}, got {:?}",
                self.spec.input,
                input.shape()
            )));
        }
        let mut value = Value::Map(input.clone());
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            value = match (layer, value) {
                (Layer::Qfe(q), Value::Map(m)) => {
                    let (out, cache) = q.forward(&m, want_grads, counter)?;
                    caches.push(Cache::Qfe(cache));
                    Value::Map(out)
                }
                (Layer::MaxPool, Value::Map(m)) => {
                    let (out, cache) = maxpool_forward(&m)?;
                    caches.push(Cache::Pool(cache));
                    Value::Map(out)
                }
                (Layer::Gap, Value::Map(m)) => {
                    caches.push(Cache::Reshape(m.shape()));
                    Value::Vector(gap_forward(&m))
                }
                (Layer::Flatten, Value::Map(m)) => {
                    caches.push(Cache::Reshape(m.shape()));
                    Value::Vector(m.into_data())
                }
                (Layer::Dense(d), Value::Vector(v)) => {
                    let (out, cache) = d.forward(&v)?;
                    caches.push(Cache::Dense(cache));
                    Value::Vector(out)
                }
                _ => return Err(Error::Shape("layer received the wrong tensor kind".into())),
            };
        }
        match value {
            Value::Vector(logits) => Ok((logits, caches)),
            Value::Map(_) => Err(Error::Shape("model did not end in a vector".into())),
        }
    }

    pub fn logits(&self, input: &FeatureMap, counter: &SimCounter) -> Result<Vec<f64>> {
        Ok(self.run(input, false, counter)?.0)
    }

    /// Cross-entropy against `target` and its gradient for every parameter.
    pub fn gradients(
        &self,
        input: &FeatureMap,
        target: &[f64],
        counter: &SimCounter,
    ) -> Result<SampleGradients> {
        let (logits, caches) = self.run(input, true, counter)?;
        let (loss, d_logits) = softmax_cross_entropy(&logits, target)?;
        let mut upstream = Value::Vector(d_logits);
        let mut grads_rev: Vec<Vec<f64>> = Vec::new();
        for (layer, cache) in self.layers.iter().zip(&caches).rev() {
            upstream = match (layer, cache, upstream) {
                (Layer::Qfe(q), Cache::Qfe(c), Value::Map(up)) => {
                    let g = q.backward(c, &up)?;
                    grads_rev.push(g.d_bias);
                    grads_rev.push(g.d_weights);
                    Value::Map(g.d_input)
                }
                (Layer::MaxPool, Cache::Pool(c), Value::Map(up)) => {
                    Value::Map(maxpool_backward(c, &up)?)
                }
                (Layer::Gap, Cache::Reshape(shape), Value::Vector(up)) => {
                    Value::Map(gap_backward(&up, *shape)?)
                }
                (Layer::Flatten, Cache::Reshape((c, h, w)), Value::Vector(up)) => {
                    Value::Map(FeatureMap::from_raw(*c, *h, *w, up)?)
                }
                (Layer::Dense(d), Cache::Dense(c), Value::Vector(up)) => {
                    let g = d.backward(c, &up)?;
                    grads_rev.push(g.d_bias);
                    grads_rev.push(g.d_weights);
                    Value::Vector(g.d_input)
                }
                _ => {
                    return Err(Error::Shape(
                        "backward received the wrong tensor kind".into(),
                    ))
                }
            };
        }
        grads_rev.reverse();
        Ok(SampleGradients {
            loss,
            logits,
            grads: grads_rev,
        })
    }
}
