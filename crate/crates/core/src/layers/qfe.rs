//! Quantum feature extraction layer.
//!
//! Each output filter slides an `f×f` window over the input. The window's
//! values are angle-encoded onto `f²` qubits (qubit index = row-major position
//! in the window), the filter's ansatz is applied, and the readout observable
//! is measured. With several input channels every filter keeps one weight set
//! per channel and the per-channel expectations are summed before the bias
//! and activation:
//!
//! `a[o,i,j] = σ( Σ_c ⟨H⟩(patch_c(i,j); θ[o,c]) + b[o] )`
//!
//! When several observables are configured, each filter fans out into one
//! output channel per observable (own bias, shared circuit weights).

use rayon::prelude::*;

use super::{conv_output_size, Activation, FeatureMap};
use crate::circuits::{build_ansatz, build_encoder, AnsatzPreset, CircuitTemplate};
use crate::error::{Error, Result};
use crate::gradients::{expectations, shift_sweep, PatchGradient, SimCounter};
use crate::statevector::Observable;

#[derive(Debug, Clone, PartialEq)]
pub struct QfeConfig {
    pub in_channels: usize,
    pub filters: usize,
    pub kernel: usize,
    pub stride: usize,
    pub ansatz: AnsatzPreset,
    pub observables: Vec<Observable>,
    pub activation: Activation,
}

impl QfeConfig {
    /// 3×3 kernel, stride 1, `Z` readout on qubit 0, scaled-sigmoid output.
    pub fn new(in_channels: usize, filters: usize, ansatz: AnsatzPreset) -> Self {
        QfeConfig {
            in_channels,
            filters,
            kernel: 3,
            stride: 1,
            ansatz,
            observables: vec![Observable::pauli_z(0)],
            activation: Activation::ScaledSigmoid,
        }
    }

    pub fn out_channels(&self) -> usize {
        self.filters * self.observables.len()
    }
}

#[derive(Debug, Clone)]
pub struct QfeLayer {
    config: QfeConfig,
    circuit: CircuitTemplate,
    weights_per_circuit: usize,
    /// `filters × in_channels × weights_per_circuit`, radians.
    pub weights: Vec<f64>,
    /// One entry per output channel.
    pub bias: Vec<f64>,
}

/// Forward-pass state needed by [`QfeLayer::backward`].
#[derive(Debug, Clone)]
pub struct QfeCache {
    input_shape: (usize, usize, usize),
    out_h: usize,
    out_w: usize,
    pre: Vec<f64>,
    /// Per `(filter, channel, patch)` unit, one gradient per observable.
    grads: Option<Vec<Vec<PatchGradient>>>,
}

impl QfeCache {
    /// Pre-activation values, laid out like the output map.
    pub fn pre_activations(&self) -> &[f64] {
        &self.pre
    }

    pub fn has_gradients(&self) -> bool {
        self.grads.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QfeGrads {
    pub d_input: FeatureMap,
    pub d_weights: Vec<f64>,
    pub d_bias: Vec<f64>,
}

impl QfeLayer {
    pub fn new(config: QfeConfig, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if config.in_channels == 0 || config.filters == 0 {
            return Err(Error::Config("QFE layer needs channels and filters".into()));
        }
        if config.stride == 0 {
            return Err(Error::Config("QFE stride must be positive".into()));
        }
        if config.observables.is_empty() {
            return Err(Error::Config("QFE layer needs a readout observable".into()));
        }
        let n_qubits = config.kernel * config.kernel;
        let encoder = build_encoder(n_qubits)?;
        let ansatz = build_ansatz(config.ansatz, n_qubits)?;
        for obs in &config.observables {
            if let Some(q) = obs.max_qubit() {
                if q >= n_qubits {
                    return Err(Error::Index { index: q, n_qubits });
                }
            }
        }
        let circuit = encoder.then(&ansatz)?;
        let layer = QfeLayer {
            weights_per_circuit: ansatz.n_weight_slots(),
            config,
            circuit,
            weights,
            bias,
        };
        layer.check_parameters()?;
        Ok(layer)
    }

    pub fn config(&self) -> &QfeConfig {
        &self.config
    }

    pub fn weights_per_circuit(&self) -> usize {
        self.weights_per_circuit
    }

    pub fn weight_len(&self) -> usize {
        self.config.filters * self.config.in_channels * self.weights_per_circuit
    }

    /// Parameter occurrences in the composed encoder+ansatz circuit.
    pub fn shift_occurrences(&self) -> usize {
        self.circuit.n_param_occurrences()
    }

    pub fn output_shape(&self, input: (usize, usize, usize)) -> Result<(usize, usize, usize)> {
        let (c, h, w) = input;
        if c != self.config.in_channels {
            return Err(Error::Shape(format!(
                "QFE layer expects {} channels, got {c}",
                self.config.in_channels
            )));
        }
        Ok((
            self.config.out_channels(),
            conv_output_size(h, self.config.kernel, self.config.stride)?,
            conv_output_size(w, self.config.kernel, self.config.stride)?,
        ))
    }

    fn check_parameters(&self) -> Result<()> {
        if self.weights.len() != self.weight_len() {
            return Err(Error::Shape(format!(
                "QFE layer needs {} weights, has {}",
                self.weight_len(),
                self.weights.len()
            )));
        }
        if self.bias.len() != self.config.out_channels() {
            return Err(Error::Shape(format!(
                "QFE layer needs {} biases, has {}",
                self.config.out_channels(),
                self.bias.len()
            )));
        }
        Ok(())
    }

    fn circuit_weights(&self, filter: usize, channel: usize) -> &[f64] {
        let start = (filter * self.config.in_channels + channel) * self.weights_per_circuit;
        &self.weights[start..start + self.weights_per_circuit]
    }

    pub fn forward(
        &self,
        input: &FeatureMap,
        want_grads: bool,
        counter: &SimCounter,
    ) -> Result<(FeatureMap, QfeCache)> {
        self.check_parameters()?;
        let (out_c, out_h, out_w) = self.output_shape(input.shape())?;
        let QfeConfig {
            in_channels,
            filters,
            kernel,
            stride,
            ref observables,
            activation,
            ..
        } = self.config;
        let n_obs = observables.len();
        let patches = out_h * out_w;

        let unit_results: Vec<Vec<PatchGradient>> = (0..filters * in_channels * patches)
            .into_par_iter()
            .map(|unit| {
                let filter = unit / (in_channels * patches);
                let channel = (unit / patches) % in_channels;
                let p = unit % patches;
                let (row, col) = ((p / out_w) * stride, (p % out_w) * stride);
                let mut x = Vec::with_capacity(kernel * kernel);
                for u in 0..kernel {
                    for v in 0..kernel {
                        x.push(input.get(channel, row + u, col + v));
                    }
                }
                let w = self.circuit_weights(filter, channel);
                if want_grads {
                    shift_sweep(&self.circuit, &x, w, observables, counter)
                } else {
                    let values = expectations(&self.circuit, &x, w, observables, counter)?;
                    Ok(values
                        .into_iter()
                        .map(|value| PatchGradient {
                            value,
                            d_inputs: Vec::new(),
                            d_weights: Vec::new(),
                        })
                        .collect())
                }
            })
            .collect::<Result<_>>()?;

        let mut pre = Vec::with_capacity(out_c * patches);
        #[allow(clippy::needless_range_loop)]
        for filter in 0..filters {
            for k in 0..n_obs {
                let o = filter * n_obs + k;
                for p in 0..patches {
                    let mut sum = 0.0;
                    for channel in 0..in_channels {
                        sum +=
                            unit_results[(filter * in_channels + channel) * patches + p][k].value;
                    }
                    pre.push(sum + self.bias[o]);
                }
            }
        }
        let out = pre.iter().map(|&p| activation.apply(p)).collect();
        let output = FeatureMap::new(out_c, out_h, out_w, out)?;
        let cache = QfeCache {
            input_shape: input.shape(),
            out_h,
            out_w,
            pre,
            grads: want_grads.then_some(unit_results),
        };
        Ok((output, cache))
    }

    /// Gradients of the loss with respect to the layer input, weights and
    /// biases, given `dL/dA`. Uses only the shift-rule evaluations cached by
    /// the forward pass.
    pub fn backward(&self, cache: &QfeCache, upstream: &FeatureMap) -> Result<QfeGrads> {
        if self.config.stride != 1 {
            return Err(Error::Unsupported(format!(
                "QFE backward requires stride 1, layer has stride {}",
                self.config.stride
            )));
        }
        let Some(unit_grads) = cache.grads.as_ref() else {
            return Err(Error::State(
                "forward pass was run without gradient caching".into(),
            ));
        };
        let (out_c, out_h, out_w) = (self.config.out_channels(), cache.out_h, cache.out_w);
        if upstream.shape() != (out_c, out_h, out_w) {
            return Err(Error::Shape(format!(
                "upstream {:?} does not match layer output ({out_c}, {out_h}, {out_w})",
                upstream.shape()
            )));
        }
        let (in_c, in_h, in_w) = cache.input_shape;
        let kernel = self.config.kernel;
        let n_obs = self.config.observables.len();
        let patches = out_h * out_w;
        let wpc = self.weights_per_circuit;
        let activation = self.config.activation;

        let mut d_input = FeatureMap::zeros(in_c, in_h, in_w)?;
        let mut d_weights = vec![0.0; self.weights.len()];
        let mut d_bias = vec![0.0; out_c];
        for (o, db) in d_bias.iter_mut().enumerate() {
            let (filter, k) = (o / n_obs, o % n_obs);
            for p in 0..patches {
                let flat = o * patches + p;
                let g = activation.derivative(cache.pre[flat]) * upstream.data()[flat];
                *db += g;
                let (row, col) = (p / out_w, p % out_w);
                for channel in 0..in_c {
                    let unit = &unit_grads[(filter * in_c + channel) * patches + p][k];
                    let dw = &mut d_weights[(filter * in_c + channel) * wpc..][..wpc];
                    for (d, &pd) in dw.iter_mut().zip(&unit.d_weights) {
                        *d += g * pd;
                    }
                    for u in 0..kernel {
                        for v in 0..kernel {
                            let idx = d_input.index(channel, row + u, col + v);
                            d_input.data_mut()[idx] += g * unit.d_inputs[u * kernel + v];
                        }
                    }
                }
            }
        }
        Ok(QfeGrads {
            d_input,
            d_weights,
            d_bias,
        })
    }
}
