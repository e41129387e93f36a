use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenseActivation {
    Relu,
    Identity,
}

/// Fully-connected layer `h(Wx + B)`, `W` stored row-major `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    inputs: usize,
    outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    activation: DenseActivation,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    input: Vec<f64>,
    pre: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub d_input: Vec<f64>,
    pub d_weights: Vec<f64>,
    pub d_bias: Vec<f64>,
}

impl Dense {
    pub fn new(
        inputs: usize,
        outputs: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: DenseActivation,
    ) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::Shape("dense layer needs positive sizes".into()));
        }
        if weights.len() != inputs * outputs || bias.len() != outputs {
            return Err(Error::Shape(format!(
                "dense {inputs}->{outputs} got {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        Ok(Dense {
            inputs,
            outputs,
            weights,
            bias,
            activation,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn activation(&self) -> DenseActivation {
        self.activation
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, DenseCache)> {
        if x.len() != self.inputs {
            return Err(Error::Shape(format!(
                "dense layer expects {} inputs, got {}",
                self.inputs,
                x.len()
            )));
        }
        let pre: Vec<f64> = self
            .weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect();
        let out = match self.activation {
            DenseActivation::Relu => pre.iter().map(|&p| p.max(0.0)).collect(),
            DenseActivation::Identity => pre.clone(),
        };
        Ok((
            out,
            DenseCache {
                input: x.to_vec(),
                pre,
            },
        ))
    }

    pub fn backward(&self, cache: &DenseCache, upstream: &[f64]) -> Result<DenseGrads> {
        if upstream.len() != self.outputs {
            return Err(Error::Shape(format!(
                "dense upstream has {} values, expected {}",
                upstream.len(),
                self.outputs
            )));
        }
        let d_pre: Vec<f64> = match self.activation {
            DenseActivation::Relu => upstream
                .iter()
                .zip(&cache.pre)
                .map(|(&g, &p)| if p > 0.0 { g } else { 0.0 })
                .collect(),
            DenseActivation::Identity => upstream.to_vec(),
        };
        let mut d_weights = Vec::with_capacity(self.weights.len());
        for &g in &d_pre {
            d_weights.extend(cache.input.iter().map(|&x| g * x));
        }
        let mut d_input = vec![0.0; self.inputs];
        for (row, &g) in self.weights.chunks_exact(self.inputs).zip(&d_pre) {
            for (d, &w) in d_input.iter_mut().zip(row) {
                *d += g * w;
            }
        }
        Ok(DenseGrads {
            d_input,
            d_weights,
            d_bias: d_pre,
        })
    }
}
