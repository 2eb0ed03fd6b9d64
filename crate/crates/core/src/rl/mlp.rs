use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    pub fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Tanh),
            _ => None,
        }
    }

    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `y`.
    fn slope(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Affine layer `y = act(W x + b)` with `W` of shape `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }
}

/// Fully connected network. Batches are matrices with one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Parameter-shaped gradient (or optimizer moment) storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weight: Vec<DMatrix<f64>>,
    pub bias: Vec<DVector<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weight: net
                .layers
                .iter()
                .map(|l| DMatrix::zeros(l.outputs(), l.inputs()))
                .collect(),
            bias: net.layers.iter().map(|l| DVector::zeros(l.outputs())).collect(),
        }
    }
}

/// Per-layer inputs and pre-activations saved by the forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<DMatrix<f64>>,
    pre: Vec<DMatrix<f64>>,
    output: DMatrix<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &DMatrix<f64> {
        &self.output
    }
}

impl Mlp {
    /// Hidden layers use `hidden`, the last layer `output`. Weights are
    /// uniform in `±1/√fan_in`, the last layer in `±final_scale`.
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        final_scale: f64,
        rng: &mut R,
    ) -> Self {
        assert!(sizes.len() >= 2, "need input and output sizes");
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let (fan_in, fan_out) = (sizes[i], sizes[i + 1]);
                let last = i + 1 == n;
                let bound = if last { final_scale } else { 1.0 / (fan_in as f64).sqrt() };
                let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                Layer {
                    weight: DMatrix::from_fn(fan_out, fan_in, |_, _| dist.sample(rng)),
                    bias: DVector::from_fn(fan_out, |_, _| dist.sample(rng)),
                    activation: if last { output } else { hidden },
                }
            })
            .collect();
        Self { layers }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(Layer::outputs));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").outputs()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn zero_output_layer(&mut self) {
        let last = self.layers.last_mut().expect("nonempty");
        last.weight.fill(0.0);
        last.bias.fill(0.0);
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Dimension {
                what: "network input",
                expected: self.input_dim(),
                actual: x.ncols(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_input(x)?;
        let mut a = x.clone();
        for layer in &self.layers {
            let mut z = &a * layer.weight.transpose();
            for mut row in z.row_iter_mut() {
                row += layer.bias.transpose();
            }
            z.apply(|v| *v = layer.activation.apply(*v));
            a = z;
        }
        Ok(a)
    }

    pub fn forward_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        let m = DMatrix::from_row_slice(1, x.len(), x);
        Ok(self.forward(&m)?.iter().copied().collect())
    }

    pub fn forward_cached(&self, x: &DMatrix<f64>) -> Result<ForwardCache> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.clone();
        for layer in &self.layers {
            let mut z = &a * layer.weight.transpose();
            for mut row in z.row_iter_mut() {
                row += layer.bias.transpose();
            }
            let y = z.map(|v| layer.activation.apply(v));
            inputs.push(a);
            pre.push(z);
            a = y;
        }
        Ok(ForwardCache {
            inputs,
            pre,
            output: a,
        })
    }

    /// Gradients of a scalar loss with respect to the parameters and the
    /// network input, given `grad_out = ∂L/∂output` for the cached batch.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &DMatrix<f64>) -> (Gradients, DMatrix<f64>) {
        let n = self.layers.len();
        let mut gw = Vec::with_capacity(n);
        let mut gb = Vec::with_capacity(n);
        let mut delta = grad_out.clone();
        for i in (0..n).rev() {
            let layer = &self.layers[i];
            let y = if i + 1 == n { &cache.output } else { &cache.inputs[i + 1] };
            delta.zip_zip_apply(&cache.pre[i], y, |d, z, y| *d *= layer.activation.slope(z, y));
            gw.push(delta.transpose() * &cache.inputs[i]);
            gb.push(delta.row_sum().transpose());
            delta = &delta * &layer.weight;
        }
        gw.reverse();
        gb.reverse();
        (
            Gradients {
                weight: gw,
                bias: gb,
            },
            delta,
        )
    }

    /// `self ← τ·source + (1 − τ)·self`.
    pub fn soft_update_from(&mut self, source: &Mlp, tau: f64) {
        for (t, s) in self.layers.iter_mut().zip(&source.layers) {
            t.weight.zip_apply(&s.weight, |t, s| *t = tau * s + (1.0 - tau) * *t);
            t.bias.zip_apply(&s.bias, |t, s| *t = tau * s + (1.0 - tau) * *t);
        }
    }

    /// Euclidean distance between the parameter vectors of two networks.
    pub fn param_distance(&self, other: &Mlp) -> f64 {
        self.layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| (&a.weight - &b.weight).norm_squared() + (&a.bias - &b.bias).norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}
