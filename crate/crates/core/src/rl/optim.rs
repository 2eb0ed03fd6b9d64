use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Mlp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    /// Running mean of squared gradients, no momentum.
    RmsProp,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    /// Squared-gradient decay (RMSProp) or second-moment decay (Adam).
    pub rho: f64,
    /// First-moment decay, Adam only.
    pub beta1: f64,
    pub eps: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::RmsProp,
            rho: 0.99,
            beta1: 0.9,
            eps: 1e-8,
        }
    }
}

/// Per-network optimizer state.
#[derive(Debug, Clone)]
pub struct Optimizer {
    pub config: OptimizerConfig,
    pub lr: f64,
    second: Gradients,
    first: Gradients,
    t: u64,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig, lr: f64, net: &Mlp) -> Self {
        Self {
            config,
            lr,
            second: Gradients::zeros_like(net),
            first: Gradients::zeros_like(net),
            t: 0,
        }
    }

    /// One descent step on `net` along `grads`.
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) {
        self.t += 1;
        let c = self.config;
        let lr = self.lr;
        let (bc1, bc2) = match c.kind {
            OptimizerKind::RmsProp => (1.0, 1.0),
            OptimizerKind::Adam => (
                1.0 - c.beta1.powi(self.t as i32),
                1.0 - c.rho.powi(self.t as i32),
            ),
        };
        let update = |p: &mut f64, g: f64, v: &mut f64, m: &mut f64| {
            *v = c.rho * *v + (1.0 - c.rho) * g * g;
            let num = match c.kind {
                OptimizerKind::RmsProp => g,
                OptimizerKind::Adam => {
                    *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                    *m / bc1
                }
            };
            *p -= lr * num / ((*v / bc2).sqrt() + c.eps);
        };
        for (i, layer) in net.layers.iter_mut().enumerate() {
            let (gw, gb) = (&grads.weight[i], &grads.bias[i]);
            let (vw, vb) = (&mut self.second.weight[i], &mut self.second.bias[i]);
            let (mw, mb) = (&mut self.first.weight[i], &mut self.first.bias[i]);
            for k in 0..layer.weight.len() {
                update(&mut layer.weight[k], gw[k], &mut vw[k], &mut mw[k]);
            }
            for k in 0..layer.bias.len() {
                update(&mut layer.bias[k], gb[k], &mut vb[k], &mut mb[k]);
            }
        }
    }
}
