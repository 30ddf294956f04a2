use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{uniform_init, Activation};
use crate::error::{Error, Result};
use crate::rng;

/// Two-layer perceptron `W2 sigma(W1 x + b1) + b2`.
///
/// Flat parameter layout: `W1 (H x in) | b1 (H) | W2 (out x H) | b2 (out)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    inputs: usize,
    hidden: usize,
    outputs: usize,
    activation: Activation,
    params: Vec<f64>,
}

impl Mlp {
    pub fn new(
        inputs: usize,
        hidden: usize,
        outputs: usize,
        activation: Activation,
        seed: u64,
    ) -> Result<Self> {
        Self::check_dims(inputs, hidden, outputs, &activation)?;
        let mut rng = rng::seeded(seed);
        let mut params = uniform_init(&mut rng, hidden * inputs + hidden, inputs);
        params.extend(uniform_init(&mut rng, outputs * hidden + outputs, hidden));
        Ok(Mlp {
            inputs,
            hidden,
            outputs,
            activation,
            params,
        })
    }

    pub fn from_params(
        inputs: usize,
        hidden: usize,
        outputs: usize,
        activation: Activation,
        params: Vec<f64>,
    ) -> Result<Self> {
        Self::check_dims(inputs, hidden, outputs, &activation)?;
        let expected = hidden * inputs + hidden + outputs * hidden + outputs;
        if params.len() != expected {
            return Err(Error::shape((expected, 1), (params.len(), 1)));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("non-finite parameter".into()));
        }
        Ok(Mlp {
            inputs,
            hidden,
            outputs,
            activation,
            params,
        })
    }

    fn check_dims(inputs: usize, hidden: usize, outputs: usize, act: &Activation) -> Result<()> {
        if inputs == 0 || hidden == 0 || outputs == 0 {
            return Err(Error::InvalidConfig("layer sizes must be positive".into()));
        }
        act.validate()
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.inputs;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.outputs * self.hidden;
        (b1, w2, b2)
    }

    /// Hidden pre-activations.
    fn pre_activations(&self, x: &[f64]) -> Vec<f64> {
        let (b1, _, _) = self.offsets();
        (0..self.hidden)
            .map(|h| {
                let w = &self.params[h * self.inputs..(h + 1) * self.inputs];
                self.params[b1 + h] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    fn output_from_hidden(&self, act: &[f64]) -> Vec<f64> {
        let (_, w2, b2) = self.offsets();
        (0..self.outputs)
            .map(|o| {
                let w = &self.params[w2 + o * self.hidden..w2 + (o + 1) * self.hidden];
                self.params[b2 + o] + w.iter().zip(act).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.inputs {
            return Err(Error::shape((self.inputs, 1), (x.len(), 1)));
        }
        let act: Vec<f64> = self
            .pre_activations(x)
            .into_iter()
            .map(|z| self.activation.value(z))
            .collect();
        Ok(self.output_from_hidden(&act))
    }

    /// Forward pass, then adds `d(sum upstream * output) / d params` into
    /// `grad`. Returns the output.
    pub fn backprop(&self, x: &[f64], upstream: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        if x.len() != self.inputs {
            return Err(Error::shape((self.inputs, 1), (x.len(), 1)));
        }
        if upstream.len() != self.outputs {
            return Err(Error::shape((self.outputs, 1), (upstream.len(), 1)));
        }
        if grad.len() != self.params.len() {
            return Err(Error::shape((self.params.len(), 1), (grad.len(), 1)));
        }
        let (b1, w2, b2) = self.offsets();
        let pre = self.pre_activations(x);
        let (act, dact): (Vec<f64>, Vec<f64>) =
            pre.iter().map(|&z| self.activation.eval(z)).unzip();
        let out = self.output_from_hidden(&act);

        let mut back = vec![0.0; self.hidden];
        for (o, &u) in upstream.iter().enumerate() {
            grad[b2 + o] += u;
            let row = w2 + o * self.hidden;
            for h in 0..self.hidden {
                grad[row + h] += u * act[h];
                back[h] += u * self.params[row + h];
            }
        }
        for h in 0..self.hidden {
            let d = back[h] * dact[h];
            grad[b1 + h] += d;
            for (i, &xi) in x.iter().enumerate() {
                grad[h * self.inputs + i] += d * xi;
            }
        }
        Ok(out)
    }

    /// Batched forward pass. `x` is `N x in` row-major, the result `N x out`.
    /// Hidden activations and their derivatives are kept in `ws` for a
    /// following [`Mlp::backward_batch`].
    pub fn forward_batch(&self, x: &[f64], ws: &mut BatchWorkspace) -> Result<Vec<f64>> {
        if x.is_empty() || !x.len().is_multiple_of(self.inputs) {
            return Err(Error::shape((self.inputs, 1), (x.len(), 1)));
        }
        let n = x.len() / self.inputs;
        let (b1, w2, b2) = self.offsets();
        ws.n = n;
        ws.act.resize(n * self.hidden, 0.0);
        ws.dact.resize(n * self.hidden, 0.0);
        ws.z.resize(n, 0.0);
        let mut out = vec![0.0; n * self.outputs];
        for i in 0..n {
            for o in 0..self.outputs {
                out[i * self.outputs + o] = self.params[b2 + o];
            }
        }
        for h in 0..self.hidden {
            let w = &self.params[h * self.inputs..(h + 1) * self.inputs];
            let bias = self.params[b1 + h];
            if self.inputs == 1 {
                let w0 = w[0];
                for (z, &xi) in ws.z.iter_mut().zip(x) {
                    *z = bias + w0 * xi;
                }
            } else {
                for (i, z) in ws.z.iter_mut().enumerate() {
                    let xi = &x[i * self.inputs..(i + 1) * self.inputs];
                    *z = bias + w.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            let act = &mut ws.act[h * n..(h + 1) * n];
            let dact = &mut ws.dact[h * n..(h + 1) * n];
            apply_activation(self.activation, &ws.z, act, dact);
            for o in 0..self.outputs {
                let wo = self.params[w2 + o * self.hidden + h];
                for (i, a) in act.iter().enumerate() {
                    out[i * self.outputs + o] += wo * a;
                }
            }
        }
        Ok(out)
    }

    /// Backward pass for the batch last seen by [`Mlp::forward_batch`] with
    /// the same workspace: adds the gradient of `sum upstream * output` into
    /// `grad`.
    pub fn backward_batch(
        &self,
        x: &[f64],
        upstream: &[f64],
        grad: &mut [f64],
        ws: &mut BatchWorkspace,
    ) -> Result<()> {
        let n = ws.n;
        if x.len() != n * self.inputs || ws.act.len() != n * self.hidden {
            return Err(Error::InvalidInput("workspace does not match this batch".into()));
        }
        if upstream.len() != n * self.outputs {
            return Err(Error::shape((n * self.outputs, 1), (upstream.len(), 1)));
        }
        if grad.len() != self.params.len() {
            return Err(Error::shape((self.params.len(), 1), (grad.len(), 1)));
        }
        let (b1, w2, b2) = self.offsets();
        for o in 0..self.outputs {
            grad[b2 + o] += (0..n).map(|i| upstream[i * self.outputs + o]).sum::<f64>();
        }
        // ws.z is reused as dL/dz of the current hidden unit.
        for h in 0..self.hidden {
            let act = &ws.act[h * n..(h + 1) * n];
            let dact = &ws.dact[h * n..(h + 1) * n];
            ws.z.iter_mut().for_each(|v| *v = 0.0);
            for o in 0..self.outputs {
                let wo = self.params[w2 + o * self.hidden + h];
                let mut gw = 0.0;
                for (i, (a, dz)) in act.iter().zip(ws.z.iter_mut()).enumerate() {
                    let u = upstream[i * self.outputs + o];
                    gw += u * a;
                    *dz += u * wo;
                }
                grad[w2 + o * self.hidden + h] += gw;
            }
            let mut gb = 0.0;
            for (dz, d) in ws.z.iter_mut().zip(dact) {
                *dz *= d;
                gb += *dz;
            }
            grad[b1 + h] += gb;
            for j in 0..self.inputs {
                grad[h * self.inputs + j] += ws
                    .z
                    .iter()
                    .enumerate()
                    .map(|(i, dz)| dz * x[i * self.inputs + j])
                    .sum::<f64>();
            }
        }
        Ok(())
    }
}

fn apply_activation(kind: Activation, z: &[f64], act: &mut [f64], dact: &mut [f64]) {
    match kind {
        Activation::Relu => {
            for ((a, d), &v) in act.iter_mut().zip(dact.iter_mut()).zip(z) {
                let on = v > 0.0;
                *a = if on { v } else { 0.0 };
                *d = if on { 1.0 } else { 0.0 };
            }
        }
        _ => {
            for ((a, d), &v) in act.iter_mut().zip(dact.iter_mut()).zip(z) {
                (*a, *d) = kind.eval(v);
            }
        }
    }
}

/// Scratch buffers reused across [`Mlp::forward_batch`] and [`Mlp::backward_batch`] calls.
#[derive(Debug, Clone, Default)]
pub struct BatchWorkspace {
    n: usize,
    act: Vec<f64>,
    dact: Vec<f64>,
    z: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_output_bias() {
        let mut m = Mlp::new(3, 5, 2, Activation::Tanh, 1).unwrap();
        let (_, _, b2) = m.offsets();
        let n = m.params().len();
        for p in &mut m.params_mut()[..b2] {
            *p = 0.0;
        }
        m.params_mut()[b2] = 0.7;
        m.params_mut()[n - 1] = -1.2;
        assert_eq!(m.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.7, -1.2]);
    }

    #[test]
    fn dead_relu_unit() {
        // H = 1: w1 = 1, b1 = -5, w2 = 2, b2 = 0.25; x = 1 gives z = -4.
        let m = Mlp::from_params(1, 1, 1, Activation::Relu, vec![1.0, -5.0, 2.0, 0.25]).unwrap();
        assert_eq!(m.forward(&[1.0]).unwrap(), vec![0.25]);
    }

    #[test]
    fn shape_errors() {
        let m = Mlp::new(2, 4, 1, Activation::Relu, 0).unwrap();
        assert!(m.forward(&[1.0]).is_err());
        let mut g = vec![0.0; m.params().len()];
        assert!(m.backprop(&[1.0, 2.0], &[1.0, 1.0], &mut g).is_err());
    }
}
