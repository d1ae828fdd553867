//! Dense feed-forward network with leaky-ReLU hidden layers and a linear
//! output layer. Parameters live in one flat buffer, layer by layer, each
//! layer as a row-major `(out, in)` weight block followed by its biases.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    /// Layer widths including input and output, e.g. `[in, 64, 64, 64, out]`.
    pub dims: Vec<usize>,
    pub leaky_slope: f64,
    pub params: Vec<f64>,
}

/// Activations recorded by [`MlpParams::forward_cached`] for the backward pass.
#[derive(Clone, Debug, Default)]
pub struct ForwardCache {
    /// `inputs[l]` is the input vector fed to layer `l`.
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of every hidden layer.
    pre: Vec<Vec<f64>>,
}

pub fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl MlpParams {
    pub fn new_random<R: Rng + ?Sized>(dims: Vec<usize>, leaky_slope: f64, rng: &mut R) -> Self {
        assert!(dims.len() >= 2, "an MLP needs at least input and output widths");
        let mut params = Vec::with_capacity(param_count(&dims));
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound =
                if fan_in == 0 { 0.0 } else { (6.0 / fan_in as f64).sqrt() / (1.0 + leaky_slope.powi(2)).sqrt() };
            for _ in 0..fan_in * fan_out {
                params.push(rng.random_range(-1.0..=1.0) * bound);
            }
            params.extend(std::iter::repeat(0.0).take(fan_out));
        }
        Self { dims, leaky_slope, params }
    }

    pub fn from_params(dims: Vec<usize>, leaky_slope: f64, params: Vec<f64>) -> Result<Self, ModelError> {
        if dims.len() < 2 {
            return Err(ModelError::Shape("an MLP needs at least two layer widths".into()));
        }
        let expected = param_count(&dims);
        if params.len() != expected {
            return Err(ModelError::Shape(format!("expected {expected} MLP parameters, got {}", params.len())));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(ModelError::InvalidParameter("non-finite MLP parameter".into()));
        }
        Ok(Self { dims, leaky_slope, params })
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn layers(&self) -> usize {
        self.dims.len() - 1
    }

    /// Offset of layer `l`'s weight block and of its bias block.
    fn offsets(&self, l: usize) -> (usize, usize) {
        let start = param_count(&self.dims[..=l]);
        (start, start + self.dims[l] * self.dims[l + 1])
    }

    /// Mutable view of the output layer's bias block.
    pub fn output_bias_mut(&mut self) -> &mut [f64] {
        let l = self.layers() - 1;
        let (_, b) = self.offsets(l);
        let n = self.dims[l + 1];
        &mut self.params[b..b + n]
    }

    /// Mutable view of the output layer's weight block.
    pub fn output_weights_mut(&mut self) -> &mut [f64] {
        let l = self.layers() - 1;
        let (w, b) = self.offsets(l);
        &mut self.params[w..b]
    }

    fn affine(&self, l: usize, input: &[f64]) -> Vec<f64> {
        let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
        let (w, b) = self.offsets(l);
        let weights = &self.params[w..b];
        let bias = &self.params[b..b + n_out];
        (0..n_out)
            .map(|o| {
                let row = &weights[o * n_in..(o + 1) * n_in];
                bias[o] + row.iter().zip(input).map(|(a, x)| a * x).sum::<f64>()
            })
            .collect()
    }

    fn activate(&self, v: f64) -> f64 {
        if v > 0.0 {
            v
        } else {
            self.leaky_slope * v
        }
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        debug_assert_eq!(input.len(), self.input_dim());
        let mut act = input.to_vec();
        for l in 0..self.layers() {
            let mut z = self.affine(l, &act);
            if l + 1 < self.layers() {
                z.iter_mut().for_each(|v| *v = self.activate(*v));
            }
            act = z;
        }
        act
    }

    pub fn forward_cached(&self, input: &[f64], cache: &mut ForwardCache) -> Vec<f64> {
        cache.inputs.clear();
        cache.pre.clear();
        let mut act = input.to_vec();
        for l in 0..self.layers() {
            let z = self.affine(l, &act);
            cache.inputs.push(act);
            if l + 1 < self.layers() {
                act = z.iter().map(|v| self.activate(*v)).collect();
                cache.pre.push(z);
            } else {
                act = z;
            }
        }
        act
    }

    /// Accumulates `d loss / d params` into `grad` given `d loss / d output`.
    pub fn backward(&self, cache: &ForwardCache, d_out: &[f64], grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.num_params());
        let mut delta = d_out.to_vec();
        for l in (0..self.layers()).rev() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let (w, b) = self.offsets(l);
            let input = &cache.inputs[l];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                grad[b + o] += d;
                let row = &mut grad[w + o * n_in..w + (o + 1) * n_in];
                row.iter_mut().zip(input).for_each(|(g, x)| *g += d * x);
            }
            if l == 0 {
                break;
            }
            let weights = &self.params[w..b];
            let pre = &cache.pre[l - 1];
            delta = (0..n_in)
                .map(|i| {
                    let back: f64 = (0..n_out).map(|o| weights[o * n_in + i] * delta[o]).sum();
                    if pre[i] > 0.0 {
                        back
                    } else {
                        back * self.leaky_slope
                    }
                })
                .collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn backward_matches_finite_differences() {
        let mut r = rng::stream(3, 0);
        let net = MlpParams::new_random(vec![3, 5, 4, 2], 0.01, &mut r);
        let input = [0.3, -1.2, 0.8];
        let weights_out = [0.7, -0.4];
        let loss = |n: &MlpParams| n.forward(&input).iter().zip(&weights_out).map(|(a, b)| a * b).sum::<f64>();
        let mut cache = ForwardCache::default();
        net.forward_cached(&input, &mut cache);
        let mut grad = vec![0.0; net.num_params()];
        net.backward(&cache, &weights_out, &mut grad);
        let h = 1e-6;
        for (i, g) in grad.iter().enumerate() {
            let mut plus = net.clone();
            plus.params[i] += h;
            let mut minus = net.clone();
            minus.params[i] -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            assert!((fd - g).abs() < 1e-6 * (1.0 + fd.abs()), "param {i}: {fd} vs {g}");
        }
    }

    #[test]
    fn zero_input_network_outputs_depend_on_biases() {
        let mut r = rng::stream(4, 0);
        let mut net = MlpParams::new_random(vec![0, 4, 3], 0.01, &mut r);
        net.output_bias_mut().copy_from_slice(&[1.0, 2.0, 3.0]);
        assert_eq!(net.forward(&[]), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_wrong_parameter_count() {
        assert!(MlpParams::from_params(vec![2, 3], 0.01, vec![0.0; 8]).is_err());
        assert!(MlpParams::from_params(vec![2, 3], 0.01, vec![0.0; 9]).is_ok());
    }
}
