use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ModelError;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Raw network outputs per mixture component: weight logit, mean, stddev pre-activation.
pub const RAW_PER_COMPONENT: usize = 3;

pub fn softplus(v: f64) -> f64 {
    if v > 30.0 {
        v
    } else if v < -30.0 {
        v.exp()
    } else {
        v.exp().ln_1p()
    }
}

pub fn inverse_softplus(v: f64) -> f64 {
    assert!(v > 0.0);
    if v > 30.0 {
        v
    } else {
        v.exp_m1().ln()
    }
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// One-dimensional Gaussian mixture emitted by a network head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureHead1D {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
}

impl MixtureHead1D {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, stddevs: Vec<f64>) -> Result<Self, ModelError> {
        let c = weights.len();
        if c == 0 || means.len() != c || stddevs.len() != c {
            return Err(ModelError::Shape(format!(
                "mixture head needs equal nonzero lengths, got {}/{}/{}",
                c,
                means.len(),
                stddevs.len()
            )));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(ModelError::InvalidParameter(format!(
                "mixture weights must be a probability vector, sum = {total}"
            )));
        }
        if stddevs.iter().any(|s| !(*s > 0.0) || !s.is_finite()) || means.iter().any(|m| !m.is_finite()) {
            return Err(ModelError::InvalidParameter("non-finite mean or non-positive stddev".into()));
        }
        Ok(Self { weights, means, stddevs })
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    /// Decodes `[logits; means; raw stddevs]` via softmax, identity and
    /// softplus plus the `sigma_min` floor.
    pub fn decode(raw: &[f64], sigma_min: f64) -> Self {
        let c = raw.len() / RAW_PER_COMPONENT;
        let logits = &raw[..c];
        let lse = log_sum_exp(logits);
        let weights = logits.iter().map(|l| (l - lse).exp()).collect();
        let means = raw[c..2 * c].to_vec();
        let stddevs = raw[2 * c..3 * c].iter().map(|s| softplus(*s) + sigma_min).collect();
        Self { weights, means, stddevs }
    }

    /// Raw outputs that decode back to this head (weights must be positive).
    pub fn encode(&self, sigma_min: f64) -> Vec<f64> {
        let mut raw: Vec<f64> = self.weights.iter().map(|w| w.ln()).collect();
        raw.extend_from_slice(&self.means);
        raw.extend(self.stddevs.iter().map(|s| inverse_softplus(s - sigma_min)));
        raw
    }

    fn component_log_terms(&self, x: f64) -> Vec<f64> {
        (0..self.components())
            .map(|c| {
                let s = self.stddevs[c];
                let z = (x - self.means[c]) / s;
                self.weights[c].ln() - LN_SQRT_2PI - s.ln() - 0.5 * z * z
            })
            .collect()
    }

    pub fn log_density(&self, x: f64) -> f64 {
        log_sum_exp(&self.component_log_terms(x))
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().zip(&self.means).map(|(w, m)| w * m).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.components() - 1;
        for (c, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                chosen = c;
                break;
            }
        }
        let z: f64 = rng.sample(StandardNormal);
        self.means[chosen] + self.stddevs[chosen] * z
    }

    /// Log-density of `x` and its gradient with respect to the raw head
    /// outputs that produced this head, written into `d_raw`.
    pub fn log_density_grad_raw(&self, raw: &[f64], x: f64, d_raw: &mut [f64]) -> f64 {
        let c = self.components();
        let terms = self.component_log_terms(x);
        let total = log_sum_exp(&terms);
        for k in 0..c {
            let resp = (terms[k] - total).exp();
            let s = self.stddevs[k];
            let diff = x - self.means[k];
            d_raw[k] = resp - self.weights[k];
            d_raw[c + k] = resp * diff / (s * s);
            let d_sigma = resp * (diff * diff / (s * s * s) - 1.0 / s);
            d_raw[2 * c + k] = d_sigma * sigmoid(raw[2 * c + k]);
        }
        total
    }
}
