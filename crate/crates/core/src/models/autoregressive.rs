//! Conditional autoregressive Gaussian-mixture model.
//!
//! Joint `j` has its own network mapping `[condition; x_0 .. x_{j-1}]` to the
//! raw parameters of a [`MixtureHead1D`]. Preceding coordinates are fed in
//! rescaled to `[-1, 1]` by their limits. The joint density is the product of
//! the per-joint heads evaluated at the unclamped mixture; sampling clamps each
//! coordinate to its limit before it conditions later joints.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mixture::{inverse_softplus, MixtureHead1D, RAW_PER_COMPONENT};
use super::mlp::{ForwardCache, MlpParams};
use super::ModelError;
use crate::space::JointLimit;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureConfig {
    pub hidden: Vec<usize>,
    pub components: usize,
    pub leaky_slope: f64,
    pub sigma_min: f64,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        Self { hidden: vec![64, 64, 64], components: 2, leaky_slope: 0.01, sigma_min: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoregressiveGmmModel {
    condition_dim: usize,
    joint_limits: Vec<JointLimit>,
    arch: ArchitectureConfig,
    nets: Vec<MlpParams>,
}

impl AutoregressiveGmmModel {
    /// Freshly initialized model whose heads start with means spread across
    /// each joint's interval and stddevs of a quarter of its width.
    pub fn new<R: Rng + ?Sized>(
        condition_dim: usize,
        joint_limits: Vec<JointLimit>,
        arch: ArchitectureConfig,
        rng: &mut R,
    ) -> Result<Self, ModelError> {
        validate_arch(&arch, &joint_limits)?;
        let c = arch.components;
        let nets = joint_limits
            .iter()
            .enumerate()
            .map(|(j, lim)| {
                let mut dims = vec![condition_dim + j];
                dims.extend_from_slice(&arch.hidden);
                dims.push(RAW_PER_COMPONENT * c);
                let mut net = MlpParams::new_random(dims, arch.leaky_slope, rng);
                net.output_weights_mut().iter_mut().for_each(|w| *w *= 0.1);
                let bias = net.output_bias_mut();
                for k in 0..c {
                    bias[k] = 0.0;
                    bias[c + k] = lim.lo + lim.width() * (k + 1) as f64 / (c + 1) as f64;
                    bias[2 * c + k] = inverse_softplus(lim.width() / 4.0);
                }
                net
            })
            .collect();
        Ok(Self { condition_dim, joint_limits, arch, nets })
    }

    /// Model whose heads ignore their inputs and emit the given mixtures.
    /// Hidden layers are zeroed so every head is produced by the output biases.
    pub fn with_fixed_heads<R: Rng + ?Sized>(
        condition_dim: usize,
        joint_limits: Vec<JointLimit>,
        arch: ArchitectureConfig,
        heads: &[MixtureHead1D],
        rng: &mut R,
    ) -> Result<Self, ModelError> {
        if heads.len() != joint_limits.len() {
            return Err(ModelError::Shape("one head per joint required".into()));
        }
        let mut model = Self::new(condition_dim, joint_limits, arch, rng)?;
        for (net, head) in model.nets.iter_mut().zip(heads) {
            if head.components() != model.arch.components {
                return Err(ModelError::Shape("head component count differs from architecture".into()));
            }
            net.output_weights_mut().iter_mut().for_each(|w| *w = 0.0);
            net.output_bias_mut().copy_from_slice(&head.encode(model.arch.sigma_min));
        }
        Ok(model)
    }

    pub fn from_parts(
        condition_dim: usize,
        joint_limits: Vec<JointLimit>,
        arch: ArchitectureConfig,
        params: &[f64],
    ) -> Result<Self, ModelError> {
        validate_arch(&arch, &joint_limits)?;
        let mut offset = 0;
        let mut nets = Vec::with_capacity(joint_limits.len());
        for j in 0..joint_limits.len() {
            let mut dims = vec![condition_dim + j];
            dims.extend_from_slice(&arch.hidden);
            dims.push(RAW_PER_COMPONENT * arch.components);
            let n = super::mlp::param_count(&dims);
            let slice = params
                .get(offset..offset + n)
                .ok_or_else(|| ModelError::Shape(format!("parameter vector too short: {}", params.len())))?;
            nets.push(MlpParams::from_params(dims, arch.leaky_slope, slice.to_vec())?);
            offset += n;
        }
        if offset != params.len() {
            return Err(ModelError::Shape(format!("expected {offset} parameters, got {}", params.len())));
        }
        Ok(Self { condition_dim, joint_limits, arch, nets })
    }

    pub fn condition_dim(&self) -> usize {
        self.condition_dim
    }

    pub fn dof(&self) -> usize {
        self.joint_limits.len()
    }

    pub fn joint_limits(&self) -> &[JointLimit] {
        &self.joint_limits
    }

    pub fn architecture(&self) -> &ArchitectureConfig {
        &self.arch
    }

    pub fn sigma_min(&self) -> f64 {
        self.arch.sigma_min
    }

    pub fn num_params(&self) -> usize {
        self.nets.iter().map(MlpParams::num_params).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        self.nets.iter().flat_map(|n| n.params.iter().copied()).collect()
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<(), ModelError> {
        if values.len() != self.num_params() {
            return Err(ModelError::Shape(format!("expected {} parameters, got {}", self.num_params(), values.len())));
        }
        let mut offset = 0;
        for net in &mut self.nets {
            let n = net.num_params();
            net.params.copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    fn net_input(&self, condition: &[f64], prefix: &[f64]) -> Vec<f64> {
        let mut input = Vec::with_capacity(self.condition_dim + prefix.len());
        input.extend_from_slice(condition);
        input.extend(prefix.iter().zip(&self.joint_limits).map(|(v, lim)| {
            let mid = 0.5 * (lim.lo + lim.hi);
            (v - mid) / (0.5 * lim.width())
        }));
        input
    }

    fn check_condition(&self, condition: &[f64]) -> Result<(), ModelError> {
        if condition.len() != self.condition_dim {
            return Err(ModelError::Shape(format!(
                "condition has length {}, model expects {}",
                condition.len(),
                self.condition_dim
            )));
        }
        Ok(())
    }

    fn check_sample(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.dof() {
            return Err(ModelError::Shape(format!("sample has {} joints, model has {}", x.len(), self.dof())));
        }
        for (j, (v, lim)) in x.iter().zip(&self.joint_limits).enumerate() {
            if !lim.contains(*v) {
                return Err(ModelError::OutOfLimits { joint: j, value: *v });
            }
        }
        Ok(())
    }

    fn checked_head(&self, joint: usize, raw: &[f64]) -> Result<MixtureHead1D, ModelError> {
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { joint });
        }
        let head = MixtureHead1D::decode(raw, self.arch.sigma_min);
        if head.stddevs.iter().chain(&head.weights).any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { joint });
        }
        Ok(head)
    }

    /// Mixture head of joint `joint` given the condition and preceding joints.
    pub fn head(&self, joint: usize, condition: &[f64], prefix: &[f64]) -> Result<MixtureHead1D, ModelError> {
        self.check_condition(condition)?;
        debug_assert_eq!(prefix.len(), joint);
        let raw = self.nets[joint].forward(&self.net_input(condition, prefix));
        self.checked_head(joint, &raw)
    }

    /// Draws one configuration joint by joint, clamping each to its limit.
    pub fn sample_one<R: Rng + ?Sized>(&self, condition: &[f64], rng: &mut R) -> Result<Vec<f64>, ModelError> {
        self.check_condition(condition)?;
        let mut x = Vec::with_capacity(self.dof());
        for j in 0..self.dof() {
            let head = self.head(j, condition, &x)?;
            x.push(self.joint_limits[j].clamp(head.sample(rng)));
        }
        Ok(x)
    }

    pub fn sample<R: Rng + ?Sized>(
        &self,
        condition: &[f64],
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<Vec<f64>>, ModelError> {
        if n == 0 {
            return Err(ModelError::InvalidParameter("sample count must be at least 1".into()));
        }
        (0..n).map(|_| self.sample_one(condition, rng)).collect()
    }

    pub fn log_likelihood(&self, condition: &[f64], x: &[f64]) -> Result<f64, ModelError> {
        self.check_condition(condition)?;
        self.check_sample(x)?;
        let mut total = 0.0;
        for j in 0..self.dof() {
            total += self.head(j, condition, &x[..j])?.log_density(x[j]);
        }
        if !total.is_finite() {
            return Err(ModelError::NonFinite { joint: self.dof() - 1 });
        }
        Ok(total)
    }

    /// Log-likelihood and its gradient over the flat parameter vector.
    pub fn grad_log_likelihood(&self, condition: &[f64], x: &[f64]) -> Result<(f64, Vec<f64>), ModelError> {
        let mut grad = vec![0.0; self.num_params()];
        let ll = self.accumulate_grad(condition, x, 1.0, &mut grad)?;
        Ok((ll, grad))
    }

    /// Adds `scale * d log p(x) / d params` into `grad`, returning `log p(x)`.
    pub fn accumulate_grad(
        &self,
        condition: &[f64],
        x: &[f64],
        scale: f64,
        grad: &mut [f64],
    ) -> Result<f64, ModelError> {
        self.check_condition(condition)?;
        self.check_sample(x)?;
        let mut cache = ForwardCache::default();
        let mut total = 0.0;
        let mut offset = 0;
        for (j, net) in self.nets.iter().enumerate() {
            let raw = net.forward_cached(&self.net_input(condition, &x[..j]), &mut cache);
            let head = self.checked_head(j, &raw)?;
            let mut d_raw = vec![0.0; raw.len()];
            total += head.log_density_grad_raw(&raw, x[j], &mut d_raw);
            if scale != 1.0 {
                d_raw.iter_mut().for_each(|v| *v *= scale);
            }
            let n = net.num_params();
            net.backward(&cache, &d_raw, &mut grad[offset..offset + n]);
            offset += n;
        }
        if !total.is_finite() {
            return Err(ModelError::NonFinite { joint: self.dof() - 1 });
        }
        Ok(total)
    }
}

fn validate_arch(arch: &ArchitectureConfig, limits: &[JointLimit]) -> Result<(), ModelError> {
    if limits.is_empty() {
        return Err(ModelError::Shape("model needs at least one joint".into()));
    }
    if arch.components == 0 {
        return Err(ModelError::InvalidParameter("mixture needs at least one component".into()));
    }
    if !(arch.sigma_min > 0.0) {
        return Err(ModelError::InvalidParameter("sigma_min must be positive".into()));
    }
    if limits.iter().any(|l| !(l.lo < l.hi)) {
        return Err(ModelError::InvalidParameter("joint limits need lo < hi".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn small_arch(components: usize) -> ArchitectureConfig {
        ArchitectureConfig { hidden: vec![8, 8], components, ..Default::default() }
    }

    #[test]
    fn degenerate_head_samples_near_its_mean() {
        let mut r = rng::stream(1, 0);
        let arch = ArchitectureConfig { hidden: vec![4], components: 1, ..Default::default() };
        // stddev just above the floor
        let head = MixtureHead1D::new(vec![1.0], vec![0.0], vec![arch.sigma_min + 1e-9]).unwrap();
        let m = AutoregressiveGmmModel::with_fixed_heads(
            2,
            vec![JointLimit::symmetric(1.0)],
            arch.clone(),
            &[head],
            &mut r,
        )
        .unwrap();
        for x in m.sample(&[0.4, -2.0], 200, &mut r).unwrap() {
            assert!(x[0].abs() < 6.0 * (arch.sigma_min + 1e-9));
        }
    }

    #[test]
    fn sampling_is_deterministic_given_seed() {
        let mut init = rng::stream(2, 0);
        let m = AutoregressiveGmmModel::new(2, vec![JointLimit::symmetric(3.0); 3], small_arch(2), &mut init).unwrap();
        let a = m.sample(&[0.1, 0.2], 2, &mut rng::stream(10, 1)).unwrap();
        let b = m.sample(&[0.1, 0.2], 2, &mut rng::stream(10, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn samples_respect_limits() {
        let mut r = rng::stream(3, 0);
        let pi = std::f64::consts::PI;
        let arch = ArchitectureConfig { hidden: vec![8], ..Default::default() };
        let mut m = AutoregressiveGmmModel::new(2, vec![JointLimit::symmetric(pi); 4], arch, &mut r).unwrap();
        // Inflate the heads so plenty of mass lies outside the limits.
        let wide: Vec<f64> = m.params().iter().map(|p| p * 3.0).collect();
        m.set_params(&wide).unwrap();
        for x in m.sample(&[1.0, 1.0], 10_000, &mut r).unwrap() {
            assert!(x.iter().all(|v| v.abs() <= pi));
        }
    }

    #[test]
    fn log_likelihood_rejects_out_of_limit_samples() {
        let mut r = rng::stream(4, 0);
        let m = AutoregressiveGmmModel::new(0, vec![JointLimit::symmetric(1.0); 2], small_arch(2), &mut r).unwrap();
        assert!(matches!(m.log_likelihood(&[], &[0.0, 1.5]), Err(ModelError::OutOfLimits { joint: 1, .. })));
        assert!(m.log_likelihood(&[0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn chain_rule_over_heads() {
        let mut r = rng::stream(5, 0);
        let m = AutoregressiveGmmModel::new(1, vec![JointLimit::symmetric(2.0); 3], small_arch(2), &mut r).unwrap();
        let x = [0.3, -1.1, 1.9];
        let by_heads: f64 = (0..3).map(|j| m.head(j, &[0.5], &x[..j]).unwrap().log_density(x[j])).sum();
        assert!((m.log_likelihood(&[0.5], &x).unwrap() - by_heads).abs() < 1e-12);
    }

    #[test]
    fn non_finite_parameters_fault_with_joint_index() {
        let mut r = rng::stream(6, 0);
        let mut m = AutoregressiveGmmModel::new(0, vec![JointLimit::symmetric(1.0); 2], small_arch(1), &mut r).unwrap();
        let n = m.nets[1].params.len();
        m.nets[1].params[n - 1] = f64::NAN;
        assert!(matches!(m.sample(&[], 1, &mut r), Err(ModelError::NonFinite { joint: 1 })));
    }

    #[test]
    fn parts_round_trip() {
        let mut r = rng::stream(7, 0);
        let m = AutoregressiveGmmModel::new(2, vec![JointLimit::symmetric(1.0); 2], small_arch(2), &mut r).unwrap();
        let back =
            AutoregressiveGmmModel::from_parts(2, m.joint_limits().to_vec(), m.architecture().clone(), &m.params())
                .unwrap();
        assert_eq!(back, m);
    }
}
