//! Latent-Gaussian shape model with a frozen analytic decoder and encoder.
//!
//! The latent `z ∈ R^4` decodes to a box: three half-extents squashed into
//! `[extent_min, extent_max]` by a logistic map and a yaw `max_yaw * tanh(z_3)`.
//! The encoder fits box parameters to a cloud (minimum-area footprint search
//! over yaw, then coordinate ranges) and returns `N(z_fit, encoder_std²)`.
//! Only the latent prior `N(mu_z, diag sigma_z²)` is tunable.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ModelError;
use crate::simulators::cloud::{make_box_cloud, BoxParams, PointCloud};

pub const BOX_LATENT_DIM: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxPlacement {
    /// Bottom face on the xy plane, centered on the z axis.
    Resting,
    /// Centered on the origin.
    Centered,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxShapeCodec {
    pub points: usize,
    pub placement: BoxPlacement,
    pub extent_min: f64,
    pub extent_max: f64,
    pub max_yaw: f64,
    /// Seed of the decoder's fixed surface sampling pattern.
    pub point_seed: u64,
    pub encoder_std: f64,
}

impl Default for BoxShapeCodec {
    fn default() -> Self {
        Self {
            points: 512,
            placement: BoxPlacement::Resting,
            extent_min: 0.1,
            extent_max: 1.0,
            max_yaw: std::f64::consts::FRAC_PI_4 * 0.95,
            point_seed: 0x5eed,
            encoder_std: 0.05,
        }
    }
}

fn logit(u: f64) -> f64 {
    (u / (1.0 - u)).ln()
}

impl BoxShapeCodec {
    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = self.points >= 1
            && self.extent_min > 0.0
            && self.extent_max > self.extent_min
            && self.max_yaw > 0.0
            && self.max_yaw < std::f64::consts::FRAC_PI_4
            && self.encoder_std > 0.0;
        if ok {
            Ok(())
        } else {
            Err(ModelError::InvalidParameter(format!("invalid box codec: {self:?}")))
        }
    }

    pub fn params_from_latent(&self, z: &[f64]) -> BoxParams {
        let span = self.extent_max - self.extent_min;
        let ext = |v: f64| self.extent_min + span * super::mixture::sigmoid(v);
        BoxParams { half_extents: [ext(z[0]), ext(z[1]), ext(z[2])], yaw: self.max_yaw * z[3].tanh() }
    }

    pub fn latent_from_params(&self, p: &BoxParams) -> Vec<f64> {
        const EPS: f64 = 1e-9;
        let span = self.extent_max - self.extent_min;
        let mut z: Vec<f64> =
            p.half_extents.iter().map(|h| logit(((h - self.extent_min) / span).clamp(EPS, 1.0 - EPS))).collect();
        z.push((p.yaw / self.max_yaw).clamp(-1.0 + EPS, 1.0 - EPS).atanh());
        z
    }

    pub fn decode_params(&self, p: &BoxParams) -> PointCloud {
        let cloud = make_box_cloud(p.half_extents, p.yaw, self.points, self.point_seed)
            .expect("codec extents are positive by construction");
        match self.placement {
            BoxPlacement::Resting => cloud,
            BoxPlacement::Centered => cloud.translated([0.0, 0.0, -p.half_extents[2]]),
        }
    }

    pub fn decode(&self, z: &[f64]) -> PointCloud {
        self.decode_params(&self.params_from_latent(z))
    }

    /// Box parameters recovered from a cloud.
    pub fn fit_box(&self, cloud: &PointCloud) -> BoxParams {
        let pts = cloud.points();
        let footprint = |a: f64| {
            let (c, s) = (a.cos(), a.sin());
            let (mut u0, mut u1, mut v0, mut v1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for p in pts {
                let u = c * p[0] + s * p[1];
                let v = -s * p[0] + c * p[1];
                u0 = u0.min(u);
                u1 = u1.max(u);
                v0 = v0.min(v);
                v1 = v1.max(v);
            }
            ((u1 - u0) * (v1 - v0), [0.5 * (u1 - u0), 0.5 * (v1 - v0)])
        };
        let quarter = std::f64::consts::FRAC_PI_4;
        let steps = 180;
        let step = 2.0 * quarter / steps as f64;
        let mut best = (f64::MAX, 0.0);
        for i in 0..steps {
            let a = -quarter + step * i as f64;
            let area = footprint(a).0;
            if area < best.0 {
                best = (area, a);
            }
        }
        // golden-section refinement around the coarse minimum
        let (mut lo, mut hi) = (best.1 - step, best.1 + step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut a = hi - g * (hi - lo);
        let mut b = lo + g * (hi - lo);
        let (mut fa, mut fb) = (footprint(a).0, footprint(b).0);
        for _ in 0..60 {
            if fa < fb {
                hi = b;
                b = a;
                fb = fa;
                a = hi - g * (hi - lo);
                fa = footprint(a).0;
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + g * (hi - lo);
                fb = footprint(b).0;
            }
        }
        let mut yaw = 0.5 * (lo + hi);
        if yaw >= quarter {
            yaw -= 2.0 * quarter;
        } else if yaw < -quarter {
            yaw += 2.0 * quarter;
        }
        let [hx, hy] = footprint(yaw).1;
        let (z0, z1) = pts.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p[2]), b.max(p[2])));
        BoxParams { half_extents: [hx, hy, 0.5 * (z1 - z0)], yaw }
    }

    /// Approximate posterior `q(z | cloud)`.
    pub fn encode(&self, cloud: &PointCloud) -> DiagGaussian {
        let mean = self.latent_from_params(&self.fit_box(cloud));
        DiagGaussian { std: vec![self.encoder_std; mean.len()], mean }
    }

    /// Hex SHA-256 of the codec's serialized form; unchanged unless the frozen maps change.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("codec serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagGaussian {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// `KL(q || N(mu, diag exp(log_sigma)²))` and its gradient with respect to
/// `(mu, log_sigma)`, concatenated.
pub fn kl_diag_gaussian(q: &DiagGaussian, mu: &[f64], log_sigma: &[f64]) -> (f64, Vec<f64>) {
    let d = mu.len();
    let mut kl = 0.0;
    let mut grad = vec![0.0; 2 * d];
    for i in 0..d {
        let var_p = (2.0 * log_sigma[i]).exp();
        let diff = q.mean[i] - mu[i];
        let spread = q.std[i] * q.std[i] + diff * diff;
        kl += log_sigma[i] - q.std[i].ln() + spread / (2.0 * var_p) - 0.5;
        grad[i] = -diff / var_p;
        grad[d + i] = 1.0 - spread / var_p;
    }
    (kl, grad)
}

/// A decoded sample together with the latent it came from and the frozen
/// encoder's posterior of the decoded cloud.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentSample {
    pub latent: Vec<f64>,
    pub cloud: PointCloud,
    pub posterior: DiagGaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentGaussianModel {
    pub mu_z: Vec<f64>,
    pub log_sigma_z: Vec<f64>,
    pub codec: BoxShapeCodec,
}

impl LatentGaussianModel {
    pub fn new(mu_z: Vec<f64>, sigma_z: Vec<f64>, codec: BoxShapeCodec) -> Result<Self, ModelError> {
        codec.validate()?;
        if mu_z.len() != BOX_LATENT_DIM || sigma_z.len() != BOX_LATENT_DIM {
            return Err(ModelError::Shape(format!("box codec latent dimension is {BOX_LATENT_DIM}")));
        }
        if sigma_z.iter().any(|s| !(*s > 0.0) || !s.is_finite()) || mu_z.iter().any(|m| !m.is_finite()) {
            return Err(ModelError::InvalidParameter("latent prior needs finite mean and positive stddev".into()));
        }
        Ok(Self { mu_z, log_sigma_z: sigma_z.iter().map(|s| s.ln()).collect(), codec })
    }

    /// Standard-normal latent prior over the given codec.
    pub fn standard(codec: BoxShapeCodec) -> Result<Self, ModelError> {
        Self::new(vec![0.0; BOX_LATENT_DIM], vec![1.0; BOX_LATENT_DIM], codec)
    }

    pub fn latent_dim(&self) -> usize {
        self.mu_z.len()
    }

    pub fn sigma_z(&self) -> Vec<f64> {
        self.log_sigma_z.iter().map(|l| l.exp()).collect()
    }

    pub fn params(&self) -> Vec<f64> {
        self.mu_z.iter().chain(&self.log_sigma_z).copied().collect()
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<(), ModelError> {
        let d = self.latent_dim();
        if values.len() != 2 * d {
            return Err(ModelError::Shape(format!("expected {} latent parameters, got {}", 2 * d, values.len())));
        }
        self.mu_z.copy_from_slice(&values[..d]);
        self.log_sigma_z.copy_from_slice(&values[d..]);
        Ok(())
    }

    pub fn draw_latent<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.mu_z
            .iter()
            .zip(&self.log_sigma_z)
            .map(|(m, l)| {
                let e: f64 = rng.sample(StandardNormal);
                m + l.exp() * e
            })
            .collect()
    }

    pub fn latent_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LatentSample {
        self.sample_from_latent(self.draw_latent(rng))
    }

    pub fn sample_from_latent(&self, latent: Vec<f64>) -> LatentSample {
        let cloud = self.codec.decode(&latent);
        let posterior = self.codec.encode(&cloud);
        LatentSample { latent, cloud, posterior }
    }

    pub fn latent_kl(&self, x: &LatentSample) -> Result<f64, ModelError> {
        Ok(self.latent_kl_grad(x)?.0)
    }

    /// KL and its gradient over `(mu_z, log_sigma_z)`.
    pub fn latent_kl_grad(&self, x: &LatentSample) -> Result<(f64, Vec<f64>), ModelError> {
        if x.posterior.mean.len() != self.latent_dim() || x.posterior.std.len() != self.latent_dim() {
            return Err(ModelError::Shape("encoder posterior dimension differs from latent prior".into()));
        }
        let (kl, grad) = kl_diag_gaussian(&x.posterior, &self.mu_z, &self.log_sigma_z);
        if !kl.is_finite() {
            return Err(ModelError::NonFiniteObjective);
        }
        Ok((kl, grad))
    }
}
