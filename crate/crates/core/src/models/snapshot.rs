//! Parameter snapshots and the JSON model document.

use serde::{Deserialize, Serialize};

use super::autoregressive::{ArchitectureConfig, AutoregressiveGmmModel};
use super::latent::{BoxShapeCodec, LatentGaussianModel};
use super::ModelError;
use crate::space::JointLimit;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    AutoregressiveGmm,
    LatentGaussian,
}

/// Flat copy of every tunable parameter of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSnapshot {
    pub kind: ModelKind,
    pub values: Vec<f64>,
}

impl ParamSnapshot {
    /// True when both snapshots hold the same bits.
    pub fn bit_identical(&self, other: &ParamSnapshot) -> bool {
        self.kind == other.kind
            && self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelDims {
    Autoregressive { condition_dim: usize, dof: usize, hidden: Vec<usize>, components: usize, leaky_slope: f64 },
    Latent { latent_dim: usize },
}

/// Serialized form of either model kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub schema_version: u32,
    pub kind: ModelKind,
    pub dims: ModelDims,
    pub limits: Vec<[f64; 2]>,
    pub params: Vec<f64>,
    pub sigma_min: f64,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoder: Option<BoxShapeCodec>,
}

/// Either model kind, as loaded from a document.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyModel {
    Autoregressive(AutoregressiveGmmModel),
    Latent(LatentGaussianModel),
}

impl ModelDocument {
    pub fn from_autoregressive(model: &AutoregressiveGmmModel, provenance: Provenance) -> Self {
        let arch = model.architecture();
        Self {
            schema_version: MODEL_SCHEMA_VERSION,
            kind: ModelKind::AutoregressiveGmm,
            dims: ModelDims::Autoregressive {
                condition_dim: model.condition_dim(),
                dof: model.dof(),
                hidden: arch.hidden.clone(),
                components: arch.components,
                leaky_slope: arch.leaky_slope,
            },
            limits: model.joint_limits().iter().map(|l| [l.lo, l.hi]).collect(),
            params: model.params(),
            sigma_min: arch.sigma_min,
            provenance,
            decoder: None,
        }
    }

    pub fn from_latent(model: &LatentGaussianModel, provenance: Provenance) -> Self {
        Self {
            schema_version: MODEL_SCHEMA_VERSION,
            kind: ModelKind::LatentGaussian,
            dims: ModelDims::Latent { latent_dim: model.latent_dim() },
            limits: Vec::new(),
            params: model.params(),
            sigma_min: 0.0,
            provenance,
            decoder: Some(model.codec.clone()),
        }
    }

    pub fn into_model(self) -> Result<AnyModel, ModelError> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(ModelError::Schema(format!(
                "unsupported model schema version {} (expected {MODEL_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        match (self.kind, self.dims) {
            (
                ModelKind::AutoregressiveGmm,
                ModelDims::Autoregressive { condition_dim, dof, hidden, components, leaky_slope },
            ) => {
                if self.limits.len() != dof {
                    return Err(ModelError::Schema(format!("{} limits for {dof} joints", self.limits.len())));
                }
                let limits = self
                    .limits
                    .iter()
                    .map(|[lo, hi]| {
                        JointLimit::new(*lo, *hi).ok_or_else(|| ModelError::Schema(format!("bad limit [{lo}, {hi}]")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let arch = ArchitectureConfig { hidden, components, leaky_slope, sigma_min: self.sigma_min };
                Ok(AnyModel::Autoregressive(AutoregressiveGmmModel::from_parts(
                    condition_dim,
                    limits,
                    arch,
                    &self.params,
                )?))
            }
            (ModelKind::LatentGaussian, ModelDims::Latent { latent_dim }) => {
                let codec =
                    self.decoder.ok_or_else(|| ModelError::Schema("latent model without decoder block".into()))?;
                if self.params.len() != 2 * latent_dim {
                    return Err(ModelError::Schema("latent parameter vector must hold mu_z and log_sigma_z".into()));
                }
                let sigma: Vec<f64> = self.params[latent_dim..].iter().map(|l| l.exp()).collect();
                let mut model = LatentGaussianModel::new(self.params[..latent_dim].to_vec(), sigma, codec)?;
                // keep log_sigma bits exactly
                model.set_params(&self.params)?;
                Ok(AnyModel::Latent(model))
            }
            (kind, _) => Err(ModelError::Schema(format!("dims block does not match kind {kind:?}"))),
        }
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        serde_json::to_string_pretty(self).map_err(|e| ModelError::Schema(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Schema(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn autoregressive_document_round_trips_bitwise() {
        let mut r = rng::stream(1, 0);
        let arch = ArchitectureConfig { hidden: vec![6, 5], ..Default::default() };
        let m = AutoregressiveGmmModel::new(2, vec![JointLimit::symmetric(3.0); 3], arch, &mut r).unwrap();
        let json = ModelDocument::from_autoregressive(&m, Provenance { seed: Some(1), note: String::new() })
            .to_json()
            .unwrap();
        let AnyModel::Autoregressive(back) = ModelDocument::from_json(&json).unwrap().into_model().unwrap() else {
            panic!("wrong kind");
        };
        assert_eq!(back, m);
    }

    #[test]
    fn latent_document_round_trips_bitwise() {
        let mut m = LatentGaussianModel::standard(BoxShapeCodec::default()).unwrap();
        m.set_params(&[0.1, -0.2, 0.3, 0.7, -0.1, 0.013, -2.5, 0.4]).unwrap();
        let json = ModelDocument::from_latent(&m, Provenance::default()).to_json().unwrap();
        let AnyModel::Latent(back) = ModelDocument::from_json(&json).unwrap().into_model().unwrap() else {
            panic!("wrong kind");
        };
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_unknown_schema_version() {
        let m = LatentGaussianModel::standard(BoxShapeCodec::default()).unwrap();
        let mut doc = ModelDocument::from_latent(&m, Provenance::default());
        doc.schema_version = 99;
        assert!(matches!(doc.into_model(), Err(ModelError::Schema(_))));
    }
}
