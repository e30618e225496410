//! Gaussian class clusters per modality.
//!
//! Generation order is fixed: with one ChaCha8 stream seeded from `seed`,
//! first every class center (class-major, then modality) is drawn as a
//! standard-normal vector rescaled to length `separation`; then for each
//! class, for each sample index `i`, the sample gets group `i % groups` and
//! one standard-normal draw per coordinate per modality scaled by
//! `noise_std × multiplier(group, modality)`.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::split::SplitFractions;
use super::{Dataset, GroupId, Sample};
use crate::error::{Error, Result};
use crate::nn::l2_norm;
use crate::rng::{self, Purpose};

/// Per-group noise multipliers, one per modality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneProfile {
    pub group: GroupId,
    pub multipliers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub classes: u32,
    pub modality_dims: Vec<usize>,
    pub samples_per_class: usize,
    pub groups: u32,
    pub separation: f64,
    #[serde(default = "default_noise")]
    pub noise_std: f64,
    #[serde(default)]
    pub scene_profiles: Vec<SceneProfile>,
    pub seed: u64,
    #[serde(default)]
    pub split: SplitFractions,
}

fn default_noise() -> f64 {
    1.0
}

impl SyntheticSpec {
    /// Every invalid field, one message each.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.classes == 0 {
            out.push("classes must be at least 1".to_string());
        }
        if self.modality_dims.is_empty() {
            out.push("modality_dims must list at least one modality".to_string());
        }
        for (i, &d) in self.modality_dims.iter().enumerate() {
            if d == 0 {
                out.push(format!("modality_dims[{i}] must be positive"));
            }
        }
        if self.samples_per_class == 0 {
            out.push("samples_per_class must be at least 1".to_string());
        }
        if self.groups == 0 {
            out.push("groups must be at least 1".to_string());
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            out.push(format!("separation must be positive, got {}", self.separation));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            out.push(format!("noise_std must be non-negative, got {}", self.noise_std));
        }
        for p in &self.scene_profiles {
            if p.group >= self.groups {
                out.push(format!("scene profile for unknown group {}", p.group));
            }
            if p.multipliers.len() != self.modality_dims.len() {
                out.push(format!(
                    "scene profile for group {} has {} multipliers, expected {}",
                    p.group,
                    p.multipliers.len(),
                    self.modality_dims.len()
                ));
            }
            if p.multipliers.iter().any(|m| !(*m >= 0.0 && m.is_finite())) {
                out.push(format!(
                    "scene profile for group {} has a negative or non-finite multiplier",
                    p.group
                ));
            }
        }
        if let Err(e) = self.split.validate() {
            out.push(e.to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Param(problems.join("; ")))
        }
    }

    fn multiplier(&self, group: GroupId, modality: usize) -> f64 {
        self.scene_profiles
            .iter()
            .rev()
            .find(|p| p.group == group)
            .map_or(1.0, |p| p.multipliers[modality])
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = rng::derive(spec.seed, Purpose::Data, 0, 0);
    let gauss = |rng: &mut rng::Rng| -> f64 { StandardNormal.sample(rng) };

    let mut centers = Vec::with_capacity(spec.classes as usize);
    for _ in 0..spec.classes {
        let mut per_mod = Vec::with_capacity(spec.modality_dims.len());
        for &dim in &spec.modality_dims {
            let raw: Vec<f64> = loop {
                let v: Vec<f64> = (0..dim).map(|_| gauss(&mut rng)).collect();
                if l2_norm(&v) > 0.0 {
                    break v;
                }
            };
            let norm = l2_norm(&raw);
            per_mod.push(raw.iter().map(|x| x / norm * spec.separation).collect::<Vec<f64>>());
        }
        centers.push(per_mod);
    }

    let spc = spec.samples_per_class;
    let mut samples = Vec::with_capacity(spec.classes as usize * spc);
    for (c, class_centers) in centers.iter().enumerate() {
        for i in 0..spc {
            let group = (i % spec.groups as usize) as GroupId;
            let modalities = class_centers
                .iter()
                .enumerate()
                .map(|(v, center)| {
                    let scale = spec.noise_std * spec.multiplier(group, v);
                    center.iter().map(|&m| m + scale * gauss(&mut rng)).collect()
                })
                .collect();
            samples.push(Sample {
                id: (c * spc + i) as u64,
                label: c as u32,
                group,
                modalities,
            });
        }
    }
    Dataset::new(spec.classes, spec.modality_dims.clone(), samples)
}
