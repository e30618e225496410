//! Samples, synthetic class streams, dataset files and group splits.

mod format;
mod split;
mod synthetic;
mod view;

use std::collections::HashSet;

pub use format::{decode, encode, load_dataset, save_dataset, MAGIC, VERSION};
pub use split::{split_by_group, DatasetManifest, GroupAssignment, SplitFractions, SplitRole};
pub use synthetic::{generate_synthetic, SceneProfile, SyntheticSpec};
pub use view::{task_view, TaskView};

use crate::error::{Error, Result};

pub type ClassId = u32;
pub type GroupId = u32;

/// One labeled instance with one vector per modality.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: u64,
    pub label: ClassId,
    pub group: GroupId,
    pub modalities: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    num_classes: u32,
    modality_dims: Vec<usize>,
    samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(num_classes: u32, modality_dims: Vec<usize>, samples: Vec<Sample>) -> Result<Self> {
        if modality_dims.is_empty() || modality_dims.len() > u8::MAX as usize {
            return Err(Error::Param(format!(
                "modality count {} outside 1..=255",
                modality_dims.len()
            )));
        }
        if modality_dims.contains(&0) {
            return Err(Error::Param("modality dims must be positive".into()));
        }
        let mut ids = HashSet::with_capacity(samples.len());
        for s in &samples {
            if !ids.insert(s.id) {
                return Err(Error::Format(format!("duplicate sample id {}", s.id)));
            }
            if s.label >= num_classes {
                return Err(Error::Format(format!(
                    "sample {} has label {} but dataset has {num_classes} classes",
                    s.id, s.label
                )));
            }
            if s.modalities.len() != modality_dims.len() {
                return Err(Error::shape(
                    format!("modality count of sample {}", s.id),
                    modality_dims.len(),
                    s.modalities.len(),
                ));
            }
            for (v, (vec, &dim)) in s.modalities.iter().zip(&modality_dims).enumerate() {
                if vec.len() != dim {
                    return Err(Error::shape(format!("sample {} modality {v}", s.id), dim, vec.len()));
                }
            }
        }
        Ok(Dataset {
            num_classes,
            modality_dims,
            samples,
        })
    }

    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }

    pub fn modality_dims(&self) -> &[usize] {
        &self.modality_dims
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn get(&self, id: u64) -> Option<&Sample> {
        self.samples.iter().find(|s| s.id == id)
    }

    /// Distinct groups in ascending order.
    pub fn groups(&self) -> Vec<GroupId> {
        let mut g: Vec<GroupId> = self.samples.iter().map(|s| s.group).collect();
        g.sort_unstable();
        g.dedup();
        g
    }
}
