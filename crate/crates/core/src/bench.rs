//! The synthetic forgetting benchmark used by the acceptance suite.
//!
//! Ten classes with two 16-dimensional modalities, 60 samples per class
//! spread over six groups. Even groups carry doubled noise on modality 0,
//! odd groups on modality 1, so each modality alone is unreliable for half
//! the groups. Schedule: 4 initial classes, then 3 increments of 2.

use crate::config::{ClassOrder, DataSource, RunConfig, ScheduleConfig, TrainSection};
use crate::dataset::{SceneProfile, SplitFractions, SyntheticSpec};
use crate::model::Mode;
use crate::trainer::{Method, TrainConfig};

pub const CLEAN_NOISE: f64 = 1.0;
pub const CORRUPT_NOISE: f64 = 2.0;

pub fn scene_profiles() -> Vec<SceneProfile> {
    (0..6)
        .map(|g| SceneProfile {
            group: g,
            multipliers: if g % 2 == 0 {
                vec![CORRUPT_NOISE, CLEAN_NOISE]
            } else {
                vec![CLEAN_NOISE, CORRUPT_NOISE]
            },
        })
        .collect()
}

pub fn data_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        classes: 10,
        modality_dims: vec![16, 16],
        samples_per_class: 60,
        groups: 6,
        separation: 2.0,
        noise_std: 0.35,
        scene_profiles: scene_profiles(),
        seed,
        split: SplitFractions {
            train: 0.5,
            test: 0.5,
            validation: 0.0,
        },
    }
}

pub fn train_section() -> TrainSection {
    TrainSection {
        initial: TrainConfig {
            batch_size: 32,
            epochs: 50,
            lr_drop_epoch: 25,
            ..TrainConfig::initial_defaults()
        },
        incremental: TrainConfig {
            batch_size: 32,
            epochs: 12,
            lr_drop_epoch: 6,
            ..TrainConfig::incremental_defaults()
        },
    }
}

pub fn config(seed: u64, method: Method, mode: Mode, exemplars_per_class: usize) -> RunConfig {
    RunConfig {
        seed,
        method,
        mode,
        exemplars_per_class,
        distillation: true,
        renormalize_means: false,
        hidden: vec![64, 32],
        data: DataSource {
            path: None,
            manifest: None,
            synthetic: Some(data_spec(seed)),
        },
        schedule: ScheduleConfig {
            initial_classes: 4,
            increment: 2,
            num_increments: 3,
            order: ClassOrder::Identity,
        },
        train: train_section(),
    }
}
