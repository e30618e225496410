//! TOML run configuration.
//!
//! ```toml
//! seed = 1
//! method = "catnet"            # catnet | finetune_only | joint
//! mode = "two_stream"          # one_stream:<i> | rgb_d_concat | two_stream
//! exemplars_per_class = 20
//! distillation = true
//! renormalize_means = false
//! hidden = [128, 64]
//!
//! [data]
//! path = "bench.catd"          # manifest defaults to bench.manifest.toml
//! # or an inline [data.synthetic] table with the generator fields
//!
//! [schedule]
//! initial_classes = 4
//! increment = 2
//! num_increments = 3
//! order = "identity"           # identity | shuffled | [class ids]
//!
//! [train.initial]              # optional, defaults shown by `TrainConfig`
//! [train.incremental]
//! ```

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::{
    generate_synthetic, load_dataset, split_by_group, ClassId, Dataset, DatasetManifest, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::model::Mode;
use crate::rng::{self, Purpose};
use crate::trainer::{Method, RunSpec, TaskSchedule, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(with = "display_str")]
    pub method: Method,
    #[serde(with = "display_str")]
    pub mode: Mode,
    #[serde(default = "default_k")]
    pub exemplars_per_class: usize,
    #[serde(default = "default_true")]
    pub distillation: bool,
    #[serde(default)]
    pub renormalize_means: bool,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    pub data: DataSource,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub train: TrainSection,
}

fn default_k() -> usize {
    20
}

fn default_true() -> bool {
    true
}

fn default_hidden() -> Vec<usize> {
    vec![128, 64]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub initial_classes: usize,
    pub increment: usize,
    pub num_increments: usize,
    #[serde(default)]
    pub order: ClassOrder,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassOrder {
    #[default]
    #[serde(with = "identity_tag")]
    Identity,
    #[serde(with = "shuffled_tag")]
    Shuffled,
    Explicit(Vec<ClassId>),
}

macro_rules! unit_tag {
    ($name:ident, $tag:literal) => {
        mod $name {
            use serde::{de::Error, Deserialize, Deserializer, Serializer};

            pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str($tag)
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
                let v = String::deserialize(d)?;
                if v == $tag {
                    Ok(())
                } else {
                    Err(D::Error::custom(concat!("expected \"", $tag, "\"")))
                }
            }
        }
    };
}
unit_tag!(identity_tag, "identity");
unit_tag!(shuffled_tag, "shuffled");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default = "TrainConfig::initial_defaults")]
    pub initial: TrainConfig,
    #[serde(default = "TrainConfig::incremental_defaults")]
    pub incremental: TrainConfig,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            initial: TrainConfig::initial_defaults(),
            incremental: TrainConfig::incremental_defaults(),
        }
    }
}

mod display_str {
    use std::fmt::Display;
    use std::str::FromStr;

    use super::*;

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, T, D>(d: D) -> std::result::Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        match (&self.data.path, &self.data.synthetic) {
            (Some(_), Some(_)) => problems.push("data: give either path or synthetic, not both".to_string()),
            (None, None) => problems.push("data: one of path or synthetic is required".to_string()),
            (None, Some(spec)) => problems.extend(spec.problems().into_iter().map(|p| format!("data.synthetic: {p}"))),
            _ => {}
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            problems.push("hidden: need at least one positive layer width".to_string());
        }
        if self.method == Method::Catnet && self.distillation && self.exemplars_per_class == 0 {
            log::warn!("exemplars_per_class = 0: nothing is rehearsed or distilled");
        }
        for (name, t) in [
            ("train.initial", &self.train.initial),
            ("train.incremental", &self.train.incremental),
        ] {
            problems.extend(t.problems().into_iter().map(|p| format!("{name}: {p}")));
        }
        if self.schedule.initial_classes == 0 {
            problems.push("schedule.initial_classes must be at least 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    /// Canonical JSON of the parsed config (fixed field order, defaults
    /// filled in).
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`RunConfig::canonical`], hex encoded.
    pub fn digest(&self) -> String {
        crate::io::sha256_hex(self.canonical().as_bytes())
    }

    /// Loads or generates the dataset; relative paths resolve against
    /// `base_dir`.
    pub fn load_data(&self, base_dir: &Path) -> Result<(Dataset, DatasetManifest)> {
        if let Some(spec) = &self.data.synthetic {
            let ds = generate_synthetic(spec)?;
            let manifest = split_by_group(&ds, spec.split, spec.seed)?;
            return Ok((ds, manifest));
        }
        let path = base_dir.join(self.data.path.as_ref().expect("validated"));
        let manifest_path = self
            .data
            .manifest
            .as_ref()
            .map(|m| base_dir.join(m))
            .unwrap_or_else(|| manifest_path_for(&path));
        let ds = load_dataset(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let text =
            std::fs::read_to_string(&manifest_path).map_err(|_| Error::MissingArtifact(manifest_path.clone()))?;
        let manifest = DatasetManifest::from_toml(&text)?;
        manifest.validate(&ds).map_err(|e| Error::Config(e.to_string()))?;
        Ok((ds, manifest))
    }

    pub fn run_spec(&self, dataset: &Dataset) -> Result<RunSpec> {
        let n = dataset.num_classes();
        let order: Vec<ClassId> = match &self.schedule.order {
            ClassOrder::Identity => (0..n).collect(),
            ClassOrder::Shuffled => {
                let mut v: Vec<ClassId> = (0..n).collect();
                v.shuffle(&mut rng::derive(self.seed, Purpose::Permutation, 0, 0));
                v
            }
            ClassOrder::Explicit(v) => v.clone(),
        };
        let schedule = TaskSchedule::new(
            self.schedule.initial_classes,
            self.schedule.increment,
            self.schedule.num_increments,
            order,
        )
        .map_err(|e| Error::Config(format!("schedule: {e}")))?;
        schedule
            .validate_for(dataset)
            .map_err(|e| Error::Config(format!("schedule: {e}")))?;
        self.mode
            .check_dataset(dataset.modality_dims())
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(RunSpec {
            schedule,
            initial: TrainConfig {
                seed: self.seed,
                ..self.train.initial.clone()
            },
            incremental: TrainConfig {
                seed: self.seed,
                ..self.train.incremental.clone()
            },
            mode: self.mode,
            method: self.method,
            capacity: self.exemplars_per_class,
            distillation: self.distillation,
            renormalize_means: self.renormalize_means,
            hidden: self.hidden.clone(),
            seed: self.seed,
        })
    }
}

/// `data.catd` → `data.manifest.toml`.
pub fn manifest_path_for(dataset_path: &Path) -> PathBuf {
    dataset_path.with_extension("manifest.toml")
}
