use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Dataset, GroupId};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRole {
    Train,
    Validation,
    Test,
}

/// Fractions of groups per split. Validation groups are folded into the
/// training view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub test: f64,
    #[serde(default)]
    pub validation: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.8,
            test: 0.2,
            validation: 0.0,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.test, self.validation];
        if parts.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::Split(format!("fractions must lie in [0, 1]: {parts:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Split(format!("fractions sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAssignment {
    pub group: GroupId,
    pub split: SplitRole,
}

/// Group → split assignment, stored as TOML next to the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub num_classes: u32,
    pub modality_dims: Vec<usize>,
    pub seed: u64,
    #[serde(rename = "assignment")]
    pub assignments: Vec<GroupAssignment>,
}

impl DatasetManifest {
    pub fn role_of(&self, group: GroupId) -> Option<SplitRole> {
        self.assignments.iter().find(|a| a.group == group).map(|a| a.split)
    }

    pub fn groups_in(&self, role: SplitRole) -> Vec<GroupId> {
        self.assignments
            .iter()
            .filter(|a| a.split == role)
            .map(|a| a.group)
            .collect()
    }

    /// Checks the manifest against a dataset: every group assigned exactly
    /// once, train and test both non-empty.
    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        if self.num_classes != dataset.num_classes() || self.modality_dims != dataset.modality_dims() {
            return Err(Error::Split("manifest does not describe this dataset".into()));
        }
        let mut seen: Vec<GroupId> = self.assignments.iter().map(|a| a.group).collect();
        seen.sort_unstable();
        let before = seen.len();
        seen.dedup();
        if seen.len() != before {
            return Err(Error::Split("a group is assigned more than once".into()));
        }
        if seen != dataset.groups() {
            return Err(Error::Split("manifest groups differ from dataset groups".into()));
        }
        for role in [SplitRole::Train, SplitRole::Test] {
            if self.groups_in(role).is_empty() {
                return Err(Error::Split(format!("{role:?} split is empty")));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(format!("manifest: {e}")))
    }
}

/// Shuffles the dataset's groups with the seeded stream, then hands out
/// `round(train·G)` train groups, `round(validation·G)` validation groups
/// and the rest to test.
pub fn split_by_group(dataset: &Dataset, fractions: SplitFractions, seed: u64) -> Result<DatasetManifest> {
    fractions.validate()?;
    let mut groups = dataset.groups();
    let g = groups.len();
    let n_train = (fractions.train * g as f64).round() as usize;
    let n_val = (fractions.validation * g as f64).round() as usize;
    if n_train == 0 || n_train + n_val >= g {
        return Err(Error::Split(format!(
            "{g} group(s) cannot fill train {} / test {} / validation {}",
            fractions.train, fractions.test, fractions.validation
        )));
    }
    groups.shuffle(&mut rng::derive(seed, Purpose::Split, 0, 0));
    let assignments = groups
        .iter()
        .enumerate()
        .map(|(i, &group)| GroupAssignment {
            group,
            split: if i < n_train {
                SplitRole::Train
            } else if i < n_train + n_val {
                SplitRole::Validation
            } else {
                SplitRole::Test
            },
        })
        .collect();
    Ok(DatasetManifest {
        num_classes: dataset.num_classes(),
        modality_dims: dataset.modality_dims().to_vec(),
        seed,
        assignments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Sample;

    fn dataset_with_groups(groups: u32) -> Dataset {
        let samples = (0..groups * 2)
            .map(|i| Sample {
                id: i as u64,
                label: 0,
                group: i % groups,
                modalities: vec![vec![0.0]],
            })
            .collect();
        Dataset::new(1, vec![1], samples).unwrap()
    }

    #[test]
    fn ten_groups_eighty_twenty() {
        let d = dataset_with_groups(10);
        let m = split_by_group(&d, SplitFractions::default(), 3).unwrap();
        assert_eq!(m.groups_in(SplitRole::Train).len(), 8);
        assert_eq!(m.groups_in(SplitRole::Test).len(), 2);
        m.validate(&d).unwrap();
    }

    #[test]
    fn single_group_cannot_be_split() {
        let d = dataset_with_groups(1);
        assert!(matches!(
            split_by_group(&d, SplitFractions::default(), 3),
            Err(Error::Split(_))
        ));
    }

    #[test]
    fn fractions_must_sum_to_one() {
        let d = dataset_with_groups(4);
        let f = SplitFractions {
            train: 0.5,
            test: 0.2,
            validation: 0.0,
        };
        assert!(split_by_group(&d, f, 0).is_err());
    }

    #[test]
    fn golden_assignment_for_fixed_seed() {
        let d = dataset_with_groups(6);
        let m = split_by_group(&d, SplitFractions::default(), 42).unwrap();
        let text = m.to_toml();
        assert_eq!(DatasetManifest::from_toml(&text).unwrap(), m);
        let again = split_by_group(&d, SplitFractions::default(), 42).unwrap();
        assert_eq!(again.to_toml(), text);
        assert_eq!(m.groups_in(SplitRole::Train).len(), 5);
        assert_eq!(m.groups_in(SplitRole::Test).len(), 1);
        // recorded from the first run of this seed
        assert_eq!(m.groups_in(SplitRole::Test), GOLDEN_TEST_GROUPS_SEED_42);
    }

    const GOLDEN_TEST_GROUPS_SEED_42: &[GroupId] = &[1];

    #[test]
    fn validation_split_is_optional_third() {
        let d = dataset_with_groups(10);
        let f = SplitFractions {
            train: 0.6,
            test: 0.2,
            validation: 0.2,
        };
        let m = split_by_group(&d, f, 1).unwrap();
        assert_eq!(m.groups_in(SplitRole::Validation).len(), 2);
        assert_eq!(m.groups_in(SplitRole::Test).len(), 2);
    }
}
