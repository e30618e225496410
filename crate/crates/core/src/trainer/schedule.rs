use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, Dataset};
use crate::error::{Error, Result};

/// Initial block of `initial_classes`, then `num_increments` tasks of
/// `increment` classes each, taken in `class_permutation` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSchedule {
    initial_classes: usize,
    increment: usize,
    num_increments: usize,
    class_permutation: Vec<ClassId>,
}

impl TaskSchedule {
    pub fn new(
        initial_classes: usize,
        increment: usize,
        num_increments: usize,
        class_permutation: Vec<ClassId>,
    ) -> Result<Self> {
        if initial_classes == 0 {
            return Err(Error::Param("initial block needs at least one class".into()));
        }
        if num_increments > 0 && increment == 0 {
            return Err(Error::Param(
                "increment must be positive when increments are scheduled".into(),
            ));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = class_permutation.iter().find(|c| !seen.insert(**c)) {
            return Err(Error::Param(format!("class {dup} appears twice in the permutation")));
        }
        let needed = initial_classes + increment * num_increments;
        if needed > class_permutation.len() {
            return Err(Error::Param(format!(
                "schedule needs {needed} classes but the permutation lists {}",
                class_permutation.len()
            )));
        }
        Ok(TaskSchedule {
            initial_classes,
            increment,
            num_increments,
            class_permutation,
        })
    }

    pub fn initial_classes(&self) -> usize {
        self.initial_classes
    }

    pub fn increment(&self) -> usize {
        self.increment
    }

    pub fn num_increments(&self) -> usize {
        self.num_increments
    }

    pub fn num_tasks(&self) -> usize {
        1 + self.num_increments
    }

    pub fn total_classes(&self) -> usize {
        self.initial_classes + self.increment * self.num_increments
    }

    /// Classes in output-index order, truncated to the scheduled ones.
    pub fn scheduled_classes(&self) -> &[ClassId] {
        &self.class_permutation[..self.total_classes()]
    }

    fn task_range(&self, task: usize) -> (usize, usize) {
        if task == 0 {
            (0, self.initial_classes)
        } else {
            let start = self.initial_classes + (task - 1) * self.increment;
            (start, start + self.increment)
        }
    }

    /// New classes introduced at `task`.
    pub fn task_classes(&self, task: usize) -> &[ClassId] {
        let (a, b) = self.task_range(task);
        &self.class_permutation[a..b]
    }

    /// All classes learned up to and including `task`.
    pub fn seen_classes(&self, task: usize) -> &[ClassId] {
        &self.class_permutation[..self.task_range(task).1]
    }

    /// Collapses the schedule into a single task over the same classes.
    pub fn joint(&self) -> TaskSchedule {
        TaskSchedule {
            initial_classes: self.total_classes(),
            increment: self.increment,
            num_increments: 0,
            class_permutation: self.class_permutation.clone(),
        }
    }

    pub fn validate_for(&self, dataset: &Dataset) -> Result<()> {
        if let Some(c) = self.class_permutation.iter().find(|&&c| c >= dataset.num_classes()) {
            return Err(Error::Param(format!(
                "schedule references class {c} but the dataset has {} classes",
                dataset.num_classes()
            )));
        }
        Ok(())
    }
}
