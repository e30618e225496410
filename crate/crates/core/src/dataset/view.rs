use super::split::{DatasetManifest, SplitRole};
use super::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::trainer::TaskSchedule;

/// Samples visible at one task: the task's new classes from the training
/// groups, plus one test set per task seen so far.
#[derive(Debug, Clone)]
pub struct TaskView<'a> {
    pub train: Vec<&'a Sample>,
    pub tests: Vec<Vec<&'a Sample>>,
}

pub fn task_view<'a>(
    dataset: &'a Dataset,
    manifest: &DatasetManifest,
    schedule: &TaskSchedule,
    task_index: usize,
) -> Result<TaskView<'a>> {
    if task_index >= schedule.num_tasks() {
        return Err(Error::Param(format!(
            "task {task_index} out of range for a schedule of {} tasks",
            schedule.num_tasks()
        )));
    }
    let role = |s: &Sample| manifest.role_of(s.group);
    let classes = schedule.task_classes(task_index);
    let train = dataset
        .samples()
        .iter()
        .filter(|s| classes.contains(&s.label))
        .filter(|s| matches!(role(s), Some(SplitRole::Train | SplitRole::Validation)))
        .collect();
    let tests = (0..=task_index)
        .map(|t| {
            let classes = schedule.task_classes(t);
            dataset
                .samples()
                .iter()
                .filter(|s| classes.contains(&s.label) && role(s) == Some(SplitRole::Test))
                .collect()
        })
        .collect();
    Ok(TaskView { train, tests })
}
