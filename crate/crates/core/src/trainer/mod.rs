//! Incremental training: soft targets from a pre-task snapshot, then the
//! combined cross-entropy + distillation objective over a task's epochs.

mod loss;
mod pipeline;
mod schedule;

pub use loss::{cross_entropy, distillation, task_loss, LabeledInput, LossOutput, SoftInput};
pub use pipeline::{run_schedule, Method, NoopObserver, NormAudit, RunObserver, RunOutcome, RunSpec};
pub use schedule::TaskSchedule;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exemplar::ExemplarStore;
use crate::model::InputView;
use crate::nn::{ModelSnapshot, Network, OptimizerState};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr_initial: f64,
    /// First (1-based) epoch that runs at `lr_initial / lr_drop_factor`.
    pub lr_drop_epoch: usize,
    pub lr_drop_factor: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    #[serde(default)]
    pub seed: u64,
}

impl TrainConfig {
    /// Initial-block defaults: 50 epochs, lr 0.001 divided by 10 at epoch 25.
    pub fn initial_defaults() -> Self {
        TrainConfig {
            batch_size: 64,
            epochs: 50,
            lr_initial: 0.001,
            lr_drop_epoch: 25,
            lr_drop_factor: 10.0,
            momentum: 0.9,
            weight_decay: 0.001,
            seed: 0,
        }
    }

    /// Increment defaults: 12 epochs, lr 0.001 divided by 10 at epoch 6.
    pub fn incremental_defaults() -> Self {
        TrainConfig {
            epochs: 12,
            lr_drop_epoch: 6,
            ..TrainConfig::initial_defaults()
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.batch_size == 0 {
            out.push("batch_size must be at least 1".to_string());
        }
        if self.epochs == 0 {
            out.push("epochs must be at least 1".to_string());
        }
        if !(self.lr_initial > 0.0 && self.lr_initial.is_finite()) {
            out.push(format!("lr_initial must be positive, got {}", self.lr_initial));
        }
        if self.lr_drop_epoch == 0 || self.lr_drop_epoch > self.epochs {
            out.push(format!(
                "lr_drop_epoch must lie in 1..={}, got {}",
                self.epochs, self.lr_drop_epoch
            ));
        }
        if !(self.lr_drop_factor > 0.0 && self.lr_drop_factor.is_finite()) {
            out.push(format!("lr_drop_factor must be positive, got {}", self.lr_drop_factor));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            out.push(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            out.push(format!("weight_decay must be non-negative, got {}", self.weight_decay));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Param(p.join("; ")))
        }
    }

    /// Learning rate for a 1-based epoch.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        if epoch >= self.lr_drop_epoch {
            self.lr_initial / self.lr_drop_factor
        } else {
            self.lr_initial
        }
    }
}

/// Old-class soft targets for each cached sample, recorded from a frozen
/// snapshot before the task's first update.
#[derive(Debug, Clone, PartialEq)]
pub struct DistillationTargets {
    pub sample_ids: Vec<u64>,
    pub q: Vec<Vec<f64>>,
    pub old_classes: usize,
    /// Update count of the network the snapshot was taken from.
    pub taken_at_update: u64,
}

/// Evaluates the snapshot on every cached sample (class-arrival order) and
/// keeps the softmax over the store's classes.
pub fn snapshot_targets(
    snapshot: &ModelSnapshot,
    store: &ExemplarStore,
    view: InputView,
) -> Result<DistillationTargets> {
    let old_classes = store.class_order().len();
    if old_classes == 0 || old_classes > snapshot.output_classes() {
        return Err(Error::shape(
            "snapshot old classes",
            snapshot.output_classes(),
            old_classes,
        ));
    }
    let mut sample_ids = Vec::with_capacity(store.len());
    let mut q = Vec::with_capacity(store.len());
    for s in store.iter() {
        let out = snapshot.forward(&view.input(s)?)?;
        q.push(crate::nn::softmax(&out.logits[..old_classes]));
        sample_ids.push(s.id);
    }
    Ok(DistillationTargets {
        sample_ids,
        q,
        old_classes,
        taken_at_update: snapshot.taken_at_update(),
    })
}

/// Target for a rehearsed exemplar.
#[derive(Debug, Clone, PartialEq)]
pub enum CachedTarget {
    /// Distillation against old-class soft targets.
    Soft(Vec<f64>),
    /// Plain cross-entropy on the stored label (distillation disabled).
    Hard(usize),
}

/// Inputs for one stream of one task, already mapped to network inputs and
/// output indices.
#[derive(Debug, Clone, Default)]
pub struct TrainSet {
    pub new: Vec<(Vec<f64>, usize)>,
    pub cached: Vec<(Vec<f64>, CachedTarget)>,
    /// Must equal the network's update count when training starts.
    pub targets_taken_at: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub task: usize,
    pub stream: usize,
    pub epoch: usize,
    pub step: usize,
    pub lr: f64,
    pub loss_ce: f64,
    pub loss_distill: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Learning rate used in each epoch.
    pub lr_trace: Vec<f64>,
    pub steps: usize,
}

/// Runs `config.epochs` epochs. Every step takes `batch_size/2` shuffled
/// new samples plus the rest of the batch from the cycling exemplar queue,
/// or a full batch of new samples when nothing is cached.
pub fn train_task(
    net: &mut Network,
    data: &TrainSet,
    config: &TrainConfig,
    task: usize,
    stream: usize,
    on_step: &mut dyn FnMut(StepRecord),
) -> Result<TrainReport> {
    config.validate()?;
    if data.new.is_empty() {
        return Err(Error::Param("task has no new-class samples".into()));
    }
    if let Some(at) = data.targets_taken_at {
        if at != net.updates() {
            return Err(Error::Param(format!(
                "distillation targets were taken at update {at} but the network is at update {}",
                net.updates()
            )));
        }
    }
    let mut rng = rng::derive(config.seed, Purpose::Shuffle, task, stream);
    let mut opt = OptimizerState::new(net, config.lr_initial, config.momentum, config.weight_decay)?;

    let (new_per_step, cached_per_step) = if data.cached.is_empty() {
        (config.batch_size, 0)
    } else {
        let half = (config.batch_size / 2).max(1);
        (half, (config.batch_size - half).max(1).min(data.cached.len()))
    };

    let mut queue: Vec<usize> = Vec::new();
    let mut queue_pos = 0;
    let mut order: Vec<usize> = (0..data.new.len()).collect();
    let mut lr_trace = Vec::with_capacity(config.epochs);
    let mut step = 0;

    for epoch in 1..=config.epochs {
        let lr = config.lr_at(epoch);
        opt.learning_rate = lr;
        lr_trace.push(lr);
        order.shuffle(&mut rng);
        for chunk in order.chunks(new_per_step) {
            let mut hard: Vec<LabeledInput> = chunk
                .iter()
                .map(|&i| LabeledInput {
                    input: &data.new[i].0,
                    label: data.new[i].1,
                })
                .collect();
            let mut soft = Vec::with_capacity(cached_per_step);
            for _ in 0..cached_per_step {
                if queue_pos == queue.len() {
                    queue = (0..data.cached.len()).collect();
                    queue.shuffle(&mut rng);
                    queue_pos = 0;
                }
                let (input, target) = &data.cached[queue[queue_pos]];
                queue_pos += 1;
                match target {
                    CachedTarget::Soft(q) => soft.push(SoftInput { input, q }),
                    CachedTarget::Hard(label) => hard.push(LabeledInput { input, label: *label }),
                }
            }
            let out = task_loss(net, &hard, &soft)?;
            if !out.total().is_finite() {
                return Err(Error::NonFiniteLoss { batch: step });
            }
            opt.sgd_step(net, &out.grads)?;
            on_step(StepRecord {
                task,
                stream,
                epoch,
                step,
                lr,
                loss_ce: out.cross_entropy,
                loss_distill: out.distillation,
            });
            step += 1;
        }
    }
    Ok(TrainReport { lr_trace, steps: step })
}
