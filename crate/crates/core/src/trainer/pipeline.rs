use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::{snapshot_targets, train_task, CachedTarget, StepRecord, TaskSchedule, TrainConfig, TrainReport, TrainSet};
use crate::classify::{classify_batch, PredictionRow};
use crate::dataset::{task_view, ClassId, Dataset, DatasetManifest, Sample};
use crate::error::{Error, Result};
use crate::evaluate::{accuracy, AccuracyMatrix};
use crate::exemplar::{compute_mean_matrix, ExemplarStore, FeatureMeanMatrix};
use crate::model::{FeatureExtractor, Learner, Mode};
use crate::nn::{Feature, Network};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Catnet,
    /// No exemplars and no distillation.
    FinetuneOnly,
    /// One task over every scheduled class.
    Joint,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Catnet => "catnet",
            Method::FinetuneOnly => "finetune_only",
            Method::Joint => "joint",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "catnet" => Ok(Method::Catnet),
            "finetune_only" => Ok(Method::FinetuneOnly),
            "joint" => Ok(Method::Joint),
            _ => Err(Error::Config(format!(
                "unknown method {s:?}; expected catnet, finetune_only or joint"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub schedule: TaskSchedule,
    pub initial: TrainConfig,
    pub incremental: TrainConfig,
    pub mode: Mode,
    pub method: Method,
    /// Exemplars per class.
    pub capacity: usize,
    pub distillation: bool,
    pub renormalize_means: bool,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl RunSpec {
    /// Schedule, capacity and distillation after applying the method.
    fn effective(&self) -> (TaskSchedule, usize, bool) {
        match self.method {
            Method::Catnet => (self.schedule.clone(), self.capacity, self.distillation),
            Method::FinetuneOnly => (self.schedule.clone(), 0, false),
            Method::Joint => (self.schedule.joint(), self.capacity, false),
        }
    }
}

/// Running statistics of every per-stream feature extracted in a run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NormAudit {
    pub count: usize,
    pub zero_norm: usize,
    /// Largest `|‖f‖₂ − 1|` over non-flagged features.
    pub max_deviation: f64,
}

impl NormAudit {
    fn record(&mut self, f: &Feature) {
        self.count += 1;
        if f.zero_norm {
            self.zero_norm += 1;
        } else {
            let dev = (crate::nn::l2_norm(&f.vector) - 1.0).abs();
            self.max_deviation = self.max_deviation.max(dev);
        }
    }
}

struct Audited<'a> {
    inner: &'a Learner,
    audit: &'a RefCell<NormAudit>,
}

impl FeatureExtractor for Audited<'_> {
    fn feature_dim(&self) -> usize {
        self.inner.feature_dim()
    }

    fn extract_streams(&self, sample: &Sample) -> Result<Vec<Feature>> {
        let streams = self.inner.extract_streams(sample)?;
        let mut audit = self.audit.borrow_mut();
        for f in &streams {
            audit.record(f);
        }
        Ok(streams)
    }
}

/// Hooks for logging and checkpointing during [`run_schedule`].
pub trait RunObserver {
    fn on_step(&mut self, _record: &StepRecord) {}

    fn on_task_end(&mut self, _task: usize, _learner: &Learner, _store: &ExemplarStore) -> Result<()> {
        Ok(())
    }
}

pub struct NoopObserver;

impl RunObserver for NoopObserver {}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub learner: Learner,
    pub store: ExemplarStore,
    /// Accuracy matrix under the run's inference rule (NME when exemplars
    /// exist, softmax head otherwise).
    pub matrix: AccuracyMatrix,
    /// Same matrix with the softmax head.
    pub softmax_matrix: AccuracyMatrix,
    pub means: Option<FeatureMeanMatrix>,
    /// Final model accuracy over all scheduled test samples pooled.
    pub micro_accuracy: f64,
    pub predictions: Vec<PredictionRow>,
    /// `[task][stream]` learning-rate trace per epoch.
    pub lr_traces: Vec<Vec<Vec<f64>>>,
    pub audit: NormAudit,
    pub skipped_samples: usize,
}

pub fn run_schedule(
    dataset: &Dataset,
    manifest: &DatasetManifest,
    spec: &RunSpec,
    observer: &mut dyn RunObserver,
) -> Result<RunOutcome> {
    let (schedule, capacity, distill) = spec.effective();
    schedule.validate_for(dataset)?;
    manifest.validate(dataset)?;
    spec.mode.check_dataset(dataset.modality_dims())?;
    spec.initial.validate()?;
    spec.incremental.validate()?;

    let out_index: HashMap<ClassId, usize> = schedule
        .scheduled_classes()
        .iter()
        .enumerate()
        .map(|(i, &c)| (c, i))
        .collect();
    let views = spec.mode.views();
    let audit = RefCell::new(NormAudit::default());

    let mut learner: Option<Learner> = None;
    let mut store = ExemplarStore::new(capacity);
    let mut means = None;
    let n_tasks = schedule.num_tasks();
    let mut matrix = AccuracyMatrix::new(n_tasks);
    let mut softmax_matrix = AccuracyMatrix::new(n_tasks);
    let mut lr_traces = Vec::with_capacity(n_tasks);
    let mut predictions = Vec::new();
    let mut micro_accuracy = 0.0;
    let mut skipped = 0;

    for task in 0..n_tasks {
        let view = task_view(dataset, manifest, &schedule, task).map_err(|e| e.in_task(task))?;
        let new_classes = schedule.task_classes(task);
        let config = TrainConfig {
            seed: spec.seed,
            ..if task == 0 {
                spec.initial.clone()
            } else {
                spec.incremental.clone()
            }
        };

        let mut current = match learner.take() {
            None => {
                let nets = views
                    .iter()
                    .enumerate()
                    .map(|(s, v)| {
                        let dim = v.input_dim(dataset.modality_dims())?;
                        Network::new(
                            dim,
                            &spec.hidden,
                            new_classes.len(),
                            &mut rng::derive(spec.seed, Purpose::Init, 0, s),
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                Learner::new(spec.mode, nets)?
            }
            Some(mut l) => {
                for (s, net) in l.nets_mut().iter_mut().enumerate() {
                    net.expand_output(new_classes.len(), &mut rng::derive(spec.seed, Purpose::Expand, task, s));
                }
                l
            }
        };

        // per-stream training data; soft targets come from a snapshot taken
        // before any update of this task
        let mut sets = Vec::with_capacity(views.len());
        for (s, v) in views.iter().enumerate() {
            let new = view
                .train
                .iter()
                .map(|x| Ok((v.input(x)?, out_index[&x.label])))
                .collect::<Result<Vec<_>>>()?;
            let (cached, taken_at) = if store.is_empty() {
                (Vec::new(), None)
            } else if distill {
                let net = &current.nets()[s];
                let targets = snapshot_targets(&net.snapshot(), &store, *v)?;
                let cached = store
                    .iter()
                    .zip(targets.q)
                    .map(|(x, q)| Ok((v.input(x)?, CachedTarget::Soft(q))))
                    .collect::<Result<Vec<_>>>()?;
                (cached, Some(targets.taken_at_update))
            } else {
                let cached = store
                    .iter()
                    .map(|x| Ok((v.input(x)?, CachedTarget::Hard(out_index[&x.label]))))
                    .collect::<Result<Vec<_>>>()?;
                (cached, None)
            };
            sets.push(TrainSet {
                new,
                cached,
                targets_taken_at: taken_at,
            });
        }

        let (reports, logs) = train_streams(current.nets_mut(), &sets, &config, task).map_err(|e| e.in_task(task))?;
        for rec in logs.iter().flatten() {
            observer.on_step(rec);
        }
        lr_traces.push(reports.into_iter().map(|r| r.lr_trace).collect());

        let extractor = Audited {
            inner: &current,
            audit: &audit,
        };
        let grouped: Vec<(ClassId, Vec<&Sample>)> = new_classes
            .iter()
            .map(|&c| (c, view.train.iter().copied().filter(|s| s.label == c).collect()))
            .collect();
        store.update(&grouped, &extractor).map_err(|e| e.in_task(task))?;
        means = if capacity > 0 {
            Some(compute_mean_matrix(&store, &extractor, spec.renormalize_means).map_err(|e| e.in_task(task))?)
        } else {
            None
        };

        let seen = schedule.seen_classes(task).len();
        let mut row = Vec::with_capacity(task + 1);
        let mut softmax_row = Vec::with_capacity(task + 1);
        let last = task + 1 == n_tasks;
        let (mut hits, mut total) = (0usize, 0usize);
        for test in &view.tests {
            let mut preds = Vec::with_capacity(test.len());
            let mut truths = Vec::with_capacity(test.len());
            let mut soft_preds = Vec::with_capacity(test.len());
            let mut soft_truths = Vec::with_capacity(test.len());
            for s in test {
                if let Ok(i) = current.predict_softmax(s, seen) {
                    soft_preds.push(schedule.scheduled_classes()[i]);
                    soft_truths.push(s.label);
                }
            }
            match &means {
                Some(m) => {
                    let batch = classify_batch(test, &extractor, m);
                    skipped += batch.failures.len();
                    for (p, s) in batch.predictions.iter().zip(test) {
                        if let Some(p) = p {
                            preds.push(p.class);
                            truths.push(s.label);
                            if last {
                                predictions.push(PredictionRow {
                                    sample_id: s.id,
                                    true_class: s.label,
                                    pred_class: p.class,
                                    distance_to_pred: Some(p.distance),
                                    distance_margin: Some(p.margin),
                                });
                            }
                        }
                    }
                }
                None => {
                    skipped += test.len() - soft_preds.len();
                    preds = soft_preds.clone();
                    truths = soft_truths.clone();
                    if last {
                        predictions.extend(test.iter().zip(&soft_preds).map(|(s, &p)| PredictionRow {
                            sample_id: s.id,
                            true_class: s.label,
                            pred_class: p,
                            distance_to_pred: None,
                            distance_margin: None,
                        }));
                    }
                }
            }
            hits += preds.iter().zip(&truths).filter(|(a, b)| a == b).count();
            total += preds.len();
            row.push(accuracy(&preds, &truths).map_err(|e| e.in_task(task))?);
            softmax_row.push(accuracy(&soft_preds, &soft_truths).map_err(|e| e.in_task(task))?);
        }
        matrix.set_row(task, &row)?;
        softmax_matrix.set_row(task, &softmax_row)?;
        if last {
            micro_accuracy = hits as f64 / total.max(1) as f64;
        }
        log::info!("task {task}: R row {row:?}");
        observer
            .on_task_end(task, &current, &store)
            .map_err(|e| e.in_task(task))?;
        learner = Some(current);
    }

    Ok(RunOutcome {
        learner: learner.expect("at least one task ran"),
        store,
        matrix,
        softmax_matrix,
        means,
        micro_accuracy,
        predictions,
        lr_traces,
        audit: audit.into_inner(),
        skipped_samples: skipped,
    })
}

type StreamResults = (Vec<TrainReport>, Vec<Vec<StepRecord>>);

/// Trains each stream's network on its own data; streams run on separate
/// threads and their step logs are returned in stream order.
fn train_streams(nets: &mut [Network], sets: &[TrainSet], config: &TrainConfig, task: usize) -> Result<StreamResults> {
    let results: Vec<Result<(TrainReport, Vec<StepRecord>)>> = if nets.len() == 1 {
        let mut log = Vec::new();
        vec![train_task(&mut nets[0], &sets[0], config, task, 0, &mut |r| log.push(r)).map(|rep| (rep, log))]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = nets
                .iter_mut()
                .zip(sets)
                .enumerate()
                .map(|(s, (net, set))| {
                    scope.spawn(move || {
                        let mut log = Vec::new();
                        train_task(net, set, config, task, s, &mut |r| log.push(r)).map(|rep| (rep, log))
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("training thread panicked"))
                .collect()
        })
    };
    let mut reports = Vec::with_capacity(results.len());
    let mut logs = Vec::with_capacity(results.len());
    for r in results {
        let (rep, log) = r?;
        reports.push(rep);
        logs.push(log);
    }
    Ok((reports, logs))
}
