//! Lifelong-learning metrics over the task accuracy matrix.

mod report;

pub use report::{heatmap_pgm, matrix_csv, mean_summary_csv, RunReport};

use serde::{Deserialize, Serialize};

use crate::dataset::ClassId;
use crate::error::{Error, Result};
use crate::exemplar::FeatureMeanMatrix;

/// `R[i][j]`: accuracy of the model after task `i` on the test data of task
/// `j`. Only `j <= i` is defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyMatrix {
    n_tasks: usize,
    values: Vec<Option<f64>>,
}

impl AccuracyMatrix {
    pub fn new(n_tasks: usize) -> Self {
        AccuracyMatrix {
            n_tasks,
            values: vec![None; n_tasks * n_tasks],
        }
    }

    /// Builds a complete matrix from its lower-triangular rows
    /// (row `i` holds `i + 1` entries).
    pub fn from_lower(rows: &[Vec<f64>]) -> Result<Self> {
        let mut m = AccuracyMatrix::new(rows.len());
        for (i, row) in rows.iter().enumerate() {
            m.set_row(i, row)?;
        }
        Ok(m)
    }

    pub fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.n_tasks + j]
    }

    pub fn set_row(&mut self, i: usize, row: &[f64]) -> Result<()> {
        if i >= self.n_tasks {
            return Err(Error::Param(format!("row {i} outside a {0}×{0} matrix", self.n_tasks)));
        }
        if row.len() != i + 1 {
            return Err(Error::shape(format!("accuracy row {i}"), i + 1, row.len()));
        }
        if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Param(format!("accuracy {v} outside [0, 1]")));
        }
        for (j, &v) in row.iter().enumerate() {
            self.values[i * self.n_tasks + j] = Some(v);
        }
        Ok(())
    }

    /// Defined entries of row `i`.
    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..=i).filter_map(|j| self.get(i, j)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<Option<f64>>> {
        self.values.chunks(self.n_tasks.max(1)).map(<[_]>::to_vec).collect()
    }

    pub fn is_complete(&self) -> bool {
        (0..self.n_tasks).all(|i| (0..=i).all(|j| self.get(i, j).is_some()))
    }

    fn require_complete(&self) -> Result<()> {
        if self.n_tasks == 0 {
            return Err(Error::Metric("accuracy matrix is empty".into()));
        }
        if !self.is_complete() {
            return Err(Error::Metric(
                "accuracy matrix has unfilled lower-triangle entries".into(),
            ));
        }
        Ok(())
    }
}

/// Fraction of exact matches.
pub fn accuracy<T: PartialEq>(preds: &[T], truths: &[T]) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::Metric("accuracy of an empty prediction set".into()));
    }
    if preds.len() != truths.len() {
        return Err(Error::shape("predictions vs truths", truths.len(), preds.len()));
    }
    let hits = preds.iter().zip(truths).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Arithmetic mean rounded once: the sum is carried as an unevaluated pair
/// `hi + lo` and the quotient is corrected with a fused multiply-add, so
/// e.g. the mean of 0.8, 0.7 and 0.9 is exactly `0.8`.
pub fn mean(values: &[f64]) -> f64 {
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    for &v in values {
        let s = hi + v;
        let bv = s - hi;
        lo += (hi - (s - bv)) + (v - bv);
        hi = s;
    }
    let s = hi + lo;
    let (hi, lo) = (s, lo - (s - hi));
    let n = values.len() as f64;
    let q = hi / n;
    let r = (-q).mul_add(n, hi) + lo;
    q + r / n
}

/// Mean of the strict lower triangle.
pub fn compute_bwt(r: &AccuracyMatrix) -> Result<f64> {
    r.require_complete()?;
    if r.n_tasks < 2 {
        return Err(Error::Metric("BWT undefined for single task".into()));
    }
    let vals: Vec<f64> = (1..r.n_tasks)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| r.get(i, j).unwrap())
        .collect();
    Ok(mean(&vals))
}

/// Forgetting-style transfer: mean over `j < N-1` of `R[N-1][j] − R[j][j]`.
/// Auxiliary; reported next to [`compute_bwt`].
pub fn compute_bwt_delta(r: &AccuracyMatrix) -> Result<f64> {
    r.require_complete()?;
    let n = r.n_tasks;
    if n < 2 {
        return Err(Error::Metric("BWT undefined for single task".into()));
    }
    let deltas: Vec<f64> = (0..n - 1)
        .map(|j| r.get(n - 1, j).unwrap() - r.get(j, j).unwrap())
        .collect();
    Ok(mean(&deltas))
}

/// Mean of the last row.
pub fn compute_mean_accuracy(r: &AccuracyMatrix) -> Result<f64> {
    r.require_complete()?;
    Ok(mean(&r.row(r.n_tasks - 1)))
}

pub fn initial_accuracy(r: &AccuracyMatrix) -> Result<f64> {
    r.require_complete()?;
    Ok(r.get(0, 0).unwrap())
}

/// Per-class average over the feature coordinates.
pub fn summarize_means(s: &FeatureMeanMatrix) -> Vec<f64> {
    s.means.iter().map(|m| m.iter().sum::<f64>() / m.len() as f64).collect()
}

/// [`summarize_means`] applied to each stream's slice of a fused mean.
/// Result is indexed `[class][stream]`.
pub fn summarize_means_per_stream(s: &FeatureMeanMatrix, stream_dims: &[usize]) -> Result<Vec<Vec<f64>>> {
    if stream_dims.iter().sum::<usize>() != s.feature_dim {
        return Err(Error::shape("stream dims", s.feature_dim, stream_dims.iter().sum()));
    }
    Ok(s.means
        .iter()
        .map(|m| {
            let mut start = 0;
            stream_dims
                .iter()
                .map(|&d| {
                    let slice = &m[start..start + d];
                    start += d;
                    slice.iter().sum::<f64>() / d as f64
                })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `None` for single-task runs.
    pub bwt: Option<f64>,
    pub bwt_delta: Option<f64>,
    pub mean_accuracy: f64,
    pub initial_accuracy: f64,
    pub per_task_final: Vec<f64>,
}

impl MetricsReport {
    pub fn from_matrix(r: &AccuracyMatrix) -> Result<Self> {
        let (bwt, bwt_delta) = if r.n_tasks() >= 2 {
            (Some(compute_bwt(r)?), Some(compute_bwt_delta(r)?))
        } else {
            (None, None)
        };
        Ok(MetricsReport {
            bwt,
            bwt_delta,
            mean_accuracy: compute_mean_accuracy(r)?,
            initial_accuracy: initial_accuracy(r)?,
            per_task_final: r.row(r.n_tasks() - 1),
        })
    }
}

/// Per-class, per-stream mean summaries paired with class ids.
pub fn mean_summary_rows(s: &FeatureMeanMatrix, stream_dims: &[usize]) -> Result<Vec<(ClassId, Vec<f64>)>> {
    Ok(s.class_order
        .iter()
        .copied()
        .zip(summarize_means_per_stream(s, stream_dims)?)
        .collect())
}
