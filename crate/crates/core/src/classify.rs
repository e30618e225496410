//! Nearest-mean-of-exemplars inference.

use std::fmt::Write as _;

use crate::dataset::{ClassId, Sample};
use crate::error::{Error, Result};
use crate::exemplar::FeatureMeanMatrix;
use crate::model::FeatureExtractor;
use crate::nn::{l2_norm, squared_distance};

const UNIT_TOLERANCE: f64 = 1e-6;

/// Concatenates two unit-norm stream features (first stream first).
/// The result is not renormalized, so its norm is √2.
pub fn fuse(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    for f in [a, b] {
        let norm = l2_norm(f);
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NotUnitNorm { norm });
        }
    }
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmeDecision {
    pub class: ClassId,
    /// Row of the winning mean.
    pub index: usize,
    /// Euclidean distance to the winning mean.
    pub distance: f64,
    /// Distance to the runner-up minus `distance`; infinite with one class.
    pub margin: f64,
}

/// Class whose mean is nearest in L2; ties go to the earliest class.
pub fn nme_classify(feature: &[f64], means: &FeatureMeanMatrix) -> Result<NmeDecision> {
    if feature.len() != means.feature_dim {
        return Err(Error::shape("query feature", means.feature_dim, feature.len()));
    }
    if means.is_empty() {
        return Err(Error::Param("mean matrix is empty".into()));
    }
    // squared distances share the argmin with plain L2
    let mut best = (f64::INFINITY, 0usize);
    let mut second = f64::INFINITY;
    for (i, mu) in means.means.iter().enumerate() {
        let d = squared_distance(feature, mu);
        if d < best.0 {
            second = best.0;
            best = (d, i);
        } else if d < second {
            second = d;
        }
    }
    let distance = best.0.sqrt();
    Ok(NmeDecision {
        class: means.class_order[best.1],
        index: best.1,
        distance,
        margin: second.sqrt() - distance,
    })
}

/// Per-sample NME results; samples that fail feature extraction are
/// reported in `failures` and left as `None`.
#[derive(Debug, Default)]
pub struct BatchPredictions {
    pub predictions: Vec<Option<NmeDecision>>,
    pub failures: Vec<(u64, Error)>,
}

impl BatchPredictions {
    /// `(predicted, true)` pairs for the samples that were classified.
    pub fn scored<'a>(&'a self, samples: &'a [&Sample]) -> impl Iterator<Item = (ClassId, ClassId)> + 'a {
        self.predictions
            .iter()
            .zip(samples)
            .filter_map(|(p, s)| p.map(|p| (p.class, s.label)))
    }
}

pub fn classify_batch(
    samples: &[&Sample],
    extractor: &dyn FeatureExtractor,
    means: &FeatureMeanMatrix,
) -> BatchPredictions {
    let mut out = BatchPredictions::default();
    for s in samples {
        match extractor.extract(s).and_then(|f| nme_classify(&f.vector, means)) {
            Ok(d) => out.predictions.push(Some(d)),
            Err(e) => {
                out.predictions.push(None);
                out.failures.push((s.id, e));
            }
        }
    }
    if !out.failures.is_empty() {
        log::warn!("{} sample(s) could not be classified", out.failures.len());
    }
    out
}

/// One line of the prediction dump.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub sample_id: u64,
    pub true_class: ClassId,
    pub pred_class: ClassId,
    pub distance_to_pred: Option<f64>,
    pub distance_margin: Option<f64>,
}

/// `sample_id,true_class,pred_class,distance_to_pred,distance_margin`;
/// distances are empty for softmax-head predictions.
pub fn predictions_csv(rows: &[PredictionRow]) -> String {
    let mut out = String::from("sample_id,true_class,pred_class,distance_to_pred,distance_margin\n");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.sample_id,
            r.true_class,
            r.pred_class,
            opt(r.distance_to_pred),
            opt(r.distance_margin)
        );
    }
    out
}
