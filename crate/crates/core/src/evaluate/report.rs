use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{AccuracyMatrix, MetricsReport};
use crate::dataset::ClassId;
use crate::error::{Error, Result};

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_id: String,
    pub config_digest: String,
    pub method: String,
    pub mode: String,
    /// Row-major, `null` above the diagonal.
    #[serde(rename = "R")]
    pub r: Vec<Vec<Option<f64>>>,
    pub bwt: Option<f64>,
    pub bwt_delta: Option<f64>,
    pub mean_accuracy: f64,
    pub initial_accuracy: f64,
    pub per_task_final: Vec<f64>,
    /// Final model accuracy over all scheduled test samples pooled.
    pub micro_mean_accuracy: f64,
    /// Same matrix evaluated with the softmax head instead of NME.
    pub softmax_r: Vec<Vec<Option<f64>>>,
    pub softmax_mean_accuracy: f64,
    pub skipped_samples: usize,
}

impl RunReport {
    pub fn metrics(&self) -> MetricsReport {
        MetricsReport {
            bwt: self.bwt,
            bwt_delta: self.bwt_delta,
            mean_accuracy: self.mean_accuracy,
            initial_accuracy: self.initial_accuracy,
            per_task_final: self.per_task_final.clone(),
        }
    }

    pub fn matrix(&self) -> Result<AccuracyMatrix> {
        let rows: Vec<Vec<f64>> = self
            .r
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .take(i + 1)
                    .map(|v| v.ok_or_else(|| Error::Format(format!("R row {i} has an undefined entry"))))
                    .collect()
            })
            .collect::<Result<_>>()?;
        AccuracyMatrix::from_lower(&rows)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `model,Te0,…` header; undefined entries are left empty.
pub fn matrix_csv(r: &AccuracyMatrix) -> String {
    let n = r.n_tasks();
    let mut out = String::from("model");
    for j in 0..n {
        let _ = write!(out, ",Te{j}");
    }
    out.push('\n');
    for i in 0..n {
        let _ = write!(out, "M{i}");
        for j in 0..n {
            match r.get(i, j) {
                Some(v) => {
                    let _ = write!(out, ",{v}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

const CELL: usize = 24;

/// Binary PGM (P5) of `R`, one `CELL`×`CELL` block per entry; brighter is
/// higher accuracy, undefined entries are black.
pub fn heatmap_pgm(r: &AccuracyMatrix) -> Vec<u8> {
    let n = r.n_tasks();
    let side = n * CELL;
    let mut out = format!("P5\n{side} {side}\n255\n").into_bytes();
    for y in 0..side {
        for x in 0..side {
            let v = r.get(y / CELL, x / CELL).map_or(0u8, |v| (v * 255.0).round() as u8);
            out.push(v);
        }
    }
    out
}

/// `class,stream0[,stream1]` rows of averaged mean features.
pub fn mean_summary_csv(rows: &[(ClassId, Vec<f64>)]) -> String {
    let streams = rows.first().map_or(0, |r| r.1.len());
    let mut out = String::from("class");
    for s in 0..streams {
        let _ = write!(out, ",stream{s}");
    }
    out.push('\n');
    for (class, vals) in rows {
        let _ = write!(out, "{class}");
        for v in vals {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_heatmap() {
        let r = AccuracyMatrix::from_lower(&[vec![1.0], vec![0.5, 0.0]]).unwrap();
        assert_eq!(matrix_csv(&r), "model,Te0,Te1\nM0,1,\nM1,0.5,0\n");
        let img = heatmap_pgm(&r);
        let header = b"P5\n48 48\n255\n";
        assert_eq!(&img[..header.len()], header);
        let px = &img[header.len()..];
        assert_eq!(px.len(), 48 * 48);
        assert_eq!(px[0], 255);
        assert_eq!(px[30], 0); // undefined R01
        assert_eq!(px[30 * 48], 128); // R10 = 0.5
    }

    #[test]
    fn report_json_round_trip() {
        let r = AccuracyMatrix::from_lower(&[vec![0.9], vec![0.7, 0.8]]).unwrap();
        let report = RunReport {
            run_id: "x".into(),
            config_digest: "d".into(),
            method: "catnet".into(),
            mode: "two_stream".into(),
            r: r.rows(),
            bwt: Some(0.7),
            bwt_delta: Some(-0.2),
            mean_accuracy: 0.75,
            initial_accuracy: 0.9,
            per_task_final: vec![0.7, 0.8],
            micro_mean_accuracy: 0.75,
            softmax_r: r.rows(),
            softmax_mean_accuracy: 0.75,
            skipped_samples: 0,
        };
        let json = report.to_json();
        assert!(json.contains("\"R\""));
        assert!(json.contains("null"));
        let back = RunReport::from_json(&json).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.matrix().unwrap(), r);
    }
}
