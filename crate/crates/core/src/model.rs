//! Input representations and the per-stream networks of a learner.

use std::fmt;
use std::str::FromStr;

use crate::classify::fuse;
use crate::dataset::Sample;
use crate::error::{Error, Result};
use crate::nn::{normalize_feature, softmax, Feature, Network};

/// Which part of a sample a network sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputView {
    Modality(usize),
    /// All modality vectors concatenated in order.
    Concat,
}

impl InputView {
    pub fn input(&self, sample: &Sample) -> Result<Vec<f64>> {
        match *self {
            InputView::Modality(v) => sample.modalities.get(v).cloned().ok_or(Error::MissingModality {
                sample: sample.id,
                modality: v,
            }),
            InputView::Concat => Ok(sample.modalities.concat()),
        }
    }

    pub fn input_dim(&self, modality_dims: &[usize]) -> Result<usize> {
        match *self {
            InputView::Modality(v) => modality_dims.get(v).copied().ok_or_else(|| {
                Error::Config(format!(
                    "modality {v} requested but the dataset has {} modalities",
                    modality_dims.len()
                ))
            }),
            InputView::Concat => Ok(modality_dims.iter().sum()),
        }
    }
}

/// Feature representation of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// One network on a single modality.
    OneStream(usize),
    /// One network on the concatenated modality vectors.
    RgbDConcat,
    /// One network per modality (0 and 1); features are fused.
    TwoStream,
}

impl Mode {
    pub fn views(&self) -> Vec<InputView> {
        match *self {
            Mode::OneStream(v) => vec![InputView::Modality(v)],
            Mode::RgbDConcat => vec![InputView::Concat],
            Mode::TwoStream => vec![InputView::Modality(0), InputView::Modality(1)],
        }
    }

    pub fn check_dataset(&self, modality_dims: &[usize]) -> Result<()> {
        match *self {
            Mode::TwoStream if modality_dims.len() != 2 => Err(Error::Config(format!(
                "two_stream needs a 2-modality dataset, found {}",
                modality_dims.len()
            ))),
            _ => {
                for view in self.views() {
                    view.input_dim(modality_dims)?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::OneStream(v) => write!(f, "one_stream:{v}"),
            Mode::RgbDConcat => f.write_str("rgb_d_concat"),
            Mode::TwoStream => f.write_str("two_stream"),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rgb_d_concat" => Ok(Mode::RgbDConcat),
            "two_stream" => Ok(Mode::TwoStream),
            _ => s
                .strip_prefix("one_stream:")
                .and_then(|v| v.parse().ok())
                .map(Mode::OneStream)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "unknown mode {s:?}; expected one_stream:<index>, rgb_d_concat or two_stream"
                    ))
                }),
        }
    }
}

/// Maps a sample to its L2-normalized feature.
pub trait FeatureExtractor {
    fn feature_dim(&self) -> usize;

    /// Per-stream normalized features.
    fn extract_streams(&self, sample: &Sample) -> Result<Vec<Feature>>;

    /// The feature used for herding and classification; streams are fused
    /// when there is more than one.
    fn extract(&self, sample: &Sample) -> Result<Feature> {
        let mut streams = self.extract_streams(sample)?;
        if streams.len() == 1 {
            return Ok(streams.pop().unwrap());
        }
        let zero_norm = streams.iter().any(|f| f.zero_norm);
        let vector = if zero_norm {
            streams.iter().flat_map(|f| f.vector.iter().copied()).collect()
        } else {
            streams
                .iter()
                .skip(1)
                .try_fold(streams[0].vector.clone(), |acc, f| fuse(&acc, &f.vector))?
        };
        Ok(Feature { vector, zero_norm })
    }
}

/// Normalized raw modality vector; no network involved.
#[derive(Debug, Clone, Copy)]
pub struct RawExtractor {
    pub view: InputView,
    pub dim: usize,
}

impl FeatureExtractor for RawExtractor {
    fn feature_dim(&self) -> usize {
        self.dim
    }

    fn extract_streams(&self, sample: &Sample) -> Result<Vec<Feature>> {
        let x = self.view.input(sample)?;
        if x.len() != self.dim {
            return Err(Error::shape("raw feature", self.dim, x.len()));
        }
        Ok(vec![normalize_feature(&x)])
    }
}

/// Networks of one run, one per stream of its [`Mode`].
#[derive(Debug, Clone, PartialEq)]
pub struct Learner {
    mode: Mode,
    nets: Vec<Network>,
}

impl Learner {
    pub fn new(mode: Mode, nets: Vec<Network>) -> Result<Self> {
        if nets.len() != mode.views().len() {
            return Err(Error::shape(
                format!("networks for mode {mode}"),
                mode.views().len(),
                nets.len(),
            ));
        }
        Ok(Learner { mode, nets })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn nets(&self) -> &[Network] {
        &self.nets
    }

    pub fn nets_mut(&mut self) -> &mut [Network] {
        &mut self.nets
    }

    pub fn stream_dims(&self) -> Vec<usize> {
        self.nets.iter().map(Network::feature_dim).collect()
    }

    /// Softmax-head prediction over the first `outputs` classes; stream
    /// probabilities are averaged.
    pub fn predict_softmax(&self, sample: &Sample, outputs: usize) -> Result<usize> {
        let mut avg = vec![0.0; outputs];
        for (net, view) in self.nets.iter().zip(self.mode.views()) {
            let out = net.forward(&view.input(sample)?)?;
            let p = softmax(&out.logits[..outputs]);
            for (a, b) in avg.iter_mut().zip(p) {
                *a += b;
            }
        }
        let mut best = 0;
        for (i, &v) in avg.iter().enumerate() {
            if v > avg[best] {
                best = i;
            }
        }
        Ok(best)
    }
}

impl FeatureExtractor for Learner {
    fn feature_dim(&self) -> usize {
        self.stream_dims().iter().sum()
    }

    fn extract_streams(&self, sample: &Sample) -> Result<Vec<Feature>> {
        self.nets
            .iter()
            .zip(self.mode.views())
            .map(|(net, view)| net.extract_feature(&view.input(sample)?))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn sample() -> Sample {
        Sample {
            id: 1,
            label: 0,
            group: 0,
            modalities: vec![vec![1.0, 2.0], vec![3.0]],
        }
    }

    #[test]
    fn mode_round_trips_through_text() {
        for m in [Mode::OneStream(1), Mode::RgbDConcat, Mode::TwoStream] {
            assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
        }
        assert!("one_stream:x".parse::<Mode>().is_err());
        assert!("three_stream".parse::<Mode>().is_err());
    }

    #[test]
    fn views_select_inputs() {
        let s = sample();
        assert_eq!(InputView::Modality(1).input(&s).unwrap(), vec![3.0]);
        assert_eq!(InputView::Concat.input(&s).unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(matches!(
            InputView::Modality(2).input(&s),
            Err(Error::MissingModality { sample: 1, modality: 2 })
        ));
        assert_eq!(InputView::Concat.input_dim(&[2, 1]).unwrap(), 3);
    }

    #[test]
    fn two_stream_needs_two_modalities() {
        assert!(Mode::TwoStream.check_dataset(&[4]).is_err());
        assert!(Mode::TwoStream.check_dataset(&[4, 4]).is_ok());
        assert!(Mode::OneStream(1).check_dataset(&[4]).is_err());
    }

    #[test]
    fn fused_feature_has_norm_sqrt_two() {
        let mut r = rng::from_seed(8);
        let nets = vec![
            Network::new(2, &[6, 4], 3, &mut r).unwrap(),
            Network::new(1, &[5, 3], 3, &mut r).unwrap(),
        ];
        let learner = Learner::new(Mode::TwoStream, nets).unwrap();
        assert_eq!(learner.feature_dim(), 7);
        let f = learner.extract(&sample()).unwrap();
        if !f.zero_norm {
            let n = crate::nn::l2_norm(&f.vector);
            assert!((n - 2f64.sqrt()).abs() < 1e-9);
        }
        let pred = learner.predict_softmax(&sample(), 3).unwrap();
        assert!(pred < 3);
    }
}
