use std::ops::Deref;

use rand::Rng as _;

use super::tensor::{dot, l2_norm, Tensor2};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    fn grad_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Fully connected layer. `weight` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Tensor2,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn new(weight: Tensor2, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(Error::shape("layer bias", weight.rows(), bias.len()));
        }
        Ok(Dense {
            weight,
            bias,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.output_dim())
            .map(|r| self.activation.apply(dot(self.weight.row(r), x) + self.bias[r]))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
}

/// Layered dense network with a softmax head.
///
/// The penultimate activation (output of the second-last layer, or the
/// input itself for a single-layer network) is the feature used for herding
/// and nearest-mean classification.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Dense>,
    updates: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub logits: Vec<f64>,
    pub softmax: Vec<f64>,
    /// Raw (unnormalized) penultimate activation.
    pub feature: Vec<f64>,
}

/// Activations of every layer for one input; `acts[0]` is the input.
#[derive(Debug, Clone)]
pub struct Trace {
    acts: Vec<Vec<f64>>,
}

impl Trace {
    pub fn logits(&self) -> &[f64] {
        self.acts.last().expect("trace always holds the input")
    }

    pub fn feature(&self) -> &[f64] {
        &self.acts[self.acts.len() - 2]
    }
}

/// L2-normalized penultimate feature.
#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub vector: Vec<f64>,
    /// Set when the activation had zero norm; `vector` is then all zeros.
    pub zero_norm: bool,
}

impl Network {
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Param("network needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::shape(
                    format!("layer {} input", i + 1),
                    pair[0].output_dim(),
                    pair[1].input_dim(),
                ));
            }
        }
        Ok(Network { layers, updates: 0 })
    }

    /// `input → hidden[0] relu → … → classes`, He-uniform hidden weights
    /// (limit √(6/fan_in)), output weights uniform in ±1/√fan_in, zero biases.
    pub fn new(input_dim: usize, hidden: &[usize], classes: usize, rng: &mut Rng) -> Result<Self> {
        if input_dim == 0 || hidden.contains(&0) {
            return Err(Error::Param("layer widths must be positive".into()));
        }
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut fan_in = input_dim;
        for &width in hidden {
            let limit = (6.0 / fan_in as f64).sqrt();
            let w = Tensor2::from_fn(width, fan_in, |_, _| rng.random_range(-limit..=limit));
            layers.push(Dense::new(w, vec![0.0; width], Activation::Relu)?);
            fan_in = width;
        }
        layers.push(Dense::new(
            output_rows(classes, fan_in, rng),
            vec![0.0; classes],
            Activation::Identity,
        )?);
        Network::from_layers(layers)
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_classes(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn feature_dim(&self) -> usize {
        match self.layers.len() {
            1 => self.input_dim(),
            n => self.layers[n - 2].output_dim(),
        }
    }

    /// Number of optimizer steps applied so far.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub(crate) fn record_update(&mut self) {
        self.updates += 1;
    }

    pub fn param(&self, layer: usize, kind: ParamKind) -> &[f64] {
        match kind {
            ParamKind::Weight => self.layers[layer].weight.data(),
            ParamKind::Bias => &self.layers[layer].bias,
        }
    }

    pub fn param_mut(&mut self, layer: usize, kind: ParamKind) -> &mut [f64] {
        match kind {
            ParamKind::Weight => self.layers[layer].weight.data_mut(),
            ParamKind::Bias => &mut self.layers[layer].bias,
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::shape("network input", self.input_dim(), x.len()));
        }
        Ok(())
    }

    pub fn trace(&self, x: &[f64]) -> Result<Trace> {
        self.check_input(x)?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for layer in &self.layers {
            let next = layer.forward(acts.last().unwrap());
            acts.push(next);
        }
        Ok(Trace { acts })
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardOutput> {
        let trace = self.trace(x)?;
        let logits = trace.logits().to_vec();
        Ok(ForwardOutput {
            softmax: softmax(&logits),
            feature: trace.feature().to_vec(),
            logits,
        })
    }

    /// Gradients of a scalar loss whose derivative w.r.t. the logits is
    /// `grad_on_logits`.
    pub fn backward(&self, x: &[f64], grad_on_logits: &[f64]) -> Result<Gradients> {
        let trace = self.trace(x)?;
        let mut grads = Gradients::zeros_like(self);
        self.accumulate_backward(&trace, grad_on_logits, &mut grads)?;
        Ok(grads)
    }

    /// Adds this sample's gradients into `grads`.
    pub fn accumulate_backward(&self, trace: &Trace, grad_on_logits: &[f64], grads: &mut Gradients) -> Result<()> {
        if grad_on_logits.len() != self.output_classes() {
            return Err(Error::shape(
                "logit gradient",
                self.output_classes(),
                grad_on_logits.len(),
            ));
        }
        grads.check_shape(self)?;
        let mut upstream = grad_on_logits.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let out = &trace.acts[i + 1];
            let input = &trace.acts[i];
            let delta: Vec<f64> = upstream
                .iter()
                .zip(out)
                .map(|(&g, &a)| g * layer.activation.grad_from_output(a))
                .collect();
            let g = &mut grads.layers[i];
            g.weight.add_outer(&delta, input, 1.0);
            for (b, d) in g.bias.iter_mut().zip(&delta) {
                *b += d;
            }
            if i > 0 {
                upstream = layer.weight.matvec_t(&delta);
            }
        }
        Ok(())
    }

    pub fn extract_feature(&self, x: &[f64]) -> Result<Feature> {
        let trace = self.trace(x)?;
        Ok(normalize_feature(trace.feature()))
    }

    /// Grows the output layer by `m_new` classes. Existing weights are left
    /// bit-identical; new rows are uniform in ±1/√fan_in with zero bias.
    pub fn expand_output(&mut self, m_new: usize, rng: &mut Rng) {
        if m_new == 0 {
            return;
        }
        let last = self.layers.last_mut().unwrap();
        let rows = output_rows(m_new, last.input_dim(), rng);
        last.weight
            .append_rows(&rows)
            .expect("new rows share the layer's fan-in");
        last.bias.extend(std::iter::repeat_n(0.0, m_new));
    }

    pub fn snapshot(&self) -> ModelSnapshot {
        ModelSnapshot { net: self.clone() }
    }
}

fn output_rows(count: usize, fan_in: usize, rng: &mut Rng) -> Tensor2 {
    let limit = 1.0 / (fan_in as f64).sqrt();
    Tensor2::from_fn(count, fan_in, |_, _| rng.random_range(-limit..=limit))
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn normalize_feature(raw: &[f64]) -> Feature {
    let norm = l2_norm(raw);
    if norm == 0.0 || !norm.is_finite() {
        log::warn!("zero-norm feature encountered; returning zero vector");
        return Feature {
            vector: vec![0.0; raw.len()],
            zero_norm: true,
        };
    }
    Feature {
        vector: raw.iter().map(|v| v / norm).collect(),
        zero_norm: false,
    }
}

/// Frozen copy of a network. Only immutable access is exposed.
#[derive(Debug, Clone)]
pub struct ModelSnapshot {
    net: Network,
}

impl ModelSnapshot {
    /// Update count of the source network when the snapshot was taken.
    pub fn taken_at_update(&self) -> u64 {
        self.net.updates
    }
}

impl Deref for ModelSnapshot {
    type Target = Network;

    fn deref(&self) -> &Network {
        &self.net
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weight: Tensor2,
    pub bias: Vec<f64>,
}

/// Per-parameter gradients, shaped like a [`Network`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseGrad>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| DenseGrad {
                    weight: Tensor2::zeros(l.weight.rows(), l.weight.cols()),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn check_shape(&self, net: &Network) -> Result<()> {
        if self.layers.len() != net.layers.len() {
            return Err(Error::shape(
                "gradient layer count",
                net.layers.len(),
                self.layers.len(),
            ));
        }
        for (i, (g, l)) in self.layers.iter().zip(&net.layers).enumerate() {
            if g.weight.rows() != l.weight.rows() || g.weight.cols() != l.weight.cols() {
                return Err(Error::shape(
                    format!("layer{i}.weight gradient"),
                    l.weight.data().len(),
                    g.weight.data().len(),
                ));
            }
            if g.bias.len() != l.bias.len() {
                return Err(Error::shape(
                    format!("layer{i}.bias gradient"),
                    l.bias.len(),
                    g.bias.len(),
                ));
            }
        }
        Ok(())
    }

    pub fn param(&self, layer: usize, kind: ParamKind) -> &[f64] {
        match kind {
            ParamKind::Weight => self.layers[layer].weight.data(),
            ParamKind::Bias => &self.layers[layer].bias,
        }
    }

    pub fn param_mut(&mut self, layer: usize, kind: ParamKind) -> &mut [f64] {
        match kind {
            ParamKind::Weight => self.layers[layer].weight.data_mut(),
            ParamKind::Bias => &mut self.layers[layer].bias,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.data().iter().all(|&v| v == 0.0) && l.bias.iter().all(|&v| v == 0.0))
    }
}

pub(crate) fn param_name(layer: usize, kind: ParamKind) -> String {
    match kind {
        ParamKind::Weight => format!("layer{layer}.weight"),
        ParamKind::Bias => format!("layer{layer}.bias"),
    }
}
