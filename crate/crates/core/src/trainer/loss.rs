//! Combined new-class cross-entropy and old-class distillation objective.
//!
//! ```text
//! L = −Σ_new  log σ_y(x)
//!     −Σ_cached Σ_{j<n} q_j log σ̃_j(x)
//! ```
//!
//! `σ` is the softmax over all current outputs and `σ̃` the softmax over
//! the first `n` (old-class) logits only, so the prediction and the stored
//! targets `q` share the same support. Reduction is a sum over the batch.

use crate::error::{Error, Result};
use crate::nn::{Gradients, Network};

#[derive(Debug, Clone, Copy)]
pub struct LabeledInput<'a> {
    pub input: &'a [f64],
    /// Output index of the true class.
    pub label: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SoftInput<'a> {
    pub input: &'a [f64],
    /// Old-class soft targets.
    pub q: &'a [f64],
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub cross_entropy: f64,
    pub distillation: f64,
    pub grads: Gradients,
}

impl LossOutput {
    pub fn total(&self) -> f64 {
        self.cross_entropy + self.distillation
    }
}

fn log_softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

/// Cross-entropy of one sample and its gradient on the logits.
pub fn cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let logp = log_softmax(logits);
    let mut grad: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
    grad[label] -= 1.0;
    (-logp[label], grad)
}

/// Distillation term of one sample against targets `q` over the first
/// `q.len()` logits. Gradient is zero on the remaining logits.
pub fn distillation(logits: &[f64], q: &[f64]) -> (f64, Vec<f64>) {
    let n = q.len();
    let logp = log_softmax(&logits[..n]);
    let q_mass: f64 = q.iter().sum();
    let loss = -q.iter().zip(&logp).map(|(qj, lj)| qj * lj).sum::<f64>();
    let mut grad = vec![0.0; logits.len()];
    for j in 0..n {
        grad[j] = logp[j].exp() * q_mass - q[j];
    }
    (loss, grad)
}

pub fn task_loss(net: &Network, new_batch: &[LabeledInput], cached_batch: &[SoftInput]) -> Result<LossOutput> {
    if new_batch.is_empty() {
        return Err(Error::Param("empty new-class batch".into()));
    }
    let outputs = net.output_classes();
    let mut grads = Gradients::zeros_like(net);
    let mut ce = 0.0;
    for item in new_batch {
        if item.label >= outputs {
            return Err(Error::shape("label index bound", outputs, item.label));
        }
        let trace = net.trace(item.input)?;
        let (l, g) = cross_entropy(trace.logits(), item.label);
        ce += l;
        net.accumulate_backward(&trace, &g, &mut grads)?;
    }
    let mut distill = 0.0;
    for item in cached_batch {
        if item.q.is_empty() || item.q.len() > outputs {
            return Err(Error::shape("distillation target length", outputs, item.q.len()));
        }
        let trace = net.trace(item.input)?;
        let (l, g) = distillation(trace.logits(), item.q);
        distill += l;
        net.accumulate_backward(&trace, &g, &mut grads)?;
    }
    Ok(LossOutput {
        cross_entropy: ce,
        distillation: distill,
        grads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{softmax, ParamKind};
    use crate::rng;
    use rand::Rng as _;

    fn net(seed: u64, input: usize, classes: usize) -> Network {
        Network::new(input, &[6, 5], classes, &mut rng::from_seed(seed)).unwrap()
    }

    #[test]
    fn plain_cross_entropy_without_cache() {
        let n = net(1, 3, 4);
        let x = [0.2, -0.5, 0.9];
        let out = task_loss(&n, &[LabeledInput { input: &x, label: 2 }], &[]).unwrap();
        let p = n.forward(&x).unwrap().softmax;
        assert!((out.cross_entropy + p[2].ln()).abs() < 1e-12);
        assert_eq!(out.distillation, 0.0);
        assert!(task_loss(&n, &[], &[]).is_err());
    }

    #[test]
    fn loss_is_additive_over_samples() {
        let n = net(2, 3, 4);
        let (a, b) = ([0.1, 0.2, 0.3], [-0.4, 0.0, 0.8]);
        let q = [0.2, 0.5, 0.3];
        let both = task_loss(
            &n,
            &[
                LabeledInput { input: &a, label: 3 },
                LabeledInput { input: &b, label: 1 },
            ],
            &[SoftInput { input: &b, q: &q }],
        )
        .unwrap();
        let la = task_loss(&n, &[LabeledInput { input: &a, label: 3 }], &[]).unwrap();
        let lb = task_loss(
            &n,
            &[LabeledInput { input: &b, label: 1 }],
            &[SoftInput { input: &b, q: &q }],
        )
        .unwrap();
        assert!((both.total() - la.total() - lb.total()).abs() < 1e-12);
    }

    #[test]
    fn distillation_gradient_vanishes_at_matching_targets() {
        let logits = [0.3, -1.2, 0.7, 2.0, -0.4];
        let q = softmax(&logits[..3]);
        let (_, g) = distillation(&logits, &q);
        assert!(g.iter().all(|v| v.abs() < 1e-15), "{g:?}");
    }

    #[test]
    fn distillation_gradient_is_p_minus_q() {
        // finite differences on the logits
        let logits = vec![0.3, -1.2, 0.7, 2.0];
        let q = [0.1, 0.6, 0.3];
        let (_, g) = distillation(&logits, &q);
        let p = softmax(&logits[..3]);
        for j in 0..4 {
            let h = 1e-6;
            let mut up = logits.clone();
            up[j] += h;
            let mut dn = logits.clone();
            dn[j] -= h;
            let fd = (distillation(&up, &q).0 - distillation(&dn, &q).0) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-8);
            let want = if j < 3 { p[j] - q[j] } else { 0.0 };
            assert!((g[j] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn full_loss_gradient_matches_finite_differences() {
        let mut n = net(5, 4, 5);
        let mut r = rng::from_seed(6);
        let xs: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..4).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect();
        let q = [0.25, 0.25, 0.5];
        let eval = |n: &Network| {
            task_loss(
                n,
                &[
                    LabeledInput {
                        input: &xs[0],
                        label: 4,
                    },
                    LabeledInput {
                        input: &xs[1],
                        label: 3,
                    },
                ],
                &[SoftInput { input: &xs[2], q: &q }],
            )
            .unwrap()
        };
        let grads = eval(&n).grads;
        let h = 1e-5;
        for layer in 0..3 {
            for kind in [ParamKind::Weight, ParamKind::Bias] {
                for i in 0..n.param(layer, kind).len() {
                    let w = n.param(layer, kind)[i];
                    n.param_mut(layer, kind)[i] = w + h;
                    let up = eval(&n).total();
                    n.param_mut(layer, kind)[i] = w - h;
                    let dn = eval(&n).total();
                    n.param_mut(layer, kind)[i] = w;
                    let fd = (up - dn) / (2.0 * h);
                    let an = grads.param(layer, kind)[i];
                    assert!((fd - an).abs() <= 1e-6 + 1e-4 * an.abs().max(fd.abs()), "{fd} vs {an}");
                }
            }
        }
    }
}
