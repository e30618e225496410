use super::network::{param_name, Gradients, Network, ParamKind};
use crate::error::{Error, Result};

/// SGD with momentum; weight decay is folded into the gradient:
///
/// ```text
/// v ← momentum·v + (g + weight_decay·w)
/// w ← w − lr·v
/// ```
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    velocity: Gradients,
}

impl OptimizerState {
    pub fn new(net: &Network, learning_rate: f64, momentum: f64, weight_decay: f64) -> Result<Self> {
        if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
            return Err(Error::Param(format!(
                "learning rate {learning_rate} must be non-negative"
            )));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::Param(format!("momentum {momentum} outside [0, 1)")));
        }
        if !(weight_decay >= 0.0 && weight_decay.is_finite()) {
            return Err(Error::Param(format!(
                "weight decay {weight_decay} must be non-negative"
            )));
        }
        Ok(OptimizerState {
            learning_rate,
            momentum,
            weight_decay,
            velocity: Gradients::zeros_like(net),
        })
    }

    pub fn velocity(&self) -> &Gradients {
        &self.velocity
    }

    /// Applies one update in place. On a non-finite gradient nothing is
    /// modified and the offending parameter is reported.
    pub fn sgd_step(&mut self, net: &mut Network, grads: &Gradients) -> Result<()> {
        grads.check_shape(net)?;
        self.velocity.check_shape(net)?;
        for layer in 0..grads.layers.len() {
            for kind in [ParamKind::Weight, ParamKind::Bias] {
                if let Some(index) = grads.param(layer, kind).iter().position(|g| !g.is_finite()) {
                    return Err(Error::NonFiniteGradient {
                        param: param_name(layer, kind),
                        index,
                    });
                }
            }
        }
        let (lr, mu, wd) = (self.learning_rate, self.momentum, self.weight_decay);
        for layer in 0..grads.layers.len() {
            for kind in [ParamKind::Weight, ParamKind::Bias] {
                let g = grads.param(layer, kind);
                let v = self.velocity.param_mut(layer, kind);
                let w = net.param_mut(layer, kind);
                for ((wi, vi), gi) in w.iter_mut().zip(v.iter_mut()).zip(g) {
                    *vi = mu * *vi + (gi + wd * *wi);
                    *wi -= lr * *vi;
                }
            }
        }
        net.record_update();
        Ok(())
    }
}
