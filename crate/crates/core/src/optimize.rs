//! Update rules, the elastic-net penalty, reduce-on-plateau scheduling and
//! early stopping.

use std::fmt;
use std::str::FromStr;

use ndarray::Zip;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{Gradients, Network};

/// Absolute margin a loss must beat the best so far by to count as an improvement.
pub const IMPROVEMENT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OptimizeError {
    #[error("non-finite gradient")]
    NonFiniteGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Adam,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(format!("unknown optimizer `{other}` (sgd|adam)")),
        }
    }
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub step: u64,
    moments: Option<(Gradients, Gradients)>,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, lr: f64) -> Self {
        Self { kind, lr, step: 0, moments: None }
    }

    /// Applies one update in place. Parameters are untouched on error.
    pub fn step(&mut self, net: &mut Network, grads: &Gradients) -> Result<(), OptimizeError> {
        if !grads.all_finite() {
            return Err(OptimizeError::NonFiniteGradient);
        }
        self.step += 1;
        let lr = self.lr;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in net.layers_mut().iter_mut().zip(&grads.layers) {
                    p.weight.scaled_add(-lr, &g.weight);
                    if let (Some(b), Some(gb)) = (p.bias.as_mut(), g.bias.as_ref()) {
                        b.scaled_add(-lr, gb);
                    }
                }
            }
            OptimizerKind::Adam => {
                let (m, v) = self
                    .moments
                    .get_or_insert_with(|| (Gradients::zeros_like(net), Gradients::zeros_like(net)));
                let t = self.step as i32;
                let c1 = 1.0 - ADAM_BETA1.powi(t);
                let c2 = 1.0 - ADAM_BETA2.powi(t);
                let update = |p: &mut f64, g: &f64, m: &mut f64, v: &mut f64| {
                    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
                };
                for (((p, g), ml), vl) in net
                    .layers_mut()
                    .iter_mut()
                    .zip(&grads.layers)
                    .zip(&mut m.layers)
                    .zip(&mut v.layers)
                {
                    Zip::from(&mut p.weight)
                        .and(&g.weight)
                        .and(&mut ml.weight)
                        .and(&mut vl.weight)
                        .for_each(update);
                    if let (Some(b), Some(gb), Some(mb), Some(vb)) =
                        (p.bias.as_mut(), g.bias.as_ref(), ml.bias.as_mut(), vl.bias.as_mut())
                    {
                        Zip::from(b).and(gb).and(mb).and(vb).for_each(update);
                    }
                }
            }
        }
        Ok(())
    }
}

/// `λ·[α·Σ|w| + (1−α)·Σw²]` over every weight matrix (biases exempt), and its gradient.
pub fn elastic_net(net: &Network, lambda: f64, alpha: f64) -> (f64, Gradients) {
    let mut grads = Gradients::zeros_like(net);
    if lambda == 0.0 {
        return (0.0, grads);
    }
    let (mut l1, mut l2) = (0.0, 0.0);
    for (layer, g) in net.layers().iter().zip(&mut grads.layers) {
        Zip::from(&mut g.weight).and(&layer.weight).for_each(|g, &w| {
            l1 += w.abs();
            l2 += w * w;
            let sign = if w > 0.0 {
                1.0
            } else if w < 0.0 {
                -1.0
            } else {
                0.0
            };
            *g = lambda * (alpha * sign + 2.0 * (1.0 - alpha) * w);
        });
    }
    (lambda * (alpha * l1 + (1.0 - alpha) * l2), grads)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerPolicy {
    #[default]
    None,
    ReduceOnPlateau,
}

impl FromStr for SchedulerPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(SchedulerPolicy::None),
            "reduce_on_plateau" => Ok(SchedulerPolicy::ReduceOnPlateau),
            other => Err(format!("unknown lr scheduler `{other}` (none|reduce_on_plateau)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    pub policy: SchedulerPolicy,
    pub patience: usize,
    pub factor: f64,
    pub min_lr: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self { policy: SchedulerPolicy::None, patience: 10, factor: 0.1, min_lr: 1e-6 }
    }
}

/// Reduce-on-plateau state. The reduced rate is always recomputed as
/// `base_lr · factor^reductions` so repeated reductions do not accumulate rounding.
#[derive(Debug, Clone)]
pub struct SchedulerState {
    pub config: SchedulerConfig,
    pub best_loss: f64,
    pub epochs_since_best: usize,
    base_lr: Option<f64>,
    reductions: i32,
}

impl SchedulerState {
    pub fn new(config: SchedulerConfig) -> Self {
        Self { config, best_loss: f64::INFINITY, epochs_since_best: 0, base_lr: None, reductions: 0 }
    }

    /// Records one epoch's monitored loss and returns the learning rate to use next.
    pub fn step(&mut self, epoch_loss: f64, current_lr: f64) -> f64 {
        if self.config.policy == SchedulerPolicy::None {
            return current_lr;
        }
        let base = *self.base_lr.get_or_insert(current_lr);
        if epoch_loss < self.best_loss - IMPROVEMENT_TOLERANCE {
            self.best_loss = epoch_loss;
            self.epochs_since_best = 0;
            return current_lr;
        }
        self.epochs_since_best += 1;
        if self.epochs_since_best >= self.config.patience {
            self.epochs_since_best = 0;
            self.reductions += 1;
            return (base * self.config.factor.powi(self.reductions)).max(self.config.min_lr);
        }
        current_lr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EarlyStopDecision {
    Continue,
    Stop,
}

/// Tracks the best validation loss and a snapshot of the parameters that produced it.
#[derive(Debug, Clone)]
pub struct EarlyStopState {
    pub patience: Option<usize>,
    pub best_val_loss: f64,
    pub best_epoch: usize,
    pub epochs_since_best: usize,
    snapshot: Option<Network>,
}

impl EarlyStopState {
    /// `patience = None` disables stopping.
    pub fn new(patience: Option<usize>) -> Self {
        Self {
            patience,
            best_val_loss: f64::INFINITY,
            best_epoch: 0,
            epochs_since_best: 0,
            snapshot: None,
        }
    }

    pub fn update(&mut self, val_loss: f64, epoch: usize, params: &Network) -> EarlyStopDecision {
        let Some(patience) = self.patience else {
            return EarlyStopDecision::Continue;
        };
        if val_loss < self.best_val_loss - IMPROVEMENT_TOLERANCE {
            self.best_val_loss = val_loss;
            self.best_epoch = epoch;
            self.epochs_since_best = 0;
            self.snapshot = Some(params.clone());
        } else {
            self.epochs_since_best += 1;
        }
        if self.epochs_since_best >= patience {
            EarlyStopDecision::Stop
        } else {
            EarlyStopDecision::Continue
        }
    }

    pub fn best_snapshot(&self) -> Option<&Network> {
        self.snapshot.as_ref()
    }

    pub fn take_snapshot(&mut self) -> Option<Network> {
        self.snapshot.take()
    }
}
