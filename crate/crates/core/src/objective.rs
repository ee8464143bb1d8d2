//! Loss families on the link scale, inverse links, and the intercept-only
//! baseline loss.
//!
//! Every loss is the mean per-observation negative log-likelihood with
//! constant terms dropped, so learning rates do not depend on batch size.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::sigmoid;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid target {value} in row {row}: {reason}")]
    InvalidTarget { row: usize, value: f64, reason: &'static str },
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("no targets")]
    Empty,
}

/// User-supplied objective. `value` must return the mean loss over rows.
pub trait CustomObjective: Send + Sync {
    fn name(&self) -> &str;

    fn value(&self, eta: ArrayView2<f64>, y: &[f64]) -> f64;

    /// `∂value/∂eta`. Without one, central finite differences are used.
    fn gradient(&self, _eta: ArrayView2<f64>, _y: &[f64]) -> Option<Array2<f64>> {
        None
    }

    /// Maps link-scale outputs to the response scale. Identity by default.
    fn inverse_link(&self, eta: ArrayView2<f64>) -> Array2<f64> {
        eta.to_owned()
    }
}

#[derive(Clone)]
pub struct CustomLoss(pub Arc<dyn CustomObjective>);

impl CustomLoss {
    pub fn new(objective: impl CustomObjective + 'static) -> Self {
        CustomLoss(Arc::new(objective))
    }
}

impl fmt::Debug for CustomLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomLoss({})", self.0.name())
    }
}

impl PartialEq for CustomLoss {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossSpec {
    Gaussian,
    Binomial,
    Poisson,
    Softmax,
    /// Callbacks cannot be persisted.
    #[serde(skip)]
    Custom(CustomLoss),
}

impl LossSpec {
    pub fn name(&self) -> &str {
        match self {
            LossSpec::Gaussian => "gaussian",
            LossSpec::Binomial => "binomial",
            LossSpec::Poisson => "poisson",
            LossSpec::Softmax => "softmax",
            LossSpec::Custom(c) => c.0.name(),
        }
    }
}

impl FromStr for LossSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "mse" => Ok(LossSpec::Gaussian),
            "binomial" => Ok(LossSpec::Binomial),
            "poisson" => Ok(LossSpec::Poisson),
            "softmax" => Ok(LossSpec::Softmax),
            other => Err(format!("unknown loss `{other}` (gaussian|mse|binomial|poisson|softmax)")),
        }
    }
}

/// Checks targets against the family and returns the network output width it needs.
pub fn output_dim_for(spec: &LossSpec, y: &[f64]) -> Result<usize, ObjectiveError> {
    validate_targets(spec, y, None)?;
    Ok(match spec {
        LossSpec::Softmax => {
            let k = y.iter().fold(0.0f64, |m, &v| m.max(v)) as usize + 1;
            k.max(2)
        }
        _ => 1,
    })
}

fn validate_targets(spec: &LossSpec, y: &[f64], classes: Option<usize>) -> Result<(), ObjectiveError> {
    let bad = |row: usize, value: f64, reason| Err(ObjectiveError::InvalidTarget { row: row + 1, value, reason });
    for (row, &v) in y.iter().enumerate() {
        if !v.is_finite() {
            return bad(row, v, "not finite");
        }
        match spec {
            LossSpec::Binomial if v != 0.0 && v != 1.0 => return bad(row, v, "binomial targets must be 0 or 1"),
            LossSpec::Poisson if v < 0.0 || v.fract() != 0.0 => {
                return bad(row, v, "poisson targets must be non-negative integers")
            }
            LossSpec::Softmax if v < 0.0 || v.fract() != 0.0 => {
                return bad(row, v, "softmax targets must be class indices")
            }
            LossSpec::Softmax if classes.is_some_and(|k| v as usize >= k) => {
                return bad(row, v, "class index exceeds output width")
            }
            _ => {}
        }
    }
    Ok(())
}

fn check_shapes(spec: &LossSpec, eta: &ArrayView2<f64>, y: &[f64]) -> Result<(), ObjectiveError> {
    if eta.nrows() != y.len() {
        return Err(ObjectiveError::ShapeMismatch(format!(
            "{} predictions for {} targets",
            eta.nrows(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(ObjectiveError::Empty);
    }
    match spec {
        LossSpec::Softmax if eta.ncols() < 2 => {
            Err(ObjectiveError::ShapeMismatch("softmax needs at least 2 outputs".into()))
        }
        LossSpec::Gaussian | LossSpec::Binomial | LossSpec::Poisson if eta.ncols() != 1 => Err(
            ObjectiveError::ShapeMismatch(format!("{} needs exactly 1 output", spec.name())),
        ),
        _ => Ok(()),
    }
}

/// `log(1 + e^x)` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn logsumexp(row: ndarray::ArrayView1<f64>) -> f64 {
    let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    m + row.iter().map(|&v| (v - m).exp()).sum::<f64>().ln()
}

fn builtin_value(spec: &LossSpec, eta: &ArrayView2<f64>, y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let total: f64 = match spec {
        LossSpec::Gaussian => eta.column(0).iter().zip(y).map(|(&e, &t)| (t - e) * (t - e)).sum(),
        LossSpec::Binomial => eta.column(0).iter().zip(y).map(|(&e, &t)| softplus(e) - t * e).sum(),
        LossSpec::Poisson => eta.column(0).iter().zip(y).map(|(&e, &t)| e.exp() - t * e).sum(),
        LossSpec::Softmax => eta
            .rows()
            .into_iter()
            .zip(y)
            .map(|(row, &t)| logsumexp(row) - row[t as usize])
            .sum(),
        LossSpec::Custom(_) => unreachable!(),
    };
    total / n
}

/// Mean loss without the gradient.
pub fn loss_value(spec: &LossSpec, eta: ArrayView2<f64>, y: &[f64]) -> Result<f64, ObjectiveError> {
    check_shapes(spec, &eta, y)?;
    validate_targets(spec, y, Some(eta.ncols()))?;
    let value = match spec {
        LossSpec::Custom(c) => c.0.value(eta, y),
        _ => builtin_value(spec, &eta, y),
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ObjectiveError::NonFiniteLoss)
    }
}

/// Mean loss and its gradient with respect to the link-scale outputs.
pub fn loss_and_grad(
    spec: &LossSpec,
    eta: ArrayView2<f64>,
    y: &[f64],
) -> Result<(f64, Array2<f64>), ObjectiveError> {
    let value = loss_value(spec, eta, y)?;
    let n = y.len() as f64;
    let mut grad = Array2::<f64>::zeros(eta.raw_dim());
    match spec {
        LossSpec::Gaussian => {
            for (i, &t) in y.iter().enumerate() {
                grad[[i, 0]] = 2.0 * (eta[[i, 0]] - t) / n;
            }
        }
        LossSpec::Binomial => {
            for (i, &t) in y.iter().enumerate() {
                grad[[i, 0]] = (sigmoid(eta[[i, 0]]) - t) / n;
            }
        }
        LossSpec::Poisson => {
            for (i, &t) in y.iter().enumerate() {
                grad[[i, 0]] = (eta[[i, 0]].exp() - t) / n;
            }
        }
        LossSpec::Softmax => {
            for (i, &t) in y.iter().enumerate() {
                let row = eta.row(i);
                let lse = logsumexp(row);
                for k in 0..row.len() {
                    grad[[i, k]] = (row[k] - lse).exp() / n;
                }
                grad[[i, t as usize]] -= 1.0 / n;
            }
        }
        LossSpec::Custom(c) => {
            grad = match c.0.gradient(eta, y) {
                Some(g) if g.dim() == eta.dim() => g,
                Some(g) => {
                    return Err(ObjectiveError::ShapeMismatch(format!(
                        "custom gradient {:?}, expected {:?}",
                        g.dim(),
                        eta.dim()
                    )))
                }
                None => finite_difference(c, eta, y),
            };
        }
    }
    Ok((value, grad))
}

fn finite_difference(c: &CustomLoss, eta: ArrayView2<f64>, y: &[f64]) -> Array2<f64> {
    const H: f64 = 1e-6;
    let mut probe = eta.to_owned();
    let mut grad = Array2::zeros(eta.raw_dim());
    for idx in ndarray::indices(eta.raw_dim()) {
        let orig = probe[idx];
        probe[idx] = orig + H;
        let up = c.0.value(probe.view(), y);
        probe[idx] = orig - H;
        let down = c.0.value(probe.view(), y);
        probe[idx] = orig;
        grad[idx] = (up - down) / (2.0 * H);
    }
    grad
}

/// Response-scale predictions.
pub fn inverse_link(spec: &LossSpec, eta: ArrayView2<f64>) -> Array2<f64> {
    match spec {
        LossSpec::Gaussian => eta.to_owned(),
        LossSpec::Binomial => eta.mapv(sigmoid),
        LossSpec::Poisson => eta.mapv(f64::exp),
        LossSpec::Softmax => {
            let mut out = eta.to_owned();
            for mut row in out.axis_iter_mut(Axis(0)) {
                let lse = logsumexp(row.view());
                row.mapv_inplace(|v| (v - lse).exp());
            }
            out
        }
        LossSpec::Custom(c) => c.0.inverse_link(eta),
    }
}

/// Lower clamp on the poisson intercept when every count is zero.
pub const POISSON_ZERO_MEAN_RATE: f64 = 1e-8;

fn xlogx(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// Loss of the best intercept-only model for these targets.
pub fn baseline_loss(spec: &LossSpec, y: &[f64], output_dim: usize) -> Result<f64, ObjectiveError> {
    if y.is_empty() {
        return Err(ObjectiveError::Empty);
    }
    validate_targets(spec, y, Some(output_dim))?;
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    Ok(match spec {
        LossSpec::Gaussian => y.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n,
        LossSpec::Binomial => -(xlogx(mean) + xlogx(1.0 - mean)),
        LossSpec::Poisson => {
            let eta = mean.max(POISSON_ZERO_MEAN_RATE).ln();
            y.iter().map(|&t| eta.exp() - t * eta).sum::<f64>() / n
        }
        LossSpec::Softmax => {
            let mut counts = vec![0usize; output_dim];
            for &t in y {
                counts[t as usize] += 1;
            }
            -counts.iter().map(|&c| xlogx(c as f64 / n)).sum::<f64>()
        }
        LossSpec::Custom(c) => {
            let value = |eta: f64| {
                let e = Array2::from_elem((y.len(), output_dim), eta);
                c.0.value(e.view(), y)
            };
            value(golden_section(value, -20.0, 20.0))
        }
    })
}

/// Minimizer of a unimodal function on `[lo, hi]`.
fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > 1e-10 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
    }
    (lo + hi) / 2.0
}
