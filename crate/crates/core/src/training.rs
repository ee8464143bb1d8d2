//! The fit loop: data → network → objective → optimizer, plus prediction,
//! residuals and continued training.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{Activation, Mode, Network, NetworkConfig, NetworkError};
use crate::objective::{
    baseline_loss, inverse_link, loss_and_grad, loss_value, output_dim_for, LossSpec, ObjectiveError,
};
use crate::optimize::{
    elastic_net, EarlyStopDecision, EarlyStopState, OptimizerKind, OptimizerState, SchedulerConfig,
    SchedulerState,
};
use crate::tabular::{build_design_on_rows, DataTable, Encoder, Formula, TabularError};
use crate::uncertainty::{self, derive_seed, BootstrapEnsemble};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("`{0}` cannot be changed when continuing training")]
    ArchitectureOverride(&'static str),
    #[error(transparent)]
    Data(#[from] TabularError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("model carries no training data")]
    NoTrainingData,
    #[error("bootstrap: {0}")]
    Bootstrap(String),
}

/// Every hyperparameter of a fit. `Default` gives the standard defaults
/// (two hidden layers of 50 selu units, lr 0.01, batches of 32, 100 epochs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub bias: bool,
    /// Fraction of rows held out for validation.
    pub validation: f64,
    pub epochs: usize,
    pub batchsize: usize,
    pub shuffle: bool,
    pub lr: f64,
    /// Elastic-net strength.
    pub lambda: f64,
    /// Elastic-net L1 share.
    pub alpha: f64,
    pub dropout: f64,
    /// Early-stopping patience in epochs.
    pub early_stopping: Option<usize>,
    /// Number of bootstrap replicates.
    pub bootstrap: Option<usize>,
    pub optimizer: OptimizerKind,
    pub scheduler: SchedulerConfig,
    pub seed: u64,
    pub loss: LossSpec,
    pub standardize: bool,
    /// Worker threads for bootstrap replicates. Results do not depend on it,
    /// so it is not written to model files.
    #[serde(skip, default = "one_thread")]
    pub threads: usize,
}

fn one_thread() -> usize {
    1
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![50, 50],
            activation: Activation::Selu,
            bias: true,
            validation: 0.0,
            epochs: 100,
            batchsize: 32,
            shuffle: true,
            lr: 0.01,
            lambda: 0.0,
            alpha: 0.5,
            dropout: 0.0,
            early_stopping: None,
            bootstrap: None,
            optimizer: OptimizerKind::Sgd,
            scheduler: SchedulerConfig::default(),
            seed: 42,
            loss: LossSpec::Gaussian,
            standardize: true,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: String| Err(TrainError::ConfigInvalid(msg));
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if self.batchsize == 0 {
            return bad("batchsize must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.validation) {
            return bad(format!("validation {} outside [0, 1)", self.validation));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return bad(format!("lr {} must be finite and >= 0", self.lr));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!("lambda {} must be finite and >= 0", self.lambda));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha {} outside [0, 1]", self.alpha));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer widths must be >= 1".into());
        }
        match self.early_stopping {
            Some(0) => return bad("early_stopping patience must be >= 1".into()),
            Some(_) if self.validation <= 0.0 => {
                return bad("early_stopping requires validation > 0".into())
            }
            _ => {}
        }
        if let Some(b) = self.bootstrap {
            if b < 2 {
                return bad(format!("bootstrap needs at least 2 replicates, got {b}"));
            }
        }
        if self.scheduler.patience == 0 {
            return bad("scheduler patience must be >= 1".into());
        }
        if !(self.scheduler.factor > 0.0 && self.scheduler.factor < 1.0) {
            return bad(format!("scheduler factor {} outside (0, 1)", self.scheduler.factor));
        }
        if !(self.scheduler.min_lr >= 0.0) {
            return bad("min_lr must be >= 0".into());
        }
        if self.threads == 0 {
            return bad("threads must be >= 1".into());
        }
        Ok(())
    }

    pub fn network_config(&self, input_dim: usize, output_dim: usize) -> NetworkConfig {
        NetworkConfig {
            hidden: self.hidden.clone(),
            activation: self.activation,
            bias: self.bias,
            dropout: self.dropout,
            input_dim,
            output_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean over batches, elastic-net penalty included.
    pub train_loss: f64,
    /// Penalty excluded.
    pub val_loss: Option<f64>,
    pub lr: f64,
}

impl EpochRecord {
    /// `epoch=<k> train=<loss> val=<loss|NA> baseline=<loss> lr=<lr>`
    pub fn log_line(&self, baseline: f64) -> String {
        let val = self.val_loss.map_or_else(|| "NA".to_string(), |v| format!("{v}"));
        format!(
            "epoch={} train={} val={} baseline={} lr={}",
            self.epoch, self.train_loss, val, baseline, self.lr
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
    /// Intercept-only loss on the training targets.
    pub baseline: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    EarlyStopped,
    Diverged,
}

/// A trained model and everything downstream operations need.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub network: Network,
    pub encoder: Encoder,
    pub formula: Formula,
    pub config: TrainConfig,
    pub history: TrainingHistory,
    /// Rows of the training table held out for validation (sorted).
    pub validation_rows: Vec<usize>,
    pub ensemble: Option<BootstrapEnsemble>,
    pub stop_reason: StopReason,
    /// Not persisted.
    pub wall_time_secs: f64,
    /// The training table; `None` when a model was saved without it.
    pub data: Option<DataTable>,
    pub warnings: Vec<String>,
    /// Number of completed `continue_training` calls; seeds their random streams.
    pub continuations: u32,
}

impl FittedModel {
    pub fn loss(&self) -> &LossSpec {
        &self.config.loss
    }

    /// Wraps an explicitly constructed network (no training). The config's
    /// architecture fields are taken from the network.
    pub fn from_network(
        network: Network,
        encoder: Encoder,
        formula: Formula,
        loss: LossSpec,
        data: Option<DataTable>,
    ) -> Result<Self, TrainError> {
        if encoder.width() != network.config().input_dim {
            return Err(TrainError::Network(NetworkError::ShapeMismatch(format!(
                "encoder width {} but network input {}",
                encoder.width(),
                network.config().input_dim
            ))));
        }
        let net_cfg = network.config().clone();
        let config = TrainConfig {
            hidden: net_cfg.hidden,
            activation: net_cfg.activation,
            bias: net_cfg.bias,
            dropout: net_cfg.dropout,
            loss,
            ..TrainConfig::default()
        };
        let baseline = match &data {
            Some(t) => {
                let y = encoder.encode_response(t)?;
                baseline_loss(&config.loss, &y, net_cfg.output_dim)?
            }
            None => f64::NAN,
        };
        Ok(FittedModel {
            network,
            encoder,
            formula,
            config,
            history: TrainingHistory { epochs: Vec::new(), baseline },
            validation_rows: Vec::new(),
            ensemble: None,
            stop_reason: StopReason::Completed,
            wall_time_secs: 0.0,
            data,
            warnings: Vec::new(),
            continuations: 0,
        })
    }

    pub fn training_data(&self) -> Result<&DataTable, TrainError> {
        self.data.as_ref().ok_or(TrainError::NoTrainingData)
    }

    /// Encoded design matrix and targets of the stored training table.
    pub fn training_design(&self) -> Result<(Array2<f64>, Vec<f64>), TrainError> {
        let table = self.training_data()?;
        Ok((self.encoder.apply(table)?, self.encoder.encode_response(table)?))
    }

    /// Rows that took part in gradient updates.
    pub fn fit_rows(&self) -> Result<Vec<usize>, TrainError> {
        let n = self.training_data()?.n_rows();
        Ok(complement(n, &self.validation_rows))
    }

    pub fn output_dim(&self) -> usize {
        self.network.config().output_dim
    }

    /// Output column names: `pred`, or one per class for multi-output models.
    pub fn output_names(&self) -> Vec<String> {
        match (self.output_dim(), self.encoder.response_levels()) {
            (1, _) => vec!["pred".into()],
            (k, Some(levels)) if levels.len() == k => levels.iter().map(|l| format!("pred_{l}")).collect(),
            (k, _) => (0..k).map(|i| format!("pred_{i}")).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    #[default]
    Response,
    Link,
}

impl std::str::FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "response" => Ok(Scale::Response),
            "link" => Ok(Scale::Link),
            other => Err(format!("unknown scale `{other}` (response|link)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// `n × outputs`.
    pub values: Array2<f64>,
    /// Sample sd across the bootstrap ensemble, when one exists.
    pub se: Option<Array2<f64>>,
}

pub(crate) fn complement(n: usize, excluded: &[usize]) -> Vec<usize> {
    let mut mask = vec![false; n];
    for &i in excluded {
        mask[i] = true;
    }
    (0..n).filter(|&i| !mask[i]).collect()
}

/// Sorted validation rows: `ceil(fraction · n)` drawn uniformly without replacement.
pub(crate) fn split_validation<R: Rng + ?Sized>(n: usize, fraction: f64, rng: &mut R) -> Vec<usize> {
    let n_val = ((fraction * n as f64).ceil() as usize).min(n);
    if n_val == 0 {
        return Vec::new();
    }
    let mut rows = index::sample(rng, n, n_val).into_vec();
    rows.sort_unstable();
    rows
}

/// Output width for the loss family given the encoded response.
fn output_dim(loss: &LossSpec, encoder: &Encoder, y: &[f64]) -> Result<usize, TrainError> {
    match (encoder.response_levels(), loss) {
        (Some(levels), LossSpec::Softmax) => {
            if levels.len() < 2 {
                return Err(TrainError::ConfigInvalid(format!(
                    "softmax needs at least 2 response levels, `{}` has {}",
                    encoder.response,
                    levels.len()
                )));
            }
            Ok(levels.len())
        }
        (Some(levels), LossSpec::Binomial) => {
            if levels.len() != 2 {
                return Err(TrainError::ConfigInvalid(format!(
                    "binomial needs a 2-level response, `{}` has {}",
                    encoder.response,
                    levels.len()
                )));
            }
            Ok(1)
        }
        (Some(_), LossSpec::Custom(_)) => Ok(1),
        (Some(_), other) => Err(TrainError::ConfigInvalid(format!(
            "{} loss needs a numeric response, `{}` is categorical",
            other.name(),
            encoder.response
        ))),
        (None, LossSpec::Custom(_)) => Ok(1),
        (None, loss) => Ok(output_dim_for(loss, y)?),
    }
}

/// Design matrix and split shared by a full-data fit and its bootstrap replicates.
pub(crate) struct Prepared {
    pub x: Array2<f64>,
    pub y: Vec<f64>,
    pub encoder: Encoder,
    pub train_rows: Vec<usize>,
    pub val_rows: Vec<usize>,
    pub output_dim: usize,
    pub rng: ChaCha8Rng,
}

pub(crate) fn prepare(
    config: &TrainConfig,
    table: &DataTable,
    formula: &Formula,
) -> Result<Prepared, TrainError> {
    config.validate()?;
    let n = table.n_rows();
    if n == 0 {
        return Err(TrainError::Data(TabularError::InvalidTable("no rows".into())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let val_rows = split_validation(n, config.validation, &mut rng);
    let train_rows = complement(n, &val_rows);
    if train_rows.is_empty() {
        return Err(TrainError::ConfigInvalid("validation split leaves no training rows".into()));
    }
    let design = build_design_on_rows(formula, table, &train_rows, config.standardize)?;
    let output_dim = output_dim(&config.loss, &design.encoder, &design.y)?;
    Ok(Prepared {
        x: design.x,
        y: design.y,
        encoder: design.encoder,
        train_rows,
        val_rows,
        output_dim,
        rng,
    })
}

/// Borrowed training data for one run of epochs.
pub(crate) struct EpochData<'a> {
    pub x: ArrayView2<'a, f64>,
    pub y: &'a [f64],
    pub train_rows: &'a [usize],
    pub val_rows: &'a [usize],
}

fn gather(x: &ArrayView2<f64>, y: &[f64], rows: &[usize]) -> (Array2<f64>, Vec<f64>) {
    (x.select(Axis(0), rows), rows.iter().map(|&r| y[r]).collect())
}

/// Runs up to `config.epochs` epochs on `net`, appending to `history`.
pub(crate) fn run_epochs<R: Rng + ?Sized>(
    net: &mut Network,
    config: &TrainConfig,
    data: &EpochData<'_>,
    rng: &mut R,
    history: &mut TrainingHistory,
    observer: &mut dyn FnMut(&EpochRecord, f64),
) -> Result<StopReason, TrainError> {
    let mut optimizer = OptimizerState::new(config.optimizer, config.lr);
    let mut scheduler = SchedulerState::new(config.scheduler.clone());
    let mut early = EarlyStopState::new(config.early_stopping);
    let (val_x, val_y) = gather(&data.x, data.y, data.val_rows);
    let mut order = data.train_rows.to_vec();
    let mut last_good = net.clone();
    let start = history.epochs.len();

    for e in 1..=config.epochs {
        let epoch = start + e;
        if config.shuffle {
            order.shuffle(rng);
        }
        let lr = optimizer.lr;
        let mut total = 0.0;
        let mut batches = 0usize;
        let mut diverged = false;
        for batch in order.chunks(config.batchsize) {
            let (xb, yb) = gather(&data.x, data.y, batch);
            let (out, cache) = net.forward(xb.view(), Mode::Train, rng)?;
            let (loss, grad_out) = match loss_and_grad(&config.loss, out.view(), &yb) {
                Ok(v) => v,
                Err(ObjectiveError::NonFiniteLoss) => {
                    diverged = true;
                    break;
                }
                Err(e) => return Err(e.into()),
            };
            let mut grads = net.backward(&cache, grad_out.view())?;
            let (penalty, penalty_grads) = elastic_net(net, config.lambda, config.alpha);
            grads.add_assign(&penalty_grads);
            if optimizer.step(net, &grads).is_err() {
                diverged = true;
                break;
            }
            total += loss + penalty;
            batches += 1;
        }
        let train_loss = total / batches.max(1) as f64;
        let val_loss = if data.val_rows.is_empty() {
            None
        } else {
            match loss_value(&config.loss, net.predict_link(val_x.view())?.view(), &val_y) {
                Ok(v) => Some(v),
                Err(ObjectiveError::NonFiniteLoss) => {
                    diverged = true;
                    None
                }
                Err(e) => return Err(e.into()),
            }
        };
        if diverged || !train_loss.is_finite() || !net.all_finite() {
            *net = last_good;
            return Ok(StopReason::Diverged);
        }

        let record = EpochRecord { epoch, train_loss, val_loss, lr };
        observer(&record, history.baseline);
        history.epochs.push(record);
        last_good = net.clone();

        optimizer.lr = scheduler.step(val_loss.unwrap_or(train_loss), optimizer.lr);
        if let Some(v) = val_loss {
            if early.update(v, epoch, net) == EarlyStopDecision::Stop {
                if let Some(best) = early.take_snapshot() {
                    *net = best;
                }
                return Ok(StopReason::EarlyStopped);
            }
        }
    }
    Ok(StopReason::Completed)
}

#[cfg(not(target_arch = "wasm32"))]
fn timer() -> impl FnOnce() -> f64 {
    let start = std::time::Instant::now();
    move || start.elapsed().as_secs_f64()
}

#[cfg(target_arch = "wasm32")]
fn timer() -> impl FnOnce() -> f64 {
    || 0.0
}

/// Trains a network as described by `config`. A bootstrap ensemble is added
/// when `config.bootstrap` is set.
pub fn fit(config: &TrainConfig, table: &DataTable, formula: &Formula) -> Result<FittedModel, TrainError> {
    fit_with_observer(config, table, formula, &mut |_, _| {})
}

/// [`fit`] with a callback invoked after every full-data epoch with the record and baseline loss.
pub fn fit_with_observer(
    config: &TrainConfig,
    table: &DataTable,
    formula: &Formula,
    observer: &mut dyn FnMut(&EpochRecord, f64),
) -> Result<FittedModel, TrainError> {
    let elapsed = timer();
    let Prepared { x, y, encoder, train_rows, val_rows, output_dim, mut rng } =
        prepare(config, table, formula)?;

    let mut warnings = encoder.warnings.clone();
    let train_y: Vec<f64> = train_rows.iter().map(|&r| y[r]).collect();
    let baseline = baseline_loss(&config.loss, &train_y, output_dim)?;
    if config.loss == LossSpec::Poisson && train_y.iter().all(|&v| v == 0.0) {
        warnings.push("all training counts are zero; poisson baseline uses a clamped rate".into());
    }

    let mut network = Network::init(config.network_config(x.ncols(), output_dim), &mut rng)?;
    let mut history = TrainingHistory { epochs: Vec::new(), baseline };
    let data = EpochData { x: x.view(), y: &y, train_rows: &train_rows, val_rows: &val_rows };
    let stop_reason = run_epochs(&mut network, config, &data, &mut rng, &mut history, observer)?;

    let ensemble = match config.bootstrap {
        Some(b) if stop_reason != StopReason::Diverged => {
            let ens = uncertainty::bootstrap_design(config, x.view(), &y, output_dim, b, config.seed)?;
            if !ens.failures.is_empty() {
                warnings.push(format!("{} bootstrap replicate(s) diverged and were dropped", ens.failures.len()));
            }
            Some(ens)
        }
        _ => None,
    };

    Ok(FittedModel {
        network,
        encoder,
        formula: formula.clone(),
        config: config.clone(),
        history,
        validation_rows: val_rows,
        ensemble,
        stop_reason,
        wall_time_secs: elapsed(),
        data: Some(table.clone()),
        warnings,
        continuations: 0,
    })
}

/// Training hyperparameters that may change when resuming. Architecture and
/// loss fields exist only to be rejected.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainOverrides {
    pub lr: Option<f64>,
    pub scheduler: Option<SchedulerConfig>,
    pub early_stopping: Option<Option<usize>>,
    pub batchsize: Option<usize>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub shuffle: Option<bool>,
    pub optimizer: Option<OptimizerKind>,
    pub threads: Option<usize>,
    pub hidden: Option<Vec<usize>>,
    pub activation: Option<Activation>,
    pub bias: Option<bool>,
    pub loss: Option<LossSpec>,
}

impl TrainOverrides {
    fn apply(&self, base: &TrainConfig, epochs: usize) -> Result<TrainConfig, TrainError> {
        if self.hidden.as_ref().is_some_and(|h| *h != base.hidden) {
            return Err(TrainError::ArchitectureOverride("hidden"));
        }
        if self.activation.is_some_and(|a| a != base.activation) {
            return Err(TrainError::ArchitectureOverride("activation"));
        }
        if self.bias.is_some_and(|b| b != base.bias) {
            return Err(TrainError::ArchitectureOverride("bias"));
        }
        if self.loss.as_ref().is_some_and(|l| *l != base.loss) {
            return Err(TrainError::ArchitectureOverride("loss"));
        }
        let mut cfg = base.clone();
        cfg.epochs = epochs;
        if let Some(v) = self.lr {
            cfg.lr = v;
        }
        if let Some(v) = &self.scheduler {
            cfg.scheduler = v.clone();
        }
        if let Some(v) = self.early_stopping {
            cfg.early_stopping = v;
        }
        if let Some(v) = self.batchsize {
            cfg.batchsize = v;
        }
        if let Some(v) = self.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.shuffle {
            cfg.shuffle = v;
        }
        if let Some(v) = self.optimizer {
            cfg.optimizer = v;
        }
        if let Some(v) = self.threads {
            cfg.threads = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Resumes training from the current parameters for `epochs` more epochs.
/// Optimizer moments, scheduler and early-stopping state start fresh; the
/// bootstrap ensemble, if any, is continued the same way.
pub fn continue_training(
    model: &FittedModel,
    epochs: usize,
    overrides: &TrainOverrides,
) -> Result<FittedModel, TrainError> {
    continue_training_with_observer(model, epochs, overrides, &mut |_, _| {})
}

pub fn continue_training_with_observer(
    model: &FittedModel,
    epochs: usize,
    overrides: &TrainOverrides,
    observer: &mut dyn FnMut(&EpochRecord, f64),
) -> Result<FittedModel, TrainError> {
    if matches!(model.config.loss, LossSpec::Custom(_)) && overrides.loss.is_some() {
        return Err(TrainError::ArchitectureOverride("loss"));
    }
    let config = overrides.apply(&model.config, epochs)?;
    if config.early_stopping.is_some() && model.validation_rows.is_empty() {
        return Err(TrainError::ConfigInvalid(
            "early stopping needs the validation split chosen at fit time".into(),
        ));
    }
    let elapsed = timer();
    let (x, y) = model.training_design()?;
    let train_rows = model.fit_rows()?;
    let round = model.continuations + 1;

    let mut out = model.clone();
    out.config = config.clone();
    out.continuations = round;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, u64::MAX - round as u64));
    let data = EpochData { x: x.view(), y: &y, train_rows: &train_rows, val_rows: &model.validation_rows };
    out.stop_reason = run_epochs(&mut out.network, &config, &data, &mut rng, &mut out.history, observer)?;

    if let Some(ens) = &model.ensemble {
        out.ensemble = Some(uncertainty::continue_ensemble(ens, &config, x.view(), &y, round)?);
    }
    out.wall_time_secs = model.wall_time_secs + elapsed();
    Ok(out)
}

/// Eval-mode predictions for already encoded rows.
pub fn predict_design(model: &FittedModel, x: ArrayView2<f64>, scale: Scale) -> Result<Prediction, TrainError> {
    let eval = |net: &Network| -> Result<Array2<f64>, TrainError> {
        let link = net.predict_link(x)?;
        Ok(match scale {
            Scale::Link => link,
            Scale::Response => inverse_link(&model.config.loss, link.view()),
        })
    };
    let values = eval(&model.network)?;
    let se = match &model.ensemble {
        Some(ens) => {
            let preds = ens.networks().map(eval).collect::<Result<Vec<_>, _>>()?;
            Some(uncertainty::elementwise_sd(&preds))
        }
        None => None,
    };
    Ok(Prediction { values, se })
}

/// Predictions for a new table, encoded with the stored encoder.
pub fn predict(model: &FittedModel, table: &DataTable, scale: Scale) -> Result<Prediction, TrainError> {
    let x = model.encoder.apply(table)?;
    predict_design(model, x.view(), scale)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub values: Vec<f64>,
    /// True for rows held out for validation.
    pub validation: Vec<bool>,
}

/// Response-scale residuals `y − ŷ` over the whole training table. For
/// multi-class models the residual is `1 − p̂(observed class)`.
pub fn residuals(model: &FittedModel) -> Result<Residuals, TrainError> {
    let (x, y) = model.training_design()?;
    let pred = predict_design(model, x.view(), Scale::Response)?.values;
    let values = if pred.ncols() == 1 {
        y.iter().zip(pred.column(0)).map(|(t, p)| t - p).collect()
    } else {
        y.iter().enumerate().map(|(i, &t)| 1.0 - pred[[i, t as usize]]).collect()
    };
    let mut validation = vec![false; y.len()];
    for &r in &model.validation_rows {
        validation[r] = true;
    }
    Ok(Residuals { values, validation })
}
