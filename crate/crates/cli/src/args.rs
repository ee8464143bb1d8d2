use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use formulanet::{Activation, LossSpec, OptimizerKind, Scale, SchedulerPolicy};

#[derive(Debug, Parser)]
#[command(name = "formulanet", version, about = "Formula-driven neural networks for tabular data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a network and write a model file.
    Train(TrainArgs),
    /// Resume training of a saved model.
    Continue(ContinueArgs),
    /// Predict for new rows.
    Predict(PredictArgs),
    /// Importance, conditional effects and effect curves.
    Explain(ExplainArgs),
    /// Undersample the majority class of a binary response.
    Balance(BalanceArgs),
}

/// Comma-separated hidden layer widths, e.g. `50,50,50`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Widths(pub Vec<usize>);

pub fn parse_hidden(s: &str) -> Result<Widths, String> {
    s.split(',')
        .map(|w| match w.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("`{w}` is not a positive layer width")),
            Ok(v) => Ok(v),
        })
        .collect::<Result<_, _>>()
        .map(Widths)
}

#[derive(Debug, Args)]
pub struct SchedulerArgs {
    /// Learning-rate scheduler.
    #[arg(long = "lr-scheduler", value_name = "none|reduce_on_plateau")]
    pub lr_scheduler: Option<SchedulerPolicy>,
    /// Non-improving epochs before the learning rate is reduced.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Multiplicative learning-rate reduction.
    #[arg(long)]
    pub factor: Option<f64>,
    /// Floor for the reduced learning rate.
    #[arg(long = "min-lr")]
    pub min_lr: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_name = "CSV")]
    pub data: PathBuf,
    /// Model formula, e.g. "label ~ ." or "y ~ x1 + x2".
    #[arg(long)]
    pub formula: String,
    #[arg(long, default_value = "gaussian", value_name = "gaussian|mse|binomial|poisson|softmax")]
    pub loss: LossSpec,
    /// Hidden layer widths.
    #[arg(long, default_value = "50,50", value_parser = parse_hidden)]
    pub hidden: Widths,
    #[arg(long, default_value = "selu")]
    pub activation: Activation,
    /// Bias terms in hidden layers.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub bias: bool,
    /// Fraction of rows held out for validation.
    #[arg(long, default_value_t = 0.0)]
    pub validation: f64,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batchsize: usize,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub shuffle: bool,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    /// Elastic-net strength.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Elastic-net L1 share (0 = ridge, 1 = lasso).
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub dropout: f64,
    /// Early-stopping patience in epochs (requires --validation).
    #[arg(long = "early-stopping")]
    pub early_stopping: Option<usize>,
    /// Number of bootstrap replicates.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long, default_value = "sgd", value_name = "sgd|adam")]
    pub optimizer: OptimizerKind,
    #[command(flatten)]
    pub scheduler: SchedulerArgs,
    #[arg(long, env = "FORMULANET_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Worker threads for bootstrap replicates.
    #[arg(long, env = "FORMULANET_THREADS", default_value_t = 1)]
    pub threads: usize,
    /// Feed numeric predictors unscaled.
    #[arg(long = "no-standardize")]
    pub no_standardize: bool,
    /// Do not store the training data in the model file.
    #[arg(long = "no-embed-data")]
    pub no_embed_data: bool,
    /// Suppress per-epoch log lines.
    #[arg(long, short)]
    pub quiet: bool,
    #[arg(long, value_name = "MODEL")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ContinueArgs {
    #[arg(long, value_name = "MODEL")]
    pub model: PathBuf,
    #[arg(long)]
    pub epochs: usize,
    #[arg(long)]
    pub lr: Option<f64>,
    #[command(flatten)]
    pub scheduler: SchedulerArgs,
    #[arg(long = "early-stopping")]
    pub early_stopping: Option<usize>,
    #[arg(long)]
    pub batchsize: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, action = ArgAction::Set)]
    pub shuffle: Option<bool>,
    #[arg(long)]
    pub optimizer: Option<OptimizerKind>,
    #[arg(long, env = "FORMULANET_THREADS")]
    pub threads: Option<usize>,
    /// Rejected: the architecture is fixed once trained.
    #[arg(long, value_parser = parse_hidden, hide = true)]
    pub hidden: Option<Widths>,
    #[arg(long, hide = true)]
    pub activation: Option<Activation>,
    #[arg(long, hide = true, action = ArgAction::Set)]
    pub bias: Option<bool>,
    #[arg(long, hide = true)]
    pub loss: Option<LossSpec>,
    #[arg(long, hide = true)]
    pub dropout: Option<f64>,
    #[arg(long = "no-embed-data")]
    pub no_embed_data: bool,
    #[arg(long, short)]
    pub quiet: bool,
    #[arg(long, value_name = "MODEL")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScaleArg {
    Response,
    Link,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Response => Scale::Response,
            ScaleArg::Link => Scale::Link,
        }
    }
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, value_name = "MODEL")]
    pub model: PathBuf,
    #[arg(long, value_name = "CSV")]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "response")]
    pub scale: ScaleArg,
    #[arg(long, value_name = "CSV")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum What {
    Summary,
    Importance,
    Ace,
    Pdp,
    Ale,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long, value_name = "MODEL")]
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub what: What,
    /// Feature for pdp/ale.
    #[arg(long)]
    pub feature: Option<String>,
    /// ALE bins.
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    /// PDP grid points.
    #[arg(long, default_value_t = 20)]
    pub grid: usize,
    /// Permutations per feature for importance.
    #[arg(long, default_value_t = 5)]
    pub permutations: usize,
    /// Response class for curves of multi-class models (default: first level).
    #[arg(long)]
    pub class: Option<String>,
    #[arg(long, env = "FORMULANET_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Output prefix; defaults to the model path without its extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BalanceArgs {
    #[arg(long, value_name = "CSV")]
    pub data: PathBuf,
    #[arg(long)]
    pub response: String,
    #[arg(long, env = "FORMULANET_SEED", default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_name = "CSV")]
    pub out: PathBuf,
}
