//! Fully-connected neural networks specified with R-style formulas, trained
//! by mini-batch gradient descent, with bootstrap uncertainty and
//! model-agnostic explanations.
//!
//! ```
//! use formulanet::{fit, parse_formula, synth, TrainConfig};
//!
//! let data = synth::linear(200, 0, 1);
//! let formula = parse_formula("y ~ .").unwrap();
//! let config = TrainConfig { hidden: vec![16], epochs: 5, ..TrainConfig::default() };
//! let model = fit(&config, &data, &formula).unwrap();
//! assert_eq!(model.history.epochs.len(), 5);
//! ```

pub mod interpret;
pub mod network;
pub mod objective;
pub mod optimize;
pub mod persist;
pub mod plot;
pub mod synth;
pub mod tabular;
pub mod training;
pub mod uncertainty;

pub use interpret::{
    accumulated_local_effects, avg_conditional_effects, partial_dependence, permutation_importance,
    summarize, EffectCurve, InterpretError, Summary,
};
pub use network::{Activation, Network, NetworkConfig};
pub use objective::LossSpec;
pub use optimize::{OptimizerKind, SchedulerConfig, SchedulerPolicy};
pub use persist::{load_model, save_model, PersistError};
pub use tabular::{parse_formula, DataTable, Formula, TabularError};
pub use training::{
    continue_training, fit, predict, residuals, FittedModel, Scale, StopReason, TrainConfig,
    TrainError, TrainOverrides,
};
pub use uncertainty::{aggregate, bootstrap_fit, normal_cdf, BootstrapEnsemble, StatRow};
