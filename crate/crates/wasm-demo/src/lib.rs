//! Browser demo: train a small network on generated data, then draw its loss
//! curves, effect curves and summary table. [`Demo`] holds the plain Rust
//! session; [`Session`] wraps it for JavaScript.

use formulanet::plot::{render_svg, Series};
use formulanet::{
    accumulated_local_effects, fit, parse_formula, partial_dependence, summarize, synth, Activation, DataTable,
    FittedModel, LossSpec, TrainConfig,
};
use wasm_bindgen::prelude::*;

/// Permutations per feature for the summary table.
const SUMMARY_PERMUTATIONS: usize = 3;

/// Training options exposed in the page.
#[derive(Debug, Clone)]
pub struct Options {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub epochs: usize,
    pub lr: f64,
    pub bootstrap: Option<usize>,
    pub seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Self { hidden: vec![16, 16], activation: Activation::Selu, epochs: 60, lr: 0.05, bootstrap: None, seed: 1 }
    }
}

/// Generated datasets: `(name, formula, loss)`.
pub const DATASETS: [(&str, &str, &str); 3] = [
    ("linear", "y ~ .", "gaussian"),
    ("xor", "label ~ .", "binomial"),
    ("presence", "label ~ .", "binomial"),
];

pub fn dataset(name: &str, n: usize, seed: u64) -> Result<DataTable, String> {
    match name {
        "linear" => Ok(synth::linear(n, 2, seed)),
        "xor" => Ok(synth::xor(n, seed)),
        "presence" => Ok(synth::presence_absence(n, 6, seed)),
        other => Err(format!("unknown dataset `{other}`")),
    }
}

#[derive(Default)]
pub struct Demo {
    model: Option<FittedModel>,
}

impl Demo {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn model(&self) -> Option<&FittedModel> {
        self.model.as_ref()
    }

    fn fitted(&self) -> Result<&FittedModel, String> {
        self.model.as_ref().ok_or_else(|| "train a model first".to_string())
    }

    /// Trains on `dataset` and returns the loss-curve SVG.
    pub fn train(&mut self, dataset_name: &str, n: usize, options: &Options) -> Result<String, String> {
        let (_, formula, loss) =
            DATASETS.iter().find(|d| d.0 == dataset_name).ok_or_else(|| format!("unknown dataset `{dataset_name}`"))?;
        let table = dataset(dataset_name, n, options.seed)?;
        let config = TrainConfig {
            hidden: options.hidden.clone(),
            activation: options.activation,
            epochs: options.epochs,
            lr: options.lr,
            validation: 0.2,
            bootstrap: options.bootstrap,
            seed: options.seed,
            loss: loss.parse::<LossSpec>()?,
            ..TrainConfig::default()
        };
        let formula = parse_formula(formula).map_err(|e| e.to_string())?;
        let model = fit(&config, &table, &formula).map_err(|e| e.to_string())?;
        self.model = Some(model);
        self.loss_svg()
    }

    pub fn loss_svg(&self) -> Result<String, String> {
        let h = &self.fitted()?.history;
        let x: Vec<f64> = h.epochs.iter().map(|e| e.epoch as f64).collect();
        let series = [
            Series::new("training", x.clone(), h.epochs.iter().map(|e| e.train_loss).collect()),
            Series::new("validation", x.clone(), h.epochs.iter().map(|e| e.val_loss.unwrap_or(f64::NAN)).collect()),
            Series::new("baseline", x.clone(), vec![h.baseline; x.len()]),
        ];
        render_svg(&series, "Training loss", "epoch", "loss").map_err(|e| e.to_string())
    }

    pub fn features(&self) -> Result<Vec<String>, String> {
        Ok(self.fitted()?.encoder.features.iter().map(|f| f.source.clone()).collect())
    }

    /// `kind` is `pdp` or `ale`.
    pub fn effect_svg(&self, feature: &str, kind: &str) -> Result<String, String> {
        let model = self.fitted()?;
        let curve = match kind {
            "pdp" => partial_dependence(model, feature, 25, 0),
            "ale" => accumulated_local_effects(model, feature, 10, 0),
            other => return Err(format!("unknown curve `{other}` (pdp|ale)")),
        }
        .map_err(|e| e.to_string())?;
        let mut series = Series::new(feature, curve.grid.clone(), curve.values.clone());
        if let Some(se) = &curve.se {
            series = series.with_se(se.clone());
        }
        let title = format!("{} of {}", kind.to_uppercase(), feature);
        render_svg(&[series], &title, feature, kind).map_err(|e| e.to_string())
    }

    pub fn summary(&self) -> Result<String, String> {
        let model = self.fitted()?;
        summarize(model, SUMMARY_PERMUTATIONS, model.config.seed).map(|s| s.render()).map_err(|e| e.to_string())
    }
}

fn js_err(e: String) -> JsValue {
    JsValue::from_str(&e)
}

#[wasm_bindgen]
pub struct Session {
    inner: Demo,
}

#[wasm_bindgen]
impl Session {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Session {
        Session { inner: Demo::new() }
    }

    /// `hidden` is comma-separated widths; `bootstrap` 0 disables the ensemble.
    #[allow(clippy::too_many_arguments)]
    pub fn train(
        &mut self,
        dataset: &str,
        n: usize,
        hidden: &str,
        activation: &str,
        epochs: usize,
        lr: f64,
        bootstrap: usize,
        seed: u32,
    ) -> Result<String, JsValue> {
        let hidden = hidden
            .split(',')
            .map(|w| w.trim().parse::<usize>().map_err(|_| js_err(format!("bad layer width `{w}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        let options = Options {
            hidden,
            activation: activation.parse().map_err(js_err)?,
            epochs,
            lr,
            bootstrap: (bootstrap > 0).then_some(bootstrap),
            seed: seed.into(),
        };
        self.inner.train(dataset, n, &options).map_err(js_err)
    }

    pub fn features(&self) -> Result<Vec<String>, JsValue> {
        self.inner.features().map_err(js_err)
    }

    pub fn effect(&self, feature: &str, kind: &str) -> Result<String, JsValue> {
        self.inner.effect_svg(feature, kind).map_err(js_err)
    }

    pub fn summary(&self) -> Result<String, JsValue> {
        self.inner.summary().map_err(js_err)
    }
}

impl Default for Session {
    fn default() -> Self {
        Self::new()
    }
}
