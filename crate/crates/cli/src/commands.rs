use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use formulanet::interpret::{CurveKind, InterpretError, SummaryTable};
use formulanet::plot::{render_svg, Series};
use formulanet::tabular::{balance_classes, FormulaError, RawCsv, TabularError};
use formulanet::training::{continue_training_with_observer, fit_with_observer, EpochRecord};
use formulanet::{
    accumulated_local_effects, load_model, parse_formula, partial_dependence, predict, save_model, summarize,
    DataTable, FittedModel, PersistError, SchedulerConfig, StopReason, TrainConfig, TrainError, TrainOverrides,
};

use crate::args::{BalanceArgs, ContinueArgs, ExplainArgs, PredictArgs, SchedulerArgs, TrainArgs, What};

/// A failed command and its exit code class.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Diverged(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
            Failure::Diverged(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Diverged(m) => m,
        }
    }
}

impl From<TrainError> for Failure {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::ConfigInvalid(_) | TrainError::ArchitectureOverride(_) => Failure::Usage(e.to_string()),
            TrainError::Data(TabularError::Formula(_)) => Failure::Usage(e.to_string()),
            TrainError::Bootstrap(_) => Failure::Diverged(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<InterpretError> for Failure {
    fn from(e: InterpretError) -> Self {
        match e {
            InterpretError::Train(t) => t.into(),
            InterpretError::InvalidArgument(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<PersistError> for Failure {
    fn from(e: PersistError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<TabularError> for Failure {
    fn from(e: TabularError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<FormulaError> for Failure {
    fn from(e: FormulaError) -> Self {
        Failure::Usage(format!("--formula: {e}"))
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

/// `model.fnm` → `model.loss.svg`.
pub fn loss_svg_path(model: &Path) -> PathBuf {
    model.with_extension("loss.svg")
}

fn apply_scheduler(base: &SchedulerConfig, args: &SchedulerArgs) -> SchedulerConfig {
    SchedulerConfig {
        policy: args.lr_scheduler.unwrap_or(base.policy),
        patience: args.patience.unwrap_or(base.patience),
        factor: args.factor.unwrap_or(base.factor),
        min_lr: args.min_lr.unwrap_or(base.min_lr),
    }
}

fn scheduler_given(args: &SchedulerArgs) -> bool {
    args.lr_scheduler.is_some() || args.patience.is_some() || args.factor.is_some() || args.min_lr.is_some()
}

fn logger(quiet: bool) -> impl FnMut(&EpochRecord, f64) {
    move |record, baseline| {
        if !quiet {
            println!("{}", record.log_line(baseline));
        }
    }
}

fn write_loss_svg(model: &FittedModel, path: &Path) -> Result<(), Failure> {
    let h = &model.history;
    let x: Vec<f64> = h.epochs.iter().map(|e| e.epoch as f64).collect();
    let series = [
        Series::new("training", x.clone(), h.epochs.iter().map(|e| e.train_loss).collect()),
        Series::new("validation", x.clone(), h.epochs.iter().map(|e| e.val_loss.unwrap_or(f64::NAN)).collect()),
        Series::new("baseline", x.clone(), vec![h.baseline; x.len()]),
    ];
    let svg = render_svg(&series, "Training loss", "epoch", "loss").map_err(|e| Failure::Data(e.to_string()))?;
    write_file(path, svg)
}

fn finish_training(model: &FittedModel, out: &Path, embed: bool) -> Result<(), Failure> {
    for w in &model.warnings {
        eprintln!("warning: {w}");
    }
    save_model(model, out, embed)?;
    let svg = loss_svg_path(out);
    write_loss_svg(model, &svg)?;
    let last = model.history.epochs.last();
    eprintln!(
        "{} after {} epochs; model written to {}, loss curves to {}",
        match model.stop_reason {
            StopReason::Completed => "completed",
            StopReason::EarlyStopped => "early stopped",
            StopReason::Diverged => "diverged",
        },
        last.map_or(0, |e| e.epoch),
        out.display(),
        svg.display()
    );
    if let Some(e) = &model.ensemble {
        eprintln!("bootstrap: {} replicates, {} failed", e.replicates.len(), e.failures.len());
    }
    if model.stop_reason == StopReason::Diverged {
        return Err(Failure::Diverged(
            "training loss became non-finite; the saved model holds the last finite parameters (try a smaller --lr)"
                .into(),
        ));
    }
    Ok(())
}

pub fn train(args: TrainArgs) -> Result<(), Failure> {
    let formula = parse_formula(&args.formula)?;
    let table = DataTable::from_csv_path(&args.data)?;
    let defaults = SchedulerConfig::default();
    let config = TrainConfig {
        hidden: args.hidden.0,
        activation: args.activation,
        bias: args.bias,
        validation: args.validation,
        epochs: args.epochs,
        batchsize: args.batchsize,
        shuffle: args.shuffle,
        lr: args.lr,
        lambda: args.lambda,
        alpha: args.alpha,
        dropout: args.dropout,
        early_stopping: args.early_stopping,
        bootstrap: args.bootstrap,
        optimizer: args.optimizer,
        scheduler: apply_scheduler(&defaults, &args.scheduler),
        seed: args.seed,
        loss: args.loss,
        standardize: !args.no_standardize,
        threads: args.threads,
    };
    let model = fit_with_observer(&config, &table, &formula, &mut logger(args.quiet))?;
    finish_training(&model, &args.out, !args.no_embed_data)
}

pub fn continue_(args: ContinueArgs) -> Result<(), Failure> {
    if args.dropout.is_some() {
        return Err(Failure::Usage("--dropout cannot be changed when continuing training".into()));
    }
    let model = load_model(&args.model)?;
    let overrides = TrainOverrides {
        lr: args.lr,
        scheduler: scheduler_given(&args.scheduler).then(|| apply_scheduler(&model.config.scheduler, &args.scheduler)),
        early_stopping: args.early_stopping.map(Some),
        batchsize: args.batchsize,
        lambda: args.lambda,
        alpha: args.alpha,
        shuffle: args.shuffle,
        optimizer: args.optimizer,
        threads: args.threads,
        hidden: args.hidden.map(|h| h.0),
        activation: args.activation,
        bias: args.bias,
        loss: args.loss,
    };
    let resumed = continue_training_with_observer(&model, args.epochs, &overrides, &mut logger(args.quiet))?;
    finish_training(&resumed, &args.out, !args.no_embed_data && model.data.is_some())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn predict_cmd(args: PredictArgs) -> Result<(), Failure> {
    let model = load_model(&args.model)?;
    let table = DataTable::from_csv_path(&args.data)?;
    let pred = predict(&model, &table, args.scale.into())?;
    let names = model.output_names();
    let mut header: Vec<String> = names.clone();
    if pred.se.is_some() {
        if names.len() == 1 {
            header.push("se".into());
        } else {
            header.extend(names.iter().map(|n| format!("se_{}", n.trim_start_matches("pred_"))));
        }
    }
    let mut out = header.iter().map(|h| csv_field(h)).collect::<Vec<_>>().join(",");
    out.push('\n');
    for i in 0..pred.values.nrows() {
        let mut fields: Vec<String> = pred.values.row(i).iter().map(|v| v.to_string()).collect();
        if let Some(se) = &pred.se {
            fields.extend(se.row(i).iter().map(|v| v.to_string()));
        }
        writeln!(out, "{}", fields.join(",")).expect("writing to a String");
    }
    write_file(&args.out, out)
}

fn print_table(table: &SummaryTable) {
    print!("{}", table.render());
}

pub fn explain(args: ExplainArgs) -> Result<(), Failure> {
    let feature = match (args.what, &args.feature) {
        (What::Pdp | What::Ale, None) => {
            return Err(Failure::Usage("--what pdp|ale requires --feature <name>".into()));
        }
        (_, f) => f.clone(),
    };
    let model = load_model(&args.model)?;
    let prefix = args.out.clone().unwrap_or_else(|| args.model.with_extension(""));
    match args.what {
        What::Summary | What::Importance | What::Ace => {
            let summary = summarize(&model, args.permutations, args.seed)?;
            match args.what {
                What::Summary => print!("{}", summary.render()),
                What::Importance => print_table(&summary.importance),
                _ => print_table(&summary.ace),
            }
            if args.out.is_some() {
                let mut written = Vec::new();
                if args.what != What::Ace {
                    let p = PathBuf::from(format!("{}.importance.csv", prefix.display()));
                    write_file(&p, summary.importance.to_csv())?;
                    written.push(p);
                }
                if args.what != What::Importance {
                    let p = PathBuf::from(format!("{}.ace.csv", prefix.display()));
                    write_file(&p, summary.ace.to_csv())?;
                    written.push(p);
                }
                for p in written {
                    eprintln!("wrote {}", p.display());
                }
            }
        }
        What::Pdp | What::Ale => {
            let feature = feature.expect("checked above");
            let output = match (&args.class, model.encoder.response_levels()) {
                (None, _) => 0,
                (Some(c), Some(levels)) if model.output_dim() > 1 => levels
                    .iter()
                    .position(|l| l == c)
                    .ok_or_else(|| Failure::Usage(format!("--class `{c}` is not a level of the response")))?,
                (Some(_), _) => return Err(Failure::Usage("--class only applies to multi-class models".into())),
            };
            let curve = if args.what == What::Pdp {
                partial_dependence(&model, &feature, args.grid, output)?
            } else {
                accumulated_local_effects(&model, &feature, args.bins, output)?
            };
            let kind = curve.kind.name();
            let base = format!("{}.{}.{}", prefix.display(), feature, kind);
            let csv = PathBuf::from(format!("{base}.csv"));
            let svg = PathBuf::from(format!("{base}.svg"));
            write_file(&csv, curve.to_csv())?;
            let mut series = Series::new(feature.clone(), curve.grid.clone(), curve.values.clone());
            if let Some(se) = &curve.se {
                series = series.with_se(se.clone());
            }
            let title = match curve.kind {
                CurveKind::Pdp => format!("Partial dependence of {} on {}", model.encoder.response, feature),
                CurveKind::Ale => format!("Accumulated local effects of {} on {}", feature, model.encoder.response),
            };
            let plot = render_svg(&[series], &title, &feature, kind).map_err(|e| Failure::Data(e.to_string()))?;
            write_file(&svg, plot)?;
            if curve.kind == CurveKind::Ale && curve.bin_counts.len() < curve.requested_bins {
                eprintln!(
                    "note: tied quantiles merged, {} of {} bins used",
                    curve.bin_counts.len(),
                    curve.requested_bins
                );
            }
            eprintln!("wrote {} and {}", csv.display(), svg.display());
        }
    }
    Ok(())
}

pub fn balance(args: BalanceArgs) -> Result<(), Failure> {
    let file = fs::File::open(&args.data).map_err(|e| Failure::Data(format!("{}: {e}", args.data.display())))?;
    let raw = RawCsv::read(file)?;
    let balanced = balance_classes(&raw, &args.response, args.seed)?;
    let out = fs::File::create(&args.out).map_err(|e| Failure::Data(format!("{}: {e}", args.out.display())))?;
    balanced.write(out)?;
    eprintln!("wrote {} rows to {}", balanced.records.len(), args.out.display());
    Ok(())
}
