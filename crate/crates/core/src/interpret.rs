//! Permutation importance, average conditional effects, partial dependence,
//! accumulated local effects, and the summary tables built from them.

use std::fmt::Write as _;
use std::ops::Range;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::network::Network;
use crate::objective::{inverse_link, loss_value, LossSpec};
use crate::tabular::{Column, Encoder, FeatureEncoding};
use crate::training::{FittedModel, TrainError};
use crate::uncertainty::{aggregate, parallel_map, sample_sd, StatRow};

pub const DEFAULT_PERMUTATIONS: usize = 5;
pub const DEFAULT_GRID: usize = 20;
pub const DEFAULT_BINS: usize = 10;
/// ACE step as a fraction of the feature's sd on the design scale.
pub const ACE_STEP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpretError {
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("feature `{0}` is categorical; effects need a numeric feature")]
    CategoricalFeature(String),
    #[error("feature `{0}` has fewer than 2 distinct values")]
    DegenerateFeature(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Train(#[from] TrainError),
}

/// Design-matrix columns belonging to one source column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGroup {
    pub name: String,
    pub columns: Range<usize>,
}

pub fn feature_groups(encoder: &Encoder) -> Vec<FeatureGroup> {
    encoder
        .features
        .iter()
        .zip(encoder.feature_columns())
        .map(|(f, columns)| FeatureGroup { name: f.source.clone(), columns })
        .collect()
}

/// Encoded fit rows of a model, shared by all xAI computations.
struct Frame<'a> {
    model: &'a FittedModel,
    x: Array2<f64>,
    y: Vec<f64>,
    rows: Vec<usize>,
}

impl<'a> Frame<'a> {
    fn new(model: &'a FittedModel) -> Result<Self, TrainError> {
        let (x, y) = model.training_design()?;
        let rows = model.fit_rows()?;
        let x = x.select(Axis(0), &rows);
        let y = rows.iter().map(|&r| y[r]).collect();
        Ok(Frame { model, x, y, rows })
    }

    fn loss(&self) -> &LossSpec {
        self.model.loss()
    }

    /// Response-scale predictions of output `out`.
    fn response(&self, net: &Network, x: &Array2<f64>, out: usize) -> Result<Vec<f64>, TrainError> {
        let link = net.predict_link(x.view())?;
        Ok(inverse_link(self.loss(), link.view()).column(out).to_vec())
    }

    fn networks(&self) -> Vec<&'a Network> {
        self.model.ensemble.iter().flat_map(|e| e.networks()).collect()
    }

    /// Numeric feature lookup: (feature index, design column, center, scale).
    fn numeric(&self, name: &str) -> Result<(usize, usize, f64, f64), InterpretError> {
        let enc = &self.model.encoder;
        let idx = enc.feature_index(name).ok_or_else(|| InterpretError::UnknownFeature(name.into()))?;
        match enc.features[idx].encoding {
            FeatureEncoding::Numeric { center, scale } => {
                Ok((idx, enc.feature_columns()[idx].start, center, scale))
            }
            FeatureEncoding::Categorical { .. } => Err(InterpretError::CategoricalFeature(name.into())),
        }
    }

    /// Raw (original-scale) values of a numeric feature on the fit rows.
    fn raw_values(&self, name: &str) -> Result<Vec<f64>, InterpretError> {
        let table = self.model.training_data()?;
        match table.column(name) {
            Some(Column::Numeric(v)) => Ok(self.rows.iter().map(|&r| v[r]).collect()),
            Some(_) => Err(InterpretError::CategoricalFeature(name.into())),
            None => Err(InterpretError::UnknownFeature(name.into())),
        }
    }

    fn check_output(&self, out: usize) -> Result<(), InterpretError> {
        let k = self.model.output_dim();
        if out >= k {
            return Err(InterpretError::InvalidArgument(format!("output {out} out of range (model has {k})")));
        }
        Ok(())
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn importance_for(frame: &Frame, net: &Network, groups: &[FeatureGroup], n_perm: usize, seed: u64) -> Result<Vec<f64>, TrainError> {
    let loss = frame.loss();
    let base = loss_value(loss, net.predict_link(frame.x.view())?.view(), &frame.y)?;
    let n = frame.x.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(groups.len());
    for g in groups {
        let mut total = 0.0;
        for _ in 0..n_perm {
            perm.shuffle(&mut rng);
            let mut xp = frame.x.clone();
            for c in g.columns.clone() {
                let col = frame.x.column(c);
                for (i, &src) in perm.iter().enumerate() {
                    xp[[i, c]] = col[src];
                }
            }
            total += loss_value(loss, net.predict_link(xp.view())?.view(), &frame.y)? - base;
        }
        out.push(total / n_perm as f64);
    }
    Ok(out)
}

/// Mean increase in loss when a feature's design columns are jointly
/// row-permuted, over `n_perm` permutations, on the fit rows.
pub fn permutation_importance(model: &FittedModel, n_perm: usize, seed: u64) -> Result<Vec<(String, f64)>, InterpretError> {
    if n_perm == 0 {
        return Err(InterpretError::InvalidArgument("n_perm must be >= 1".into()));
    }
    let frame = Frame::new(model)?;
    let groups = feature_groups(&model.encoder);
    let values = importance_for(&frame, &model.network, &groups, n_perm, seed)?;
    Ok(groups.into_iter().map(|g| g.name).zip(values).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalEffect {
    pub feature: String,
    /// Per unit of the original variable.
    pub ace: f64,
    /// Per-observation central differences, same units.
    pub local: Vec<f64>,
}

fn ace_for(frame: &Frame, net: &Network, out: usize) -> Result<Vec<ConditionalEffect>, TrainError> {
    let enc = &frame.model.encoder;
    let mut effects = Vec::new();
    for (f, cols) in enc.features.iter().zip(enc.feature_columns()) {
        let FeatureEncoding::Numeric { scale, .. } = f.encoding else { continue };
        let c = cols.start;
        let sd = sample_sd(&frame.x.column(c).to_vec());
        let h = if sd > 0.0 && sd.is_finite() { ACE_STEP * sd } else { ACE_STEP };
        let mut up = frame.x.clone();
        let mut down = frame.x.clone();
        up.column_mut(c).mapv_inplace(|v| v + h);
        down.column_mut(c).mapv_inplace(|v| v - h);
        let fu = frame.response(net, &up, out)?;
        let fd = frame.response(net, &down, out)?;
        let local: Vec<f64> = fu.iter().zip(&fd).map(|(a, b)| (a - b) / (2.0 * h) / scale).collect();
        effects.push(ConditionalEffect { feature: f.source.clone(), ace: mean(&local), local });
    }
    Ok(effects)
}

/// Average conditional effect of every numeric feature on output `out`
/// (response scale). Categorical features are skipped.
pub fn avg_conditional_effects(model: &FittedModel, out: usize) -> Result<Vec<ConditionalEffect>, InterpretError> {
    let frame = Frame::new(model)?;
    frame.check_output(out)?;
    Ok(ace_for(&frame, &model.network, out)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Pdp,
    Ale,
}

impl CurveKind {
    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Pdp => "pdp",
            CurveKind::Ale => "ale",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectCurve {
    pub feature: String,
    pub kind: CurveKind,
    /// Original scale, strictly increasing.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub se: Option<Vec<f64>>,
    /// ALE only: observations per bin.
    pub bin_counts: Vec<usize>,
    /// ALE only: centered effect of each bin (mean of its two edge values).
    pub bin_values: Vec<f64>,
    /// ALE only: bins requested before merging tied edges.
    pub requested_bins: usize,
}

impl EffectCurve {
    /// `grid,value[,se]` with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(if self.se.is_some() { "grid,value,se\n" } else { "grid,value\n" });
        for i in 0..self.grid.len() {
            match &self.se {
                Some(se) => writeln!(s, "{},{},{}", self.grid[i], self.values[i], se[i]),
                None => writeln!(s, "{},{}", self.grid[i], self.values[i]),
            }
            .expect("writing to a String");
        }
        s
    }
}

fn pointwise_se(curves: &[Vec<f64>]) -> Vec<f64> {
    (0..curves[0].len())
        .map(|i| sample_sd(&curves.iter().map(|c| c[i]).collect::<Vec<_>>()))
        .collect()
}

fn replicate_curves(
    frame: &Frame,
    eval: &(dyn Fn(&Network) -> Result<Vec<f64>, TrainError> + Sync),
) -> Result<Option<Vec<f64>>, TrainError> {
    let nets = frame.networks();
    if nets.len() < 2 {
        return Ok(None);
    }
    let curves = parallel_map(nets.len(), frame.model.config.threads, |i| eval(nets[i]))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Some(pointwise_se(&curves)))
}

fn pdp_for(frame: &Frame, net: &Network, col: usize, design_grid: &[f64], out: usize) -> Result<Vec<f64>, TrainError> {
    design_grid
        .iter()
        .map(|&z| {
            let mut x = frame.x.clone();
            x.column_mut(col).fill(z);
            Ok(mean(&frame.response(net, &x, out)?))
        })
        .collect()
}

/// Mean response with the feature fixed at each of `grid_size` equally
/// spaced values over its observed range.
pub fn partial_dependence(model: &FittedModel, feature: &str, grid_size: usize, out: usize) -> Result<EffectCurve, InterpretError> {
    if grid_size < 2 {
        return Err(InterpretError::InvalidArgument("grid size must be >= 2".into()));
    }
    let frame = Frame::new(model)?;
    frame.check_output(out)?;
    let (_, col, center, scale) = frame.numeric(feature)?;
    let raw = frame.raw_values(feature)?;
    let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(InterpretError::DegenerateFeature(feature.into()));
    }
    let step = (hi - lo) / (grid_size - 1) as f64;
    let grid: Vec<f64> = (0..grid_size).map(|i| if i == grid_size - 1 { hi } else { lo + step * i as f64 }).collect();
    let design: Vec<f64> = grid.iter().map(|v| (v - center) / scale).collect();
    let values = pdp_for(&frame, &model.network, col, &design, out)?;
    let se = replicate_curves(&frame, &|net| pdp_for(&frame, net, col, &design, out))?;
    Ok(EffectCurve {
        feature: feature.into(),
        kind: CurveKind::Pdp,
        grid,
        values,
        se,
        bin_counts: Vec::new(),
        bin_values: Vec::new(),
        requested_bins: 0,
    })
}

/// Bin edges at the order statistics nearest the quantiles k/n_bins, with
/// ties merged. Every bin `(e[k-1], e[k]]` then holds at least one value.
pub fn ale_edges(values: &[f64], n_bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut edges: Vec<f64> = (0..=n_bins)
        .map(|k| sorted[((n - 1) as f64 * k as f64 / n_bins as f64).round() as usize])
        .collect();
    edges.dedup();
    edges
}

/// Bin of each value: `(e[k], e[k+1]]`, the first bin also taking the minimum.
fn ale_bins(values: &[f64], edges: &[f64]) -> Vec<usize> {
    let last = edges.len() - 2;
    values.iter().map(|&v| edges[1..].partition_point(|&e| e < v).min(last)).collect()
}

struct AleLayout {
    edges: Vec<f64>,
    bins: Vec<usize>,
    counts: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// Centered ALE at the edges and per bin.
fn ale_for(frame: &Frame, net: &Network, col: usize, layout: &AleLayout, out: usize) -> Result<(Vec<f64>, Vec<f64>), TrainError> {
    let k = layout.counts.len();
    let mut x_lo = frame.x.clone();
    let mut x_hi = frame.x.clone();
    x_lo.column_mut(col).assign(&ndarray::ArrayView1::from(&layout.lo));
    x_hi.column_mut(col).assign(&ndarray::ArrayView1::from(&layout.hi));
    let f_lo = frame.response(net, &x_lo, out)?;
    let f_hi = frame.response(net, &x_hi, out)?;
    let mut local = vec![0.0; k];
    for (i, &b) in layout.bins.iter().enumerate() {
        local[b] += f_hi[i] - f_lo[i];
    }
    let mut acc = Vec::with_capacity(k + 1);
    acc.push(0.0);
    for b in 0..k {
        acc.push(acc[b] + local[b] / layout.counts[b] as f64);
    }
    let mid: Vec<f64> = (0..k).map(|b| 0.5 * (acc[b] + acc[b + 1])).collect();
    let n: usize = layout.counts.iter().sum();
    let shift = mid.iter().zip(&layout.counts).map(|(m, &c)| m * c as f64).sum::<f64>() / n as f64;
    Ok((acc.iter().map(|a| a - shift).collect(), mid.iter().map(|m| m - shift).collect()))
}

/// Accumulated local effects over quantile bins, centered so that the
/// count-weighted mean of the bin values is zero.
pub fn accumulated_local_effects(model: &FittedModel, feature: &str, n_bins: usize, out: usize) -> Result<EffectCurve, InterpretError> {
    if n_bins < 2 {
        return Err(InterpretError::InvalidArgument("bins must be >= 2".into()));
    }
    let frame = Frame::new(model)?;
    frame.check_output(out)?;
    let (_, col, center, scale) = frame.numeric(feature)?;
    let raw = frame.raw_values(feature)?;
    let edges = ale_edges(&raw, n_bins);
    if edges.len() < 2 {
        return Err(InterpretError::DegenerateFeature(feature.into()));
    }
    let bins = ale_bins(&raw, &edges);
    let mut counts = vec![0usize; edges.len() - 1];
    for &b in &bins {
        counts[b] += 1;
    }
    let to_design = |v: f64| (v - center) / scale;
    let layout = AleLayout {
        lo: bins.iter().map(|&b| to_design(edges[b])).collect(),
        hi: bins.iter().map(|&b| to_design(edges[b + 1])).collect(),
        edges,
        bins,
        counts,
    };
    let (values, bin_values) = ale_for(&frame, &model.network, col, &layout, out)?;
    let se = replicate_curves(&frame, &|net| Ok(ale_for(&frame, net, col, &layout, out)?.0))?;
    Ok(EffectCurve {
        feature: feature.into(),
        kind: CurveKind::Ale,
        grid: layout.edges,
        values,
        se,
        bin_counts: layout.counts,
        bin_values,
        requested_bins: n_bins,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub title: String,
    /// Header of the estimate column.
    pub value_label: String,
    pub rows: Vec<StatRow>,
    /// False when the model has no ensemble: only estimates are shown.
    pub with_uncertainty: bool,
    /// Decimal places of the estimate and std. error columns.
    pub digits: usize,
    /// Decimal places of p-values before switching to scientific notation.
    pub p_digits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub importance: SummaryTable,
    pub ace: SummaryTable,
    pub notices: Vec<String>,
}

pub const SIGNIF_LEGEND: &str = "Signif. codes: 0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1";

pub fn signif_code(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else if p < 0.1 {
        "."
    } else {
        ""
    }
}

/// Fixed decimals, or two significant digits in scientific notation with a
/// two-digit exponent (`9.3e-06`) once the fixed form would show fewer.
pub fn format_p(p: f64, digits: usize) -> String {
    if p == 0.0 || p >= 10f64.powi(-(digits as i32)) {
        return format!("{p:.digits$}");
    }
    let s = format!("{p:.1e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

impl SummaryTable {
    pub fn render(&self) -> String {
        let mut s = format!("\u{2014} {}\n\n", self.title);
        let d = self.digits;
        if self.with_uncertainty {
            writeln!(s, "\t{}\tStd.Err\tZ value\tPr(>|z|)", self.value_label).unwrap();
            for r in &self.rows {
                let (z, p) = match (r.z, r.p) {
                    (Some(z), Some(p)) => {
                        let code = signif_code(p);
                        let p = format_p(p, self.p_digits);
                        (format!("{z:.2}"), if code.is_empty() { p } else { format!("{p} {code}") })
                    }
                    _ => ("NA".to_string(), "NA".to_string()),
                };
                writeln!(s, "{}\t{:.d$}\t{:.d$}\t{}\t{}", r.name, r.estimate, r.std_err, z, p).unwrap();
            }
            writeln!(s, "\n{SIGNIF_LEGEND}").unwrap();
        } else {
            writeln!(s, "\t{}", self.value_label).unwrap();
            for r in &self.rows {
                writeln!(s, "{}\t{:.d$}", r.name, r.estimate).unwrap();
            }
        }
        s
    }

    /// `name,estimate[,std_err,z,p]`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        if self.with_uncertainty {
            s.push_str("name,estimate,std_err,z,p\n");
            let na = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| v.to_string());
            for r in &self.rows {
                writeln!(s, "\"{}\",{},{},{},{}", r.name, r.estimate, r.std_err, na(r.z), na(r.p)).unwrap();
            }
        } else {
            s.push_str("name,estimate\n");
            for r in &self.rows {
                writeln!(s, "\"{}\",{}", r.name, r.estimate).unwrap();
            }
        }
        s
    }
}

impl Summary {
    pub fn render(&self) -> String {
        let mut s = self.importance.render();
        s.push('\n');
        s.push_str(&self.ace.render());
        for n in &self.notices {
            writeln!(s, "\nNote: {n}").unwrap();
        }
        s
    }
}

fn stat_rows(names: &[String], full: &[f64], replicates: Option<&[Vec<f64>]>) -> Result<Vec<StatRow>, InterpretError> {
    names
        .iter()
        .enumerate()
        .map(|(j, name)| match replicates {
            Some(reps) => {
                let values: Vec<f64> = reps.iter().map(|r| r[j]).collect();
                aggregate(name, full[j], &values).map_err(|e| InterpretError::InvalidArgument(e.to_string()))
            }
            None => Ok(StatRow { name: name.clone(), estimate: full[j], std_err: f64::NAN, z: None, p: None }),
        })
        .collect()
}

/// Output labels used in row names: the response for single-output models,
/// the class level otherwise.
fn output_labels(model: &FittedModel) -> Vec<String> {
    let k = model.output_dim();
    if k == 1 {
        return vec![model.encoder.response.clone()];
    }
    match model.encoder.response_levels() {
        Some(levels) if levels.len() == k => levels.to_vec(),
        _ => (0..k).map(|i| format!("{}[{i}]", model.encoder.response)).collect(),
    }
}

/// Importance and ACE tables. With an ensemble every statistic is also
/// computed per replicate and aggregated.
pub fn summarize(model: &FittedModel, n_perm: usize, seed: u64) -> Result<Summary, InterpretError> {
    if n_perm == 0 {
        return Err(InterpretError::InvalidArgument("n_perm must be >= 1".into()));
    }
    let frame = Frame::new(model)?;
    let groups = feature_groups(&model.encoder);
    let labels = output_labels(model);
    let k = labels.len();
    let nets = frame.networks();
    let ensemble = nets.len() >= 2;

    let imp_names: Vec<String> = groups.iter().map(|g| format!("{} \u{2192} {}", g.name, model.encoder.response)).collect();
    let full_imp = importance_for(&frame, &model.network, &groups, n_perm, seed)?;

    let ace_all = |net: &Network| -> Result<Vec<f64>, TrainError> {
        let mut v = Vec::new();
        for out in 0..k {
            v.extend(ace_for(&frame, net, out)?.into_iter().map(|e| e.ace));
        }
        Ok(v)
    };
    let numeric: Vec<&str> = model
        .encoder
        .features
        .iter()
        .filter(|f| matches!(f.encoding, FeatureEncoding::Numeric { .. }))
        .map(|f| f.source.as_str())
        .collect();
    let ace_names: Vec<String> = labels
        .iter()
        .flat_map(|l| numeric.iter().map(move |f| format!("{f} \u{2192} {l}")))
        .collect();
    let full_ace = ace_all(&model.network)?;

    let (imp_reps, ace_reps) = if ensemble {
        let per = parallel_map(nets.len(), model.config.threads, |i| -> Result<_, TrainError> {
            Ok((importance_for(&frame, nets[i], &groups, n_perm, seed)?, ace_all(nets[i])?))
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
        let (a, b): (Vec<_>, Vec<_>) = per.into_iter().unzip();
        (Some(a), Some(b))
    } else {
        (None, None)
    };

    let mut notices = Vec::new();
    let skipped: Vec<&str> = model
        .encoder
        .features
        .iter()
        .filter(|f| matches!(f.encoding, FeatureEncoding::Categorical { .. }))
        .map(|f| f.source.as_str())
        .collect();
    if !skipped.is_empty() {
        notices.push(format!("categorical features skipped in conditional effects: {}", skipped.join(", ")));
    }
    if let Some(e) = &model.ensemble {
        if !e.failures.is_empty() {
            notices.push(format!("{} of {} bootstrap replicates diverged and were dropped", e.failures.len(), e.b()));
        }
    }

    Ok(Summary {
        importance: SummaryTable {
            title: "Feature Importance".into(),
            value_label: "Importance".into(),
            rows: stat_rows(&imp_names, &full_imp, imp_reps.as_deref())?,
            with_uncertainty: ensemble,
            digits: 6,
            p_digits: 4,
        },
        ace: SummaryTable {
            title: "Average Conditional Effects".into(),
            value_label: "ACE".into(),
            rows: stat_rows(&ace_names, &full_ace, ace_reps.as_deref())?,
            with_uncertainty: ensemble,
            digits: 3,
            p_digits: 5,
        },
        notices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_formatting() {
        assert_eq!(format_p(9.3e-6, 4), "9.3e-06");
        assert_eq!(format_p(1.4e-6, 5), "1.4e-06");
        assert_eq!(format_p(0.0045, 4), "0.0045");
        assert_eq!(format_p(0.00045, 5), "0.00045");
        assert_eq!(format_p(0.6795, 4), "0.6795");
        assert_eq!(format_p(3.2e-12, 4), "3.2e-12");
    }

    #[test]
    fn codes() {
        assert_eq!(signif_code(9.3e-6), "***");
        assert_eq!(signif_code(0.0045), "**");
        assert_eq!(signif_code(0.0285), "*");
        assert_eq!(signif_code(0.0767), ".");
        assert_eq!(signif_code(0.3692), "");
    }

    #[test]
    fn edges_merge_ties() {
        let v = [1.0, 1.0, 1.0, 1.0, 2.0, 3.0];
        let e = ale_edges(&v, 5);
        assert_eq!(e, vec![1.0, 2.0, 3.0]);
        let bins = ale_bins(&v, &e);
        assert_eq!(bins, vec![0, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn edges_are_quantile_order_statistics() {
        let v: Vec<f64> = (0..11).map(f64::from).rev().collect();
        assert_eq!(ale_edges(&v, 10), (0..11).map(f64::from).collect::<Vec<_>>());
        assert_eq!(ale_edges(&v, 2), vec![0.0, 5.0, 10.0]);
    }

    #[test]
    fn rendered_table_layout() {
        let table = SummaryTable {
            title: "Feature Importance".into(),
            value_label: "Importance".into(),
            rows: vec![crate::uncertainty::from_estimate("bio18 \u{2192} label", 0.031117, 0.007020)],
            with_uncertainty: true,
            digits: 6,
            p_digits: 4,
        };
        let text = table.render();
        assert!(text.contains("bio18 \u{2192} label\t0.031117\t0.007020\t4.43\t9.3e-06 ***\n"), "{text}");
        assert!(text.ends_with(&format!("{SIGNIF_LEGEND}\n")));
    }
}
