use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Column, DataTable, Formula, TabularError};

/// How one source column is mapped into the design matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureEncoding {
    /// `(value - center) / scale`; identity when standardization is off.
    Numeric { center: f64, scale: f64 },
    /// Full one-hot, one design column per level.
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedFeature {
    pub source: String,
    pub encoding: FeatureEncoding,
}

impl EncodedFeature {
    pub fn width(&self) -> usize {
        match &self.encoding {
            FeatureEncoding::Numeric { .. } => 1,
            FeatureEncoding::Categorical { levels } => levels.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResponseEncoding {
    Numeric,
    /// Targets are level indices into `levels`.
    Categorical { levels: Vec<String> },
}

/// One design-matrix column: which feature it came from, and which level for one-hot blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DesignColumn {
    pub feature: usize,
    pub level: Option<usize>,
}

/// The fitted transform from raw table rows to design matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub features: Vec<EncodedFeature>,
    pub response: String,
    pub response_encoding: ResponseEncoding,
    pub standardize: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl Encoder {
    pub fn width(&self) -> usize {
        self.features.iter().map(EncodedFeature::width).sum()
    }

    /// Maps each design column index to its source feature (and level).
    pub fn feature_order(&self) -> Vec<DesignColumn> {
        let mut out = Vec::with_capacity(self.width());
        for (feature, f) in self.features.iter().enumerate() {
            match &f.encoding {
                FeatureEncoding::Numeric { .. } => out.push(DesignColumn { feature, level: None }),
                FeatureEncoding::Categorical { levels } => {
                    out.extend((0..levels.len()).map(|l| DesignColumn { feature, level: Some(l) }))
                }
            }
        }
        out
    }

    /// Design-matrix column range of each feature.
    pub fn feature_columns(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.features
            .iter()
            .map(|f| {
                let r = start..start + f.width();
                start = r.end;
                r
            })
            .collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.source == name)
    }

    /// Number of response classes for categorical responses.
    pub fn response_levels(&self) -> Option<&[String]> {
        match &self.response_encoding {
            ResponseEncoding::Categorical { levels } => Some(levels),
            ResponseEncoding::Numeric => None,
        }
    }

    /// Replays the fitted transform on a table, using the stored statistics.
    pub fn apply(&self, table: &DataTable) -> Result<Array2<f64>, TabularError> {
        let n = table.n_rows();
        let mut x = Array2::<f64>::zeros((n, self.width()));
        let mut col = 0;
        for f in &self.features {
            let source = table
                .column(&f.source)
                .ok_or_else(|| TabularError::UnknownColumn(f.source.clone()))?;
            match (&f.encoding, source) {
                (FeatureEncoding::Numeric { center, scale }, Column::Numeric(values)) => {
                    for (row, &v) in values.iter().enumerate() {
                        if v.is_nan() {
                            return Err(missing(row, &f.source));
                        }
                        x[[row, col]] = (v - center) / scale;
                    }
                }
                (FeatureEncoding::Categorical { levels }, Column::Categorical(cat)) => {
                    // Map the table's level codes onto the stored level order.
                    let remap: Vec<Option<usize>> = cat
                        .levels()
                        .iter()
                        .map(|l| levels.iter().position(|s| s == l))
                        .collect();
                    for (row, code) in cat.codes().iter().enumerate() {
                        let code = code.ok_or_else(|| missing(row, &f.source))? as usize;
                        let level = remap[code].ok_or_else(|| TabularError::UnseenLevel {
                            column: f.source.clone(),
                            level: cat.levels()[code].clone(),
                        })?;
                        x[[row, col + level]] = 1.0;
                    }
                }
                (FeatureEncoding::Numeric { .. }, Column::Categorical(_)) => {
                    return Err(TabularError::TypeMismatch {
                        column: f.source.clone(),
                        expected: "numeric",
                    })
                }
                (FeatureEncoding::Categorical { .. }, Column::Numeric(_)) => {
                    return Err(TabularError::TypeMismatch {
                        column: f.source.clone(),
                        expected: "categorical",
                    })
                }
            }
            col += f.width();
        }
        Ok(x)
    }

    /// Encodes the response column: raw values when numeric, level indices when categorical.
    pub fn encode_response(&self, table: &DataTable) -> Result<Vec<f64>, TabularError> {
        let source = table
            .column(&self.response)
            .ok_or_else(|| TabularError::UnknownColumn(self.response.clone()))?;
        match (&self.response_encoding, source) {
            (ResponseEncoding::Numeric, Column::Numeric(values)) => values
                .iter()
                .enumerate()
                .map(|(row, &v)| if v.is_nan() { Err(missing(row, &self.response)) } else { Ok(v) })
                .collect(),
            (ResponseEncoding::Categorical { levels }, Column::Categorical(cat)) => cat
                .codes()
                .iter()
                .enumerate()
                .map(|(row, code)| {
                    let code = code.ok_or_else(|| missing(row, &self.response))? as usize;
                    let name = &cat.levels()[code];
                    levels.iter().position(|l| l == name).map(|i| i as f64).ok_or_else(|| {
                        TabularError::UnseenLevel { column: self.response.clone(), level: name.clone() }
                    })
                })
                .collect(),
            (ResponseEncoding::Numeric, _) => Err(TabularError::TypeMismatch {
                column: self.response.clone(),
                expected: "numeric",
            }),
            (ResponseEncoding::Categorical { .. }, _) => Err(TabularError::TypeMismatch {
                column: self.response.clone(),
                expected: "categorical",
            }),
        }
    }
}

fn missing(row: usize, column: &str) -> TabularError {
    TabularError::MissingValues { row: row + 1, column: column.to_string() }
}

/// Output of [`build_design`].
#[derive(Debug, Clone)]
pub struct Design {
    pub x: Array2<f64>,
    pub y: Vec<f64>,
    pub encoder: Encoder,
}

/// Resolves the formula against the table and fits the encoder on all rows.
pub fn build_design(
    formula: &Formula,
    table: &DataTable,
    standardize: bool,
) -> Result<Design, TabularError> {
    let rows: Vec<usize> = (0..table.n_rows()).collect();
    build_design_on_rows(formula, table, &rows, standardize)
}

/// Like [`build_design`], but centering/scaling statistics come only from `rows`.
/// The design matrix still covers every table row.
pub fn build_design_on_rows(
    formula: &Formula,
    table: &DataTable,
    rows: &[usize],
    standardize: bool,
) -> Result<Design, TabularError> {
    let predictors = resolve_predictors(formula, table)?;

    let mut warnings = Vec::new();
    let mut features = Vec::with_capacity(predictors.len());
    for name in predictors {
        let encoding = match table.column(&name).expect("resolved") {
            Column::Numeric(values) => {
                if let Some(row) = values.iter().position(|v| v.is_nan()) {
                    return Err(missing(row, &name));
                }
                if standardize {
                    let (center, sd) = mean_sd(rows.iter().map(|&r| values[r]));
                    let scale = if sd.is_finite() && sd > 0.0 {
                        sd
                    } else {
                        warnings.push(format!("column `{name}` is constant; scale set to 1"));
                        1.0
                    };
                    FeatureEncoding::Numeric { center, scale }
                } else {
                    FeatureEncoding::Numeric { center: 0.0, scale: 1.0 }
                }
            }
            Column::Categorical(cat) => {
                FeatureEncoding::Categorical { levels: cat.levels().to_vec() }
            }
        };
        features.push(EncodedFeature { source: name, encoding });
    }

    let response_encoding = match table.column(&formula.response) {
        Some(Column::Numeric(_)) => ResponseEncoding::Numeric,
        Some(Column::Categorical(cat)) => {
            ResponseEncoding::Categorical { levels: cat.levels().to_vec() }
        }
        None => return Err(TabularError::UnknownColumn(formula.response.clone())),
    };

    let encoder = Encoder {
        features,
        response: formula.response.clone(),
        response_encoding,
        standardize,
        warnings,
    };
    let x = encoder.apply(table)?;
    let y = encoder.encode_response(table)?;
    Ok(Design { x, y, encoder })
}

fn resolve_predictors(formula: &Formula, table: &DataTable) -> Result<Vec<String>, TabularError> {
    if table.column_index(&formula.response).is_none() {
        return Err(TabularError::UnknownColumn(formula.response.clone()));
    }
    if formula.excluded_terms.contains(&formula.response) {
        return Err(TabularError::ResponseIsExcluded(formula.response.clone()));
    }
    for term in formula.included_terms.iter().chain(&formula.excluded_terms) {
        if table.column_index(term).is_none() {
            return Err(TabularError::UnknownColumn(term.clone()));
        }
    }
    let predictors: Vec<String> = if formula.include_all {
        table
            .column_names()
            .iter()
            .filter(|n| **n != formula.response && !formula.excluded_terms.contains(n))
            .cloned()
            .collect()
    } else {
        formula
            .included_terms
            .iter()
            .filter(|n| **n != formula.response)
            .cloned()
            .collect()
    };
    if predictors.is_empty() {
        return Err(TabularError::EmptyPredictorSet);
    }
    Ok(predictors)
}

/// Mean and sample (n - 1) standard deviation.
pub(crate) fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{parse_formula, Categorical};
    use proptest::prelude::*;

    fn table(cols: Vec<(&str, Column)>) -> DataTable {
        let (names, columns): (Vec<_>, Vec<_>) =
            cols.into_iter().map(|(n, c)| (n.to_string(), c)).unzip();
        DataTable::new(names, columns).unwrap()
    }

    #[test]
    fn standardizes_numeric() {
        let t = table(vec![
            ("y", Column::Numeric(vec![0.0, 1.0, 0.0])),
            ("x", Column::Numeric(vec![1.0, 2.0, 3.0])),
        ]);
        let d = build_design(&parse_formula("y ~ .").unwrap(), &t, true).unwrap();
        assert_eq!(d.x.column(0).to_vec(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(d.y, vec![0.0, 1.0, 0.0]);

        let new = table(vec![("x", Column::Numeric(vec![4.0, 2.0]))]);
        let x = d.encoder.apply(&new).unwrap();
        assert_eq!(x.column(0).to_vec(), vec![2.0, 0.0]);
    }

    #[test]
    fn one_hot_categorical() {
        let t = table(vec![
            ("y", Column::Numeric(vec![0.0, 1.0, 0.0])),
            ("g", Column::Categorical(Categorical::from_values(&[Some("a"), Some("b"), Some("a")]))),
        ]);
        let d = build_design(&parse_formula("y ~ g").unwrap(), &t, true).unwrap();
        assert_eq!(d.x.column(0).to_vec(), vec![1.0, 0.0, 1.0]);
        assert_eq!(d.x.column(1).to_vec(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn unseen_level() {
        let t = table(vec![
            ("y", Column::Numeric(vec![0.0, 1.0])),
            ("g", Column::Categorical(Categorical::from_values(&[Some("a"), Some("b")]))),
        ]);
        let d = build_design(&parse_formula("y ~ g").unwrap(), &t, false).unwrap();
        let new = table(vec![("g", Column::Categorical(Categorical::from_values(&[Some("c")])))]);
        assert!(matches!(d.encoder.apply(&new), Err(TabularError::UnseenLevel { .. })));
    }

    #[test]
    fn nineteen_predictors() {
        let mut cols = vec![("label", Column::Numeric(vec![0.0, 1.0, 1.0]))];
        let names: Vec<String> = (1..=19).map(|i| format!("bio{i}")).collect();
        for (i, n) in names.iter().enumerate() {
            cols.push((n.as_str(), Column::Numeric(vec![i as f64, 1.0, 2.0])));
        }
        let t = table(cols);
        let d = build_design(&parse_formula("label ~ .").unwrap(), &t, true).unwrap();
        assert_eq!(d.x.ncols(), 19);
    }

    #[test]
    fn design_errors() {
        let t = table(vec![
            ("y", Column::Numeric(vec![0.0, 1.0])),
            ("x", Column::Numeric(vec![f64::NAN, 1.0])),
        ]);
        let f = parse_formula("y ~ z").unwrap();
        assert_eq!(build_design(&f, &t, true).unwrap_err(), TabularError::UnknownColumn("z".into()));
        let f = parse_formula("y ~ . - x").unwrap();
        assert_eq!(build_design(&f, &t, true).unwrap_err(), TabularError::EmptyPredictorSet);
        let f = parse_formula("y ~ x").unwrap();
        assert_eq!(
            build_design(&f, &t, true).unwrap_err(),
            TabularError::MissingValues { row: 1, column: "x".into() }
        );
        let f = Formula {
            response: "y".into(),
            include_all: true,
            included_terms: vec![],
            excluded_terms: vec!["y".into()],
        };
        assert!(matches!(build_design(&f, &t, true), Err(TabularError::ResponseIsExcluded(_))));
    }

    #[test]
    fn constant_column_warns() {
        let t = table(vec![
            ("y", Column::Numeric(vec![0.0, 1.0, 2.0])),
            ("x", Column::Numeric(vec![5.0, 5.0, 5.0])),
        ]);
        let d = build_design(&parse_formula("y ~ x").unwrap(), &t, true).unwrap();
        assert_eq!(d.x.column(0).to_vec(), vec![0.0, 0.0, 0.0]);
        assert_eq!(d.encoder.warnings.len(), 1);
    }

    proptest! {
        #[test]
        fn standardized_and_round_trip(
            xs in proptest::collection::vec(-1000i32..1000, 3..40),
            codes in proptest::collection::vec(0u32..3, 3..40),
        ) {
            let n = xs.len().min(codes.len());
            let levels = vec!["a".to_string(), "b".into(), "c".into()];
            let t = table(vec![
                ("y", Column::Numeric(vec![0.0; n])),
                ("x", Column::Numeric(xs[..n].iter().map(|&v| f64::from(v) / 8.0).collect())),
                ("g", Column::Categorical(Categorical::new(levels, codes[..n].iter().map(|&c| Some(c)).collect()).unwrap())),
            ]);
            let d = build_design(&parse_formula("y ~ .").unwrap(), &t, true).unwrap();
            prop_assert_eq!(d.x.ncols(), 4);
            let again = d.encoder.apply(&t).unwrap();
            prop_assert!(again.iter().zip(d.x.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
            for row in d.x.rows() {
                prop_assert_eq!(row[1] + row[2] + row[3], 1.0);
            }
            if d.encoder.warnings.is_empty() {
                let (m, s) = mean_sd(d.x.column(0).iter().copied());
                prop_assert!(m.abs() < 1e-12);
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }
}
