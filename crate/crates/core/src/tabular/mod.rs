//! CSV ingestion, formula parsing, and design-matrix encoding.

mod balance;
mod encoder;
mod formula;
mod table;

use thiserror::Error;

pub use balance::{balance_classes, RawCsv};
pub use encoder::{
    build_design, build_design_on_rows, DesignColumn, Design, EncodedFeature, Encoder,
    FeatureEncoding, ResponseEncoding,
};
pub use formula::{parse_formula, Formula};
pub use table::{Categorical, Column, ColumnSchema, DataTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("formula has no `~`")]
    MissingTilde,
    #[error("formula has no response on the left of `~`")]
    EmptyResponse,
    #[error("formula has no terms on the right of `~`")]
    EmptyRhs,
    #[error("`- {0}` is only allowed after `.`")]
    MinusWithoutDot(String),
    #[error("invalid term `{0}` (allowed characters: A-Z a-z 0-9 _ .)")]
    InvalidIdentifier(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TabularError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("formula resolves to no predictors")]
    EmptyPredictorSet,
    #[error("missing value in row {row}, column `{column}`")]
    MissingValues { row: usize, column: String },
    #[error("response `{0}` cannot be excluded")]
    ResponseIsExcluded(String),
    #[error("level `{level}` of column `{column}` was not seen at fit time")]
    UnseenLevel { column: String, level: String },
    #[error("column `{column}` should be {expected}")]
    TypeMismatch { column: String, expected: &'static str },
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("duplicate level `{0}`")]
    DuplicateLevel(String),
    #[error("response `{column}` has {classes} classes, expected 2")]
    NonBinaryResponse { column: String, classes: usize },
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("io: {0}")]
    Io(String),
}
