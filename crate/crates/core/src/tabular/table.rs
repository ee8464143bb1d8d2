use std::collections::{BTreeSet, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TabularError;

/// A categorical column: a level table plus one optional level index per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    levels: Vec<String>,
    codes: Vec<Option<u32>>,
}

impl Categorical {
    pub fn new(levels: Vec<String>, codes: Vec<Option<u32>>) -> Result<Self, TabularError> {
        let mut seen = HashSet::with_capacity(levels.len());
        for level in &levels {
            if !seen.insert(level.as_str()) {
                return Err(TabularError::DuplicateLevel(level.clone()));
            }
        }
        if let Some(bad) = codes.iter().flatten().find(|&&c| c as usize >= levels.len()) {
            return Err(TabularError::InvalidTable(format!(
                "level code {bad} out of range for {} levels",
                levels.len()
            )));
        }
        Ok(Self { levels, codes })
    }

    /// Builds a column from raw cell values. Levels are sorted lexicographically.
    pub fn from_values<S: AsRef<str>>(values: &[Option<S>]) -> Self {
        let levels: Vec<String> = values
            .iter()
            .flatten()
            .map(|s| s.as_ref().to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let codes = values
            .iter()
            .map(|v| {
                v.as_ref()
                    .map(|s| levels.binary_search_by(|l| l.as_str().cmp(s.as_ref())).unwrap() as u32)
            })
            .collect();
        Self { levels, codes }
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn codes(&self) -> &[Option<u32>] {
        &self.codes
    }

    pub fn value(&self, row: usize) -> Option<&str> {
        self.codes[row].map(|c| self.levels[c as usize].as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    /// Missing cells are stored as NaN.
    Numeric(Vec<f64>),
    Categorical(Categorical),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(c) => c.codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            Column::Numeric(v) => v[row].is_nan(),
            Column::Categorical(c) => c.codes[row].is_none(),
        }
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
            Column::Categorical(c) => Column::Categorical(Categorical {
                levels: c.levels.clone(),
                codes: rows.iter().map(|&r| c.codes[r]).collect(),
            }),
        }
    }

    fn cell_text(&self, row: usize) -> String {
        match self {
            Column::Numeric(v) if v[row].is_nan() => String::new(),
            Column::Numeric(v) => format!("{}", v[row]),
            Column::Categorical(c) => c.value(row).unwrap_or("").to_string(),
        }
    }
}

/// Column kinds, used to re-read a CSV without re-inferring types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnSchema {
    Numeric { name: String },
    Categorical { name: String, levels: Vec<String> },
}

/// Typed columnar table.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    names: Vec<String>,
    columns: Vec<Column>,
    n_rows: usize,
}

impl DataTable {
    pub fn new(names: Vec<String>, columns: Vec<Column>) -> Result<Self, TabularError> {
        if names.len() != columns.len() {
            return Err(TabularError::InvalidTable(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if name.is_empty() {
                return Err(TabularError::InvalidTable("empty column name".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(TabularError::DuplicateColumn(name.clone()));
            }
        }
        let n_rows = columns.first().map_or(0, Column::len);
        if let Some((i, _)) = columns.iter().enumerate().find(|(_, c)| c.len() != n_rows) {
            return Err(TabularError::InvalidTable(format!(
                "column `{}` has {} rows, expected {n_rows}",
                names[i],
                columns[i].len()
            )));
        }
        Ok(Self { names, columns, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.column_index(name).map(|i| &self.columns[i])
    }

    /// Row subset (rows may repeat); level tables are kept whole.
    pub fn select_rows(&self, rows: &[usize]) -> DataTable {
        DataTable {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            n_rows: rows.len(),
        }
    }

    pub fn schema(&self) -> Vec<ColumnSchema> {
        self.names
            .iter()
            .zip(&self.columns)
            .map(|(name, col)| match col {
                Column::Numeric(_) => ColumnSchema::Numeric { name: name.clone() },
                Column::Categorical(c) => ColumnSchema::Categorical {
                    name: name.clone(),
                    levels: c.levels.clone(),
                },
            })
            .collect()
    }

    /// Reads a CSV with a header row. A column is numeric iff every non-empty
    /// cell parses as a finite decimal number; otherwise it is categorical.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, TabularError> {
        let (names, cells) = read_cells(reader)?;
        let columns = cells
            .into_iter()
            .map(|col| {
                let numeric: Option<Vec<f64>> = col
                    .iter()
                    .map(|c| match c {
                        None => Some(f64::NAN),
                        Some(s) => parse_decimal(s),
                    })
                    .collect();
                match numeric {
                    Some(v) => Column::Numeric(v),
                    None => Column::Categorical(Categorical::from_values(&col)),
                }
            })
            .collect();
        DataTable::new(names, columns)
    }

    pub fn from_csv_str(text: &str) -> Result<Self, TabularError> {
        Self::from_csv_reader(text.as_bytes())
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, TabularError> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| TabularError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    /// Reads a CSV whose column kinds and level tables are already known.
    pub fn from_csv_with_schema<R: Read>(
        reader: R,
        schema: &[ColumnSchema],
    ) -> Result<Self, TabularError> {
        let (names, cells) = read_cells(reader)?;
        if names.len() != schema.len() {
            return Err(TabularError::InvalidTable(format!(
                "expected {} columns, found {}",
                schema.len(),
                names.len()
            )));
        }
        let mut columns = Vec::with_capacity(names.len());
        for ((name, col), spec) in names.iter().zip(cells).zip(schema) {
            match spec {
                ColumnSchema::Numeric { name: expected } => {
                    check_name(name, expected)?;
                    let values = col
                        .iter()
                        .enumerate()
                        .map(|(row, c)| match c {
                            None => Ok(f64::NAN),
                            Some(s) => parse_decimal(s).ok_or_else(|| {
                                TabularError::InvalidTable(format!(
                                    "row {}, column `{name}`: `{s}` is not numeric",
                                    row + 1
                                ))
                            }),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    columns.push(Column::Numeric(values));
                }
                ColumnSchema::Categorical { name: expected, levels } => {
                    check_name(name, expected)?;
                    let codes = col
                        .iter()
                        .map(|c| match c {
                            None => Ok(None),
                            Some(s) => levels
                                .iter()
                                .position(|l| l == s)
                                .map(|i| Some(i as u32))
                                .ok_or_else(|| TabularError::UnseenLevel {
                                    column: name.clone(),
                                    level: s.clone(),
                                }),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    columns.push(Column::Categorical(Categorical::new(levels.clone(), codes)?));
                }
            }
        }
        DataTable::new(names, columns)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), TabularError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.names).map_err(csv_err)?;
        for row in 0..self.n_rows {
            w.write_record(self.columns.iter().map(|c| c.cell_text(row)))
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| TabularError::Io(e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

fn check_name(found: &str, expected: &str) -> Result<(), TabularError> {
    if found == expected {
        Ok(())
    } else {
        Err(TabularError::InvalidTable(format!(
            "expected column `{expected}`, found `{found}`"
        )))
    }
}

fn parse_decimal(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub(crate) fn csv_err(e: csv::Error) -> TabularError {
    TabularError::Csv(e.to_string())
}

type Cells = Vec<Vec<Option<String>>>;

/// Raw header + column-major trimmed cells (`None` for empty cells).
fn read_cells<R: Read>(reader: R) -> Result<(Vec<String>, Cells), TabularError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let names: Vec<String> = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if names.is_empty() || (names.len() == 1 && names[0].is_empty()) {
        return Err(TabularError::Csv("missing header row".into()));
    }
    let mut cells: Cells = vec![Vec::new(); names.len()];
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        for (col, cell) in cells.iter_mut().zip(record.iter()) {
            let cell = cell.trim();
            col.push((!cell.is_empty()).then(|| cell.to_string()));
        }
    }
    Ok((names, cells))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infers_column_kinds() {
        let t = DataTable::from_csv_str("a,b,c\n1,x,2.5\n2,y,\n3,x,1e2\n").unwrap();
        assert_eq!(t.n_rows(), 3);
        assert!(matches!(t.column("a"), Some(Column::Numeric(v)) if v == &[1.0, 2.0, 3.0]));
        match t.column("b").unwrap() {
            Column::Categorical(c) => {
                assert_eq!(c.levels(), &["x".to_string(), "y".to_string()]);
                assert_eq!(c.codes(), &[Some(0), Some(1), Some(0)]);
            }
            _ => panic!("b should be categorical"),
        }
        assert!(t.column("c").unwrap().is_missing(1));
    }

    #[test]
    fn nan_and_inf_text_is_categorical() {
        let t = DataTable::from_csv_str("a\n1\nnan\n").unwrap();
        assert!(matches!(t.column("a"), Some(Column::Categorical(_))));
        let t = DataTable::from_csv_str("a\n1\ninf\n").unwrap();
        assert!(matches!(t.column("a"), Some(Column::Categorical(_))));
    }

    #[test]
    fn quoted_fields() {
        let t = DataTable::from_csv_str("name,v\n\"a,b\",1\n\"say \"\"hi\"\"\",2\n").unwrap();
        match t.column("name").unwrap() {
            Column::Categorical(c) => {
                assert_eq!(c.value(0), Some("a,b"));
                assert_eq!(c.value(1), Some("say \"hi\""));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn duplicate_names_rejected() {
        let err = DataTable::from_csv_str("a,a\n1,2\n").unwrap_err();
        assert!(matches!(err, TabularError::DuplicateColumn(_)));
    }

    #[test]
    fn schema_round_trip_keeps_numeric_looking_levels() {
        let cat = Categorical::new(vec!["1".into(), "2".into()], vec![Some(1), Some(0)]).unwrap();
        let t = DataTable::new(
            vec!["g".into(), "x".into()],
            vec![Column::Categorical(cat), Column::Numeric(vec![0.1, f64::NAN])],
        )
        .unwrap();
        let text = t.to_csv_string();
        let back = DataTable::from_csv_with_schema(text.as_bytes(), &t.schema()).unwrap();
        assert_eq!(back.column("g"), t.column("g"));
        assert!(back.column("x").unwrap().is_missing(1));
    }

    #[test]
    fn duplicate_levels_rejected() {
        let err = Categorical::new(vec!["a".into(), "a".into()], vec![]).unwrap_err();
        assert!(matches!(err, TabularError::DuplicateLevel(_)));
    }
}
