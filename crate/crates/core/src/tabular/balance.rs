use std::io::{Read, Write};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::table::csv_err;
use super::TabularError;

/// Header plus raw records, untouched by type inference.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCsv {
    pub header: csv::StringRecord,
    pub records: Vec<csv::StringRecord>,
}

impl RawCsv {
    pub fn read<R: Read>(reader: R) -> Result<Self, TabularError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers().map_err(csv_err)?.clone();
        let records = rdr.records().collect::<Result<Vec<_>, _>>().map_err(csv_err)?;
        Ok(Self { header, records })
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<(), TabularError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.records {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush().map_err(|e| TabularError::Io(e.to_string()))
    }
}

/// Undersamples the majority class of a binary response so both classes have
/// the minority count, then shuffles the kept rows. Deterministic for a seed.
pub fn balance_classes(data: &RawCsv, response: &str, seed: u64) -> Result<RawCsv, TabularError> {
    let col = data
        .header
        .iter()
        .position(|h| h.trim() == response)
        .ok_or_else(|| TabularError::UnknownColumn(response.to_string()))?;

    let mut classes: Vec<String> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (row, rec) in data.records.iter().enumerate() {
        let value = rec.get(col).unwrap_or("").trim();
        if value.is_empty() {
            return Err(TabularError::MissingValues { row: row + 1, column: response.to_string() });
        }
        match classes.iter().position(|c| c == value) {
            Some(k) => members[k].push(row),
            None => {
                classes.push(value.to_string());
                members.push(vec![row]);
            }
        }
    }
    if classes.len() != 2 {
        return Err(TabularError::NonBinaryResponse { column: response.to_string(), classes: classes.len() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (minority, majority) = if members[0].len() <= members[1].len() {
        (&members[0], &members[1])
    } else {
        (&members[1], &members[0])
    };
    let mut kept: Vec<usize> = minority.clone();
    let mut picked: Vec<usize> = index::sample(&mut rng, majority.len(), minority.len())
        .into_iter()
        .map(|i| majority[i])
        .collect();
    picked.sort_unstable();
    kept.extend(picked);
    kept.sort_unstable();
    kept.shuffle(&mut rng);

    Ok(RawCsv {
        header: data.header.clone(),
        records: kept.into_iter().map(|r| data.records[r].clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_with(pos: usize, neg: usize) -> RawCsv {
        let mut text = String::from("label,x\n");
        for i in 0..pos {
            text.push_str(&format!("1,{i}\n"));
        }
        for i in 0..neg {
            text.push_str(&format!("0,{}\n", 1000 + i));
        }
        RawCsv::read(text.as_bytes()).unwrap()
    }

    fn count(data: &RawCsv, v: &str) -> usize {
        data.records.iter().filter(|r| &r[0] == v).count()
    }

    #[test]
    fn undersamples_majority() {
        let out = balance_classes(&csv_with(100, 300), "label", 7).unwrap();
        assert_eq!(count(&out, "1"), 100);
        assert_eq!(count(&out, "0"), 100);
    }

    #[test]
    fn balanced_input_is_permuted() {
        let input = csv_with(20, 20);
        let out = balance_classes(&input, "label", 1).unwrap();
        let mut a: Vec<_> = input.records.iter().map(|r| r[1].to_string()).collect();
        let mut b: Vec<_> = out.records.iter().map(|r| r[1].to_string()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn deterministic() {
        let input = csv_with(30, 90);
        assert_eq!(balance_classes(&input, "label", 3).unwrap(), balance_classes(&input, "label", 3).unwrap());
    }

    #[test]
    fn rejects_non_binary() {
        let input = RawCsv::read("label\na\nb\nc\n".as_bytes()).unwrap();
        assert!(matches!(
            balance_classes(&input, "label", 0),
            Err(TabularError::NonBinaryResponse { classes: 3, .. })
        ));
    }
}
