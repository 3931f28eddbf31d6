use std::io::Read;

use super::space::{FiniteSpace, Space};
use super::variable::RandomVariable;
use crate::error::{Error, Result};
use crate::scalar::{parse_scalar, Scalar};

const PROB_HEADERS: [&str; 5] = ["p", "prob", "probability", "probs", "weight"];

/// Scenario table read from CSV: one row per atom, one column per variable,
/// with an optional leading probability column.
#[derive(Clone, Debug)]
pub struct Scenarios<T: Scalar = f64> {
    pub space: Space<T>,
    pub columns: Vec<(String, RandomVariable<T>)>,
}

impl<T: Scalar> Scenarios<T> {
    pub fn column(&self, name: &str) -> Result<&RandomVariable<T>> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, x)| x)
            .ok_or_else(|| Error::invalid(format!("no column named {name:?}")))
    }

    /// First variable column, used when no column is named.
    pub fn first(&self) -> Result<&RandomVariable<T>> {
        self.columns.first().map(|(_, x)| x).ok_or_else(|| Error::invalid("scenario file has no variable columns"))
    }
}

/// Reads scenarios. Rows and columns in diagnostics are 1-based, with the
/// header on row 1.
pub fn read_scenarios<T: Scalar, R: Read>(input: R) -> Result<Scenarios<T>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(input);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Scenario { row: 1, column: 0, message: e.to_string() })?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::Scenario { row: 1, column: 0, message: "missing header row".into() });
    }
    let has_probs = PROB_HEADERS.contains(&headers[0].to_ascii_lowercase().as_str());
    let first_var = usize::from(has_probs);
    if headers.len() <= first_var {
        return Err(Error::Scenario { row: 1, column: 1, message: "no variable columns".into() });
    }
    let mut probs: Vec<T> = Vec::new();
    let mut cols: Vec<Vec<T>> = vec![Vec::new(); headers.len() - first_var];
    for (r, record) in reader.records().enumerate() {
        let row = r + 2;
        let record = record.map_err(|e| Error::Scenario { row, column: 0, message: e.to_string() })?;
        if record.len() != headers.len() {
            return Err(Error::Scenario {
                row,
                column: record.len().min(headers.len()) + 1,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (c, field) in record.iter().enumerate() {
            let v: T = parse_scalar(field).map_err(|_| Error::Scenario {
                row,
                column: c + 1,
                message: format!("not a number: {field:?}"),
            })?;
            if c < first_var {
                probs.push(v);
            } else {
                cols[c - first_var].push(v);
            }
        }
    }
    if cols[0].is_empty() {
        return Err(Error::Scenario { row: 2, column: 1, message: "no data rows".into() });
    }
    let space = if has_probs {
        FiniteSpace::new(probs).map_err(|e| Error::Scenario { row: 0, column: 1, message: e.to_string() })?
    } else {
        FiniteSpace::uniform(cols[0].len())?
    };
    let columns = headers[first_var..]
        .iter()
        .cloned()
        .zip(cols)
        .map(|(name, values)| Ok((name, RandomVariable::new(space.clone(), values)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Scenarios { space, columns })
}
