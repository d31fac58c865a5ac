use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use csv::{ReaderBuilder, Trim, WriterBuilder};

use super::{ColumnSlot, Objective, ObjectiveValues, RunTable, Variable, DEFAULT_RELATION};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Load a CSV run table. Columns named in `objective_names` become
/// objectives; everything else is a variable.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, objective_names: &[String]) -> Result<RunTable<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, objective_names)
}

pub fn parse_csv<T: Scalar, R: Read>(reader: R, objective_names: &[String]) -> Result<RunTable<T>> {
    let mut rdr = ReaderBuilder::new()
        .has_headers(true)
        .trim(Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut seen = HashSet::new();
    for h in &headers {
        if h.is_empty() {
            return Err(Error::parse(1, "empty column name in header"));
        }
        if !seen.insert(h.as_str()) {
            return Err(Error::parse(1, format!("duplicate column name '{h}'")));
        }
    }
    for name in objective_names {
        if !seen.contains(name.as_str()) {
            return Err(Error::UnknownColumn(name.clone()));
        }
    }

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for (row, record) in rdr.records().enumerate() {
        // header is line 1
        let line = row + 2;
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                Error::parse(line, format!("row has {len} fields, header has {expected_len}"))
            }
            _ => Error::from(e),
        })?;
        for (col, field) in record.iter().enumerate() {
            if field.is_empty() {
                return Err(Error::parse(
                    line,
                    format!("missing value in column '{}'", headers[col]),
                ));
            }
            cells[col].push(field.to_string());
        }
    }

    let objective_set: HashSet<&str> = objective_names.iter().map(String::as_str).collect();
    let mut variables = Vec::new();
    let mut objectives = Vec::new();
    let mut layout = Vec::new();
    for (name, column) in headers.into_iter().zip(cells) {
        if objective_set.contains(name.as_str()) {
            layout.push(ColumnSlot::Objective(objectives.len()));
            objectives.push(parse_objective(name, column));
        } else {
            let mut values = Vec::with_capacity(column.len());
            for (row, token) in column.iter().enumerate() {
                match parse_number::<T>(token) {
                    Some(x) => values.push(x),
                    None => {
                        return Err(Error::parse(
                            row + 2,
                            format!("non-numeric token '{token}' in variable column '{name}'"),
                        ))
                    }
                }
            }
            layout.push(ColumnSlot::Variable(variables.len()));
            variables.push(Variable { name, values });
        }
    }
    RunTable::with_layout(DEFAULT_RELATION, variables, objectives, layout)
}

pub(crate) fn parse_number<T: Scalar>(token: &str) -> Option<T> {
    token.parse::<T>().ok().filter(|x| x.is_finite())
}

fn parse_objective<T: Scalar>(name: String, column: Vec<String>) -> Objective<T> {
    let numeric: Option<Vec<T>> = column.iter().map(|t| parse_number(t)).collect();
    match numeric {
        Some(values) => Objective::continuous(name, values),
        None => {
            let alphabet: Vec<String> = column.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
            let codes = column
                .iter()
                .map(|t| alphabet.binary_search(t).expect("token drawn from alphabet"))
                .collect();
            Objective::categorical(name, alphabet, codes)
        }
    }
}

/// Render the table as CSV in its original column order.
pub fn to_csv_string<T: Scalar>(table: &RunTable<T>) -> Result<String> {
    let mut wtr = WriterBuilder::new().from_writer(Vec::new());
    let header: Vec<&str> = table
        .layout()
        .iter()
        .map(|slot| match *slot {
            ColumnSlot::Variable(i) => table.variables()[i].name.as_str(),
            ColumnSlot::Objective(i) => table.objectives()[i].name.as_str(),
        })
        .collect();
    wtr.write_record(&header)?;
    for run in 0..table.n_runs() {
        let record: Vec<String> = table
            .layout()
            .iter()
            .map(|slot| match *slot {
                ColumnSlot::Variable(i) => table.variables()[i].values[run].to_string(),
                ColumnSlot::Objective(i) => match &table.objectives()[i].values {
                    ObjectiveValues::Continuous(v) => v[run].to_string(),
                    ObjectiveValues::Categorical { alphabet, codes } => alphabet[codes[run]].clone(),
                },
            })
            .collect();
        wtr.write_record(&record)?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

pub fn write_csv<T: Scalar>(table: &RunTable<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_csv_string(table)?).map_err(|e| Error::io(path, e))
}
