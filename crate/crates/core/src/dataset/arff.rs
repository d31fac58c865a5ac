//! Attribute-Relation File Format reader and writer (dense data only).

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use super::csv_io::parse_number;
use super::{ColumnSlot, Objective, ObjectiveValues, RunTable, Variable};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

enum AttrType {
    Numeric,
    Nominal(Vec<String>),
}

struct Attribute {
    name: String,
    kind: AttrType,
}

/// Load an ARFF file: numeric attributes become variables, nominal
/// attributes become categorical objectives.
pub fn load_arff<T: Scalar>(path: impl AsRef<Path>) -> Result<RunTable<T>> {
    load_arff_with_objectives(path, &[])
}

/// Like [`load_arff`], but numeric attributes named in `numeric_objectives`
/// become continuous objectives instead of variables.
pub fn load_arff_with_objectives<T: Scalar>(
    path: impl AsRef<Path>,
    numeric_objectives: &[String],
) -> Result<RunTable<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_arff(&text, numeric_objectives)
}

pub fn parse_arff<T: Scalar>(text: &str, numeric_objectives: &[String]) -> Result<RunTable<T>> {
    let mut relation: Option<String> = None;
    let mut attributes: Vec<Attribute> = Vec::new();
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    let mut in_data = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if in_data {
            if line.starts_with('{') {
                return Err(Error::parse(line_no, "sparse ARFF data is not supported"));
            }
            rows.push((line_no, split_values(line, line_no)?));
            continue;
        }
        let (keyword, rest) = split_keyword(line);
        match keyword.to_ascii_lowercase().as_str() {
            "@relation" => {
                let (name, _) = take_name(rest, line_no)?;
                relation = Some(name);
            }
            "@attribute" => {
                if relation.is_none() {
                    return Err(Error::parse(line_no, "@attribute before @relation"));
                }
                let (name, rest) = take_name(rest, line_no)?;
                let kind = parse_type(rest.trim(), line_no)?;
                attributes.push(Attribute { name, kind });
            }
            "@data" => {
                if attributes.is_empty() {
                    return Err(Error::parse(line_no, "@data before any @attribute"));
                }
                in_data = true;
            }
            _ => return Err(Error::parse(line_no, format!("unexpected header line '{line}'"))),
        }
    }
    let relation = relation.ok_or_else(|| Error::parse(1, "missing @relation"))?;
    if !in_data {
        return Err(Error::parse(text.lines().count(), "missing @data section"));
    }
    let objective_set: HashSet<&str> = numeric_objectives.iter().map(String::as_str).collect();
    for name in numeric_objectives {
        if !attributes.iter().any(|a| &a.name == name) {
            return Err(Error::UnknownColumn(name.clone()));
        }
    }

    let mut variables = Vec::new();
    let mut objectives = Vec::new();
    let mut layout = Vec::new();
    for (col, attr) in attributes.iter().enumerate() {
        let mut tokens = Vec::with_capacity(rows.len());
        for (line_no, values) in &rows {
            if values.len() != attributes.len() {
                return Err(Error::parse(
                    *line_no,
                    format!(
                        "row has {} values, {} attributes declared",
                        values.len(),
                        attributes.len()
                    ),
                ));
            }
            let token = &values[col];
            if token == "?" {
                return Err(Error::parse(*line_no, format!("missing value for '{}'", attr.name)));
            }
            tokens.push((*line_no, token.as_str()));
        }
        match &attr.kind {
            AttrType::Numeric => {
                let mut values = Vec::with_capacity(tokens.len());
                for (line_no, token) in tokens {
                    values.push(parse_number::<T>(token).ok_or_else(|| {
                        Error::parse(line_no, format!("non-numeric value '{token}' for '{}'", attr.name))
                    })?);
                }
                if objective_set.contains(attr.name.as_str()) {
                    layout.push(ColumnSlot::Objective(objectives.len()));
                    objectives.push(Objective::continuous(attr.name.clone(), values));
                } else {
                    layout.push(ColumnSlot::Variable(variables.len()));
                    variables.push(Variable {
                        name: attr.name.clone(),
                        values,
                    });
                }
            }
            AttrType::Nominal(alphabet) => {
                let mut codes = Vec::with_capacity(tokens.len());
                for (line_no, token) in tokens {
                    let code = alphabet.iter().position(|a| a == token).ok_or_else(|| {
                        Error::parse(
                            line_no,
                            format!("undeclared nominal value '{token}' for '{}'", attr.name),
                        )
                    })?;
                    codes.push(code);
                }
                layout.push(ColumnSlot::Objective(objectives.len()));
                objectives.push(Objective::categorical(attr.name.clone(), alphabet.clone(), codes));
            }
        }
    }
    RunTable::with_layout(relation, variables, objectives, layout)
}

fn split_keyword(line: &str) -> (&str, &str) {
    match line.find(char::is_whitespace) {
        Some(pos) => (&line[..pos], &line[pos..]),
        None => (line, ""),
    }
}

/// Reads one (possibly quoted) name; returns it and the remainder.
fn take_name(s: &str, line_no: usize) -> Result<(String, &str)> {
    let s = s.trim_start();
    let mut chars = s.char_indices();
    match chars.next() {
        None => Err(Error::parse(line_no, "expected a name")),
        Some((_, q)) if q == '\'' || q == '"' => {
            let mut name = String::new();
            let mut escaped = false;
            for (pos, c) in chars {
                if escaped {
                    name.push(c);
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == q {
                    return Ok((name, &s[pos + c.len_utf8()..]));
                } else {
                    name.push(c);
                }
            }
            Err(Error::parse(line_no, "unterminated quoted name"))
        }
        Some(_) => {
            let end = s.find(|c: char| c.is_whitespace() || c == '{').unwrap_or(s.len());
            Ok((s[..end].to_string(), &s[end..]))
        }
    }
}

fn parse_type(s: &str, line_no: usize) -> Result<AttrType> {
    if let Some(body) = s.strip_prefix('{') {
        let body = body
            .strip_suffix('}')
            .ok_or_else(|| Error::parse(line_no, "unterminated nominal list"))?;
        let labels = split_values(body, line_no)?;
        if labels.iter().any(String::is_empty) {
            return Err(Error::parse(line_no, "empty nominal value"));
        }
        let distinct: HashSet<&String> = labels.iter().collect();
        if distinct.len() != labels.len() {
            return Err(Error::parse(line_no, "duplicate nominal value"));
        }
        return Ok(AttrType::Nominal(labels));
    }
    match s.to_ascii_lowercase().as_str() {
        "numeric" | "real" | "integer" => Ok(AttrType::Numeric),
        "" => Err(Error::parse(line_no, "missing attribute type")),
        other => Err(Error::parse(line_no, format!("unsupported attribute type '{other}'"))),
    }
}

/// Comma-separated values with optional single or double quoting.
fn split_values(s: &str, line_no: usize) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut quote: Option<char> = None;
    let mut escaped = false;
    let mut was_quoted = false;
    for c in s.chars() {
        match quote {
            Some(q) => {
                if escaped {
                    current.push(c);
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == q {
                    quote = None;
                } else {
                    current.push(c);
                }
            }
            None => match c {
                '\'' | '"' if current.trim().is_empty() => {
                    current.clear();
                    quote = Some(c);
                    was_quoted = true;
                }
                ',' => {
                    out.push(finish(&mut current, &mut was_quoted));
                }
                _ => current.push(c),
            },
        }
    }
    if quote.is_some() {
        return Err(Error::parse(line_no, "unterminated quoted value"));
    }
    out.push(finish(&mut current, &mut was_quoted));
    Ok(out)
}

fn finish(current: &mut String, was_quoted: &mut bool) -> String {
    let value = if *was_quoted {
        current.clone()
    } else {
        current.trim().to_string()
    };
    current.clear();
    *was_quoted = false;
    value
}

fn quote(name: &str) -> String {
    let needs = name.is_empty()
        || name
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, ',' | '\'' | '"' | '{' | '}' | '%' | '\\'))
        || name == "?";
    if needs {
        format!("'{}'", name.replace('\\', "\\\\").replace('\'', "\\'"))
    } else {
        name.to_string()
    }
}

/// Render the table as ARFF, preserving column order and class alphabets.
/// Continuous objectives are written as numeric attributes.
pub fn to_arff_string<T: Scalar>(table: &RunTable<T>) -> String {
    let mut out = String::new();
    writeln!(out, "@relation {}", quote(table.relation())).unwrap();
    out.push('\n');
    for slot in table.layout() {
        match *slot {
            ColumnSlot::Variable(i) => {
                writeln!(out, "@attribute {} numeric", quote(&table.variables()[i].name)).unwrap();
            }
            ColumnSlot::Objective(i) => {
                let o = &table.objectives()[i];
                match &o.values {
                    ObjectiveValues::Continuous(_) => {
                        writeln!(out, "@attribute {} numeric", quote(&o.name)).unwrap();
                    }
                    ObjectiveValues::Categorical { alphabet, .. } => {
                        let labels: Vec<String> = alphabet.iter().map(|a| quote(a)).collect();
                        writeln!(out, "@attribute {} {{{}}}", quote(&o.name), labels.join(",")).unwrap();
                    }
                }
            }
        }
    }
    out.push_str("\n@data\n");
    for run in 0..table.n_runs() {
        let row: Vec<String> = table
            .layout()
            .iter()
            .map(|slot| match *slot {
                ColumnSlot::Variable(i) => table.variables()[i].values[run].to_string(),
                ColumnSlot::Objective(i) => match &table.objectives()[i].values {
                    ObjectiveValues::Continuous(v) => v[run].to_string(),
                    ObjectiveValues::Categorical { alphabet, codes } => quote(&alphabet[codes[run]]),
                },
            })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_arff<T: Scalar>(table: &RunTable<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_arff_string(table)).map_err(|e| Error::io(path, e))
}
