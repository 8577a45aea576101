//! Count CSV ingestion and emission.
//!
//! The on-disk format is one header row `var1,...,varK,count` followed by one
//! row per cell: level labels as strings and a non-negative decimal count.
//! Missing level combinations read as zero cells; duplicates are rejected.
//! Levels are discovered in first-appearance order, variables in header order.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::schema::{Role, Schema, Variable};
use crate::table::Table;

/// Which CSV columns play which role, plus the designated levels.
#[derive(Debug, Clone)]
pub struct Roles {
    pub outcome: String,
    pub exposure: String,
    /// `None` assigns every remaining column as a confounder.
    pub confounders: Option<Vec<String>>,
    pub event_level: String,
    pub reference_exposure: String,
}

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads a count table, building the schema from the header, the role
/// assignment, and the observed levels.
pub fn read_count_table<R: Read>(reader: R, roles: &Roles) -> Result<Table> {
    let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = csv_reader
        .headers()
        .map_err(|e| parse_error(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.len() < 2 {
        return Err(parse_error(1, "expected at least one variable column and `count`"));
    }
    if headers.last().map(String::as_str) != Some("count") {
        return Err(parse_error(1, "last column must be named `count`"));
    }
    let var_names = &headers[..headers.len() - 1];

    let role_of = |name: &str| -> Result<Role> {
        if name == roles.outcome {
            Ok(Role::Outcome)
        } else if name == roles.exposure {
            Ok(Role::Exposure)
        } else {
            match &roles.confounders {
                None => Ok(Role::Confounder),
                Some(list) if list.iter().any(|c| c == name) => Ok(Role::Confounder),
                Some(_) => Err(Error::InvalidSchema(format!(
                    "column `{name}` is not assigned to any role"
                ))),
            }
        }
    };
    if !var_names.iter().any(|n| n == &roles.outcome) {
        return Err(Error::InvalidSchema(format!(
            "outcome variable `{}` is not a CSV column",
            roles.outcome
        )));
    }
    if !var_names.iter().any(|n| n == &roles.exposure) {
        return Err(Error::InvalidSchema(format!(
            "exposure variable `{}` is not a CSV column",
            roles.exposure
        )));
    }
    if let Some(list) = &roles.confounders {
        for c in list {
            if !var_names.iter().any(|n| n == c) {
                return Err(Error::InvalidSchema(format!(
                    "confounder `{c}` is not a CSV column"
                )));
            }
        }
    }

    // First pass: collect rows and levels in first-appearance order.
    let mut levels: Vec<Vec<String>> = vec![Vec::new(); var_names.len()];
    let mut rows: Vec<(Vec<usize>, f64, u64)> = Vec::new();
    for record in csv_reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != headers.len() {
            return Err(parse_error(
                line,
                format!("expected {} fields, got {}", headers.len(), record.len()),
            ));
        }
        let mut level_idx = Vec::with_capacity(var_names.len());
        for (v, label) in record.iter().take(var_names.len()).enumerate() {
            let idx = match levels[v].iter().position(|l| l == label) {
                Some(i) => i,
                None => {
                    levels[v].push(label.to_string());
                    levels[v].len() - 1
                }
            };
            level_idx.push(idx);
        }
        let count: f64 = record[var_names.len()]
            .parse()
            .map_err(|e| parse_error(line, format!("bad count: {e}")))?;
        if !count.is_finite() || count < 0.0 {
            return Err(parse_error(line, format!("count must be non-negative, got {count}")));
        }
        rows.push((level_idx, count, line));
    }
    if rows.is_empty() {
        return Err(parse_error(1, "no data rows"));
    }

    let variables: Vec<Variable> = var_names
        .iter()
        .zip(&levels)
        .map(|(name, ls)| Ok(Variable::new(name.clone(), ls.clone(), role_of(name)?)))
        .collect::<Result<_>>()?;
    let schema = Schema::new(
        variables,
        roles.event_level.clone(),
        roles.reference_exposure.clone(),
    )?;

    let strides = {
        let mut strides = vec![1usize; var_names.len()];
        for i in (0..var_names.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * levels[i + 1].len();
        }
        strides
    };
    let mut cells = vec![0.0; schema.cell_count()];
    let mut seen = vec![false; schema.cell_count()];
    for (level_idx, count, line) in rows {
        let cell: usize = level_idx.iter().zip(&strides).map(|(l, s)| l * s).sum();
        if seen[cell] {
            return Err(parse_error(line, "duplicate cell"));
        }
        seen[cell] = true;
        cells[cell] = count;
    }
    Table::new(schema, cells)
}

pub fn read_count_file(path: impl AsRef<Path>, roles: &Roles) -> Result<Table> {
    read_count_table(File::open(path)?, roles)
}

/// Writes a table in the count CSV format, one row per cell in row-major
/// order, counts at 12 significant digits.
pub fn write_count_csv<W: Write>(writer: W, table: &Table) -> Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    let schema = table.schema();
    let mut header: Vec<&str> = schema.variables().iter().map(|v| v.name.as_str()).collect();
    header.push("count");
    csv_writer
        .write_record(&header)
        .map_err(|e| parse_error(0, e.to_string()))?;
    let mut digits = vec![0usize; schema.variables().len()];
    for (cell, &value) in table.cells().iter().enumerate() {
        schema.decode(cell, &mut digits);
        let mut record: Vec<String> = schema
            .variables()
            .iter()
            .zip(&digits)
            .map(|(v, &d)| v.levels[d].clone())
            .collect();
        record.push(format_sig12(value));
        csv_writer
            .write_record(&record)
            .map_err(|e| parse_error(0, e.to_string()))?;
    }
    csv_writer.flush()?;
    Ok(())
}

/// Formats a float with 12 significant digits, printf `%.12g` style:
/// fixed notation in a moderate exponent range, scientific outside it,
/// trailing zeros trimmed.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exponent) = sci.split_once('e').expect("scientific notation");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if !(-5..12).contains(&exponent) {
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    } else {
        let decimals = (11 - exponent).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    }
}
