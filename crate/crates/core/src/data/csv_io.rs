//! CSV ingestion and export.
//!
//! Format: UTF-8, comma-separated, first row is a header, `.` decimal
//! separator, numeric cells unquoted. Parse errors report the 1-based data
//! row and the column name.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::data::{DataMatrix, Task};
use crate::error::{Error, Result};

/// Load a complete dataset from a CSV file. `target_column` is removed from
/// the feature set; the remaining columns keep their file order.
///
/// Input datasets must be complete: a cell that does not parse as a finite
/// real is an error (missingness is simulated downstream, never ingested).
pub fn load_csv(path: &Path, target_column: &str, task: Task) -> Result<DataMatrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    let target_idx = headers
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::TargetColumnNotFound(target_column.to_string()))?;

    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let p = feature_names.len();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut target: Vec<f64> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::BadCell {
                row: row_idx + 1,
                column: String::new(),
                message: format!("expected {} fields, got {}", headers.len(), record.len()),
            });
        }
        let mut row = Vec::with_capacity(p);
        for (col_idx, cell) in record.iter().enumerate() {
            let value = parse_cell(cell, row_idx + 1, &headers[col_idx])?;
            if col_idx == target_idx {
                target.push(value);
            } else {
                row.push(value);
            }
        }
        rows.push(row);
    }

    let n = rows.len();
    let values = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    DataMatrix::new(values, DVector::from_vec(target), feature_names, task)
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    let value: f64 = cell.trim().parse().map_err(|_| Error::BadCell {
        row,
        column: column.to_string(),
        message: format!("'{cell}' is not a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::BadCell {
            row,
            column: column.to_string(),
            message: format!("'{cell}' is not finite"),
        });
    }
    Ok(value)
}

/// Write a value matrix with named columns, matching the input schema so
/// completed matrices can be diffed across implementations.
pub fn write_values_csv<W: Write>(
    out: &mut W,
    values: &DMatrix<f64>,
    column_names: &[String],
) -> Result<()> {
    writeln!(out, "{}", column_names.join(","))?;
    for i in 0..values.nrows() {
        let row: Vec<String> = (0..values.ncols())
            .map(|j| format!("{}", values[(i, j)]))
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
