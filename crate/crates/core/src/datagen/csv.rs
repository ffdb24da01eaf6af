use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use super::JOINT_NAMES;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::numfmt::sig17;

/// First line of every dataset file.
pub const CSV_HEADER: &str = "head_yaw,head_pitch,shoulder_roll,shoulder_pitch,elbow_roll,elbow_yaw,wrist";

pub fn to_csv_string(dataset: ArrayView2<f64>) -> Result<String> {
    if dataset.ncols() != JOINT_NAMES.len() {
        return Err(Error::Shape {
            expected: JOINT_NAMES.len(),
            got: dataset.ncols(),
        });
    }
    let mut out = String::with_capacity(dataset.len() * 22 + CSV_HEADER.len());
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in dataset.rows() {
        let cells: Vec<String> = row.iter().map(|&v| sig17(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn save_csv(dataset: ArrayView2<f64>, path: &Path) -> Result<()> {
    write_atomic(path, to_csv_string(dataset)?.as_bytes())
}

pub fn parse_csv(text: &str, source_name: &str) -> Result<Array2<f64>> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = records
        .next()
        .ok_or_else(|| Error::parse(source_name, "row 1", "missing header"))?
        .map_err(|e| Error::parse(source_name, "row 1", e.to_string()))?;
    let got: Vec<&str> = header.iter().collect();
    if got != JOINT_NAMES {
        return Err(Error::parse(
            source_name,
            "row 1",
            format!("expected header `{CSV_HEADER}`, got `{}`", got.join(",")),
        ));
    }

    let mut values = Vec::new();
    let mut rows = 0;
    for (k, record) in records.enumerate() {
        // Row numbers count the header as row 1.
        let row_no = k + 2;
        let record = record.map_err(|e| Error::parse(source_name, format!("row {row_no}"), e.to_string()))?;
        if record.len() != JOINT_NAMES.len() {
            return Err(Error::parse(
                source_name,
                format!("row {row_no}"),
                format!("expected {} columns, got {}", JOINT_NAMES.len(), record.len()),
            ));
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::parse(
                    source_name,
                    format!("row {row_no}, column {} ({})", c + 1, JOINT_NAMES[c]),
                    format!("`{cell}` is not a number"),
                )
            })?;
            if !v.is_finite() {
                return Err(Error::parse(
                    source_name,
                    format!("row {row_no}, column {} ({})", c + 1, JOINT_NAMES[c]),
                    format!("`{cell}` is not finite"),
                ));
            }
            values.push(v);
        }
        rows += 1;
    }
    Ok(Array2::from_shape_vec((rows, JOINT_NAMES.len()), values).expect("row lengths checked"))
}

pub fn load_csv(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, &path.display().to_string())
}
