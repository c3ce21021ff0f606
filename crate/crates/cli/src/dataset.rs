//! CSV ingestion.
//!
//! The dialect is fixed: comma separator, `.` decimal point, a mandatory
//! header row naming the locations, one event per line.

use std::fs;
use std::path::{Path, PathBuf};

use bear_core::SampleMatrix;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub path: PathBuf,
    pub names: Vec<String>,
    pub samples: SampleMatrix,
    /// Raw bytes of the file, kept for the manifest digest.
    pub bytes: Vec<u8>,
}

impl DatasetFile {
    /// Index of a column given by name or by 1-based position.
    pub fn column_index(&self, key: &str) -> Result<usize> {
        if let Some(i) = self.names.iter().position(|n| n == key) {
            return Ok(i);
        }
        match key.parse::<usize>() {
            Ok(i) if (1..=self.names.len()).contains(&i) => Ok(i - 1),
            _ => Err(CliError::Usage(format!(
                "no column '{key}' (columns: {})",
                self.names.join(", ")
            ))),
        }
    }
}

pub fn parse_csv(path: &Path) -> Result<DatasetFile> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let (names, samples) = parse_csv_bytes(&bytes).map_err(|e| e.context(&path.display().to_string()))?;
    Ok(DatasetFile {
        path: path.to_path_buf(),
        names,
        samples,
        bytes,
    })
}

/// Parses CSV text into column names and a sample matrix.
pub fn parse_csv_bytes(bytes: &[u8]) -> Result<(Vec<String>, SampleMatrix)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Data(format!("unreadable header: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(CliError::Data("empty file: a header row is required".into()));
    }
    let mut columns = vec![Vec::new(); names.len()];
    for record in reader.records() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { pos, expected_len, len } => CliError::Data(format!(
                "line {}: expected {expected_len} fields, found {len}",
                pos.as_ref().map_or(0, |p| p.line())
            )),
            _ => CliError::Data(e.to_string()),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        for ((field, name), col) in record.iter().zip(&names).zip(columns.iter_mut()) {
            let value: f64 = field
                .parse()
                .map_err(|_| CliError::Data(format!("line {line}, column {name}: not a number")))?;
            if !value.is_finite() {
                return Err(CliError::Data(format!("line {line}, column {name}: not a finite number")));
            }
            if value < 0.0 {
                return Err(CliError::Data(format!("line {line}, column {name}: negative value {value}")));
            }
            col.push(value);
        }
    }
    let rows = columns[0].len();
    if rows < 2 {
        return Err(CliError::Data(format!("need at least 2 data rows, found {rows}")));
    }
    Ok((names, SampleMatrix::from_columns(columns)?))
}

/// Writes a sample matrix with a header row.
pub fn write_csv<W: std::io::Write>(out: W, names: &[String], samples: &SampleMatrix) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(names)?;
    for i in 0..samples.rows() {
        w.write_record(samples.row(i).iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}
