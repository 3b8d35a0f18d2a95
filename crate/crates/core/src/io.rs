//! Numeric CSV ingestion: comma separated, decimal point, one observation per
//! line. A first line that does not parse as numbers is taken as a header.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Dataset;

/// Parsed CSV with the optional header row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvData {
    pub header: Option<Vec<String>>,
    pub dataset: Dataset,
}

pub fn read_csv_path(path: impl AsRef<Path>) -> Result<CsvData> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file)
}

pub fn read_csv<R: Read>(reader: R) -> Result<CsvData> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if idx == 0 => {
                header = Some(record.iter().map(str::to_string).collect());
                continue;
            }
            Err(_) => {
                let bad = record.iter().find(|f| f.parse::<f64>().is_err()).unwrap_or_default();
                return Err(Error::Parse {
                    line,
                    message: format!("'{bad}' is not a number"),
                });
            }
        };
        let expected = *width.get_or_insert(values.len());
        if values.len() != expected {
            return Err(Error::Parse {
                line,
                message: format!("expected {expected} fields, found {}", values.len()),
            });
        }
        if let Some(col) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: rows.len(), col });
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no numeric rows found".into(),
        });
    }
    Ok(CsvData {
        header,
        dataset: Dataset::from_rows(&rows)?,
    })
}
