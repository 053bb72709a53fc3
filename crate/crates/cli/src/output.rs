//! CSV emission: UTF-8, fixed header, one row per sweep point, numbers in
//! shortest round-trip decimal form. Output bytes are deterministic for a
//! fixed seed, and non-finite values are refused rather than leaked.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::experiment::ExperimentError;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum CsvCell {
    Int(u64),
    Num(f64),
    Text(String),
}

impl fmt::Display for CsvCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CsvCell::Int(v) => write!(f, "{v}"),
            CsvCell::Num(v) => write!(f, "{v}"),
            CsvCell::Text(v) => write!(f, "{v}"),
        }
    }
}

/// A finished experiment: header, data rows, and run-metadata notes that the
/// CLI prints to stdout (never into the CSV).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<CsvCell>>,
    pub notes: Vec<String>,
}

/// Writes the table as CSV to any writer.
pub fn emit_csv_to<W: Write>(table: &ResultTable, mut writer: W) -> Result<(), ExperimentError> {
    let io_err = |source: std::io::Error| ExperimentError::Io {
        path: "<writer>".to_string(),
        message: source.to_string(),
    };
    writeln!(writer, "{}", table.header.join(",")).map_err(io_err)?;
    for (row_index, row) in table.rows.iter().enumerate() {
        debug_assert_eq!(row.len(), table.header.len());
        for (col_index, cell) in row.iter().enumerate() {
            if let CsvCell::Num(v) = cell {
                if !v.is_finite() {
                    return Err(ExperimentError::NonFinite {
                        column: table.header[col_index].to_string(),
                        row: row_index,
                    });
                }
            }
            if col_index > 0 {
                write!(writer, ",").map_err(io_err)?;
            }
            write!(writer, "{cell}").map_err(io_err)?;
        }
        writeln!(writer).map_err(io_err)?;
    }
    writer.flush().map_err(io_err)
}

/// Renders the table to bytes; used for determinism checks.
pub fn csv_bytes(table: &ResultTable) -> Result<Vec<u8>, ExperimentError> {
    let mut buffer = Vec::new();
    emit_csv_to(table, &mut buffer)?;
    Ok(buffer)
}

/// Writes the table to a file.
pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<(), ExperimentError> {
    let file = File::create(path).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        message: source.to_string(),
    })?;
    emit_csv_to(table, BufWriter::new(file)).map_err(|e| match e {
        ExperimentError::Io { message, .. } => ExperimentError::Io {
            path: path.display().to_string(),
            message,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let table = ResultTable {
            header: vec!["x", "y"],
            rows: vec![],
            notes: vec![],
        };
        let bytes = csv_bytes(&table).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "x,y\n");
    }

    #[test]
    fn numbers_round_trip() {
        let table = ResultTable {
            header: vec!["v"],
            rows: vec![vec![CsvCell::Num(0.1 + 0.2)], vec![CsvCell::Num(1e-7)]],
            notes: vec![],
        };
        let text = String::from_utf8(csv_bytes(&table).unwrap()).unwrap();
        for (line, original) in text.lines().skip(1).zip([0.1 + 0.2, 1e-7]) {
            assert_eq!(line.parse::<f64>().unwrap(), original);
        }
    }

    #[test]
    fn non_finite_cells_are_refused() {
        let table = ResultTable {
            header: vec!["v"],
            rows: vec![vec![CsvCell::Num(f64::NAN)]],
            notes: vec![],
        };
        match csv_bytes(&table).unwrap_err() {
            ExperimentError::NonFinite { column, row } => {
                assert_eq!(column, "v");
                assert_eq!(row, 0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
