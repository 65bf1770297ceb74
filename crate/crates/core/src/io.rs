//! Output formatting and the matching readers.
//!
//! JSON floats use the shortest representation that parses back to the
//! same bits; CSV floats carry 12 significant digits.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Formats a CSV cell with 12 significant digits.
pub fn fmt_csv(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        String::new()
    }
}

/// Formats an optional CSV cell; missing values become empty cells.
pub fn fmt_csv_opt(v: Option<f64>) -> String {
    v.map(fmt_csv).unwrap_or_default()
}

/// A JSON document with a schema version and a kind tag around a payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: u32,
    pub kind: String,
    pub tool_version: String,
    #[serde(flatten)]
    pub payload: T,
}

impl<T> Envelope<T> {
    pub fn new(kind: &str, payload: T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            payload,
        }
    }
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn read_json<T: DeserializeOwned, R: Read>(input: R) -> Result<T> {
    Ok(serde_json::from_reader(input)?)
}

pub fn read_json_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    read_json(BufReader::new(File::open(path)?))
}

/// A parsed CSV file: header and raw cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn read<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
        Ok(Self { headers, rows })
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Validation(format!("no column named {name}")))
    }

    /// Numeric cells of a column; empty cells are `None`.
    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let j = self.column_index(name)?;
        self.rows
            .iter()
            .map(|row| {
                let cell = row[j].trim();
                if cell.is_empty() {
                    Ok(None)
                } else {
                    cell.parse::<f64>()
                        .map(Some)
                        .map_err(|e| Error::Validation(format!("column {name}: {cell:?}: {e}")))
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_cells() {
        assert_eq!(fmt_csv(1.0), "1.00000000000e0");
        assert_eq!(fmt_csv(f64::NAN), "");
        assert_eq!(fmt_csv_opt(None), "");
        let v = 0.1234567890123456;
        let back: f64 = fmt_csv(v).parse().unwrap();
        assert!((back - v).abs() < 1e-12);
    }

    #[test]
    fn json_is_bit_faithful() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct P {
            x: f64,
        }
        for x in [0.1 + 0.2, 1.0 / 3.0, 1e-300, 6.02214076e23, -0.0] {
            let text = to_json_string(&Envelope::new("p", P { x })).unwrap();
            let back: Envelope<P> = read_json(text.as_bytes()).unwrap();
            assert_eq!(back.payload.x.to_bits(), x.to_bits());
            assert_eq!(back.schema_version, SCHEMA_VERSION);
        }
    }

    #[test]
    fn csv_table_round_trip() {
        let text = "a,b,status\n1.5e0,,ok\n2,3,subcritical\n";
        let t = CsvTable::read(text.as_bytes()).unwrap();
        assert_eq!(t.column("a").unwrap(), vec![Some(1.5), Some(2.0)]);
        assert_eq!(t.column("b").unwrap(), vec![None, Some(3.0)]);
        assert!(t.column("c").is_err());
        assert!(t.column("status").is_err());
    }
}
