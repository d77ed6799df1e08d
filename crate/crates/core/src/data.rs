//! Left-censored paired observations and their CSV form (`t1,d1,t2,d2`).

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DprhError, Result};

/// One observed pair. `t_j = max(Y_j, C_j)`; `d_j` is true when `Y_j` itself
/// was observed (`Y_j >= C_j`) and false when it is left-censored at `t_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensoredPair {
    pub t1: f64,
    pub d1: bool,
    pub t2: f64,
    pub d2: bool,
}

impl CensoredPair {
    pub fn new(t1: f64, d1: bool, t2: f64, d2: bool) -> Self {
        CensoredPair { t1, d1, t2, d2 }
    }

    /// A fully observed pair.
    pub fn complete(t1: f64, t2: f64) -> Self {
        CensoredPair::new(t1, true, t2, true)
    }

    pub fn is_complete(&self) -> bool {
        self.d1 && self.d2
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    t1: f64,
    d1: u8,
    t2: f64,
    d2: u8,
}

fn flag(v: u8, line: usize, col: &str) -> Result<bool> {
    match v {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(DprhError::Data(format!(
            "line {line}: column {col} must be 0 or 1, got {v}"
        ))),
    }
}

/// Read pairs from CSV with header `t1,d1,t2,d2`.
pub fn read_pairs<R: Read>(reader: R) -> Result<Vec<CensoredPair>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
        // header is line 1
        let line = i + 2;
        let row = row.map_err(|e| DprhError::Data(format!("line {line}: {e}")))?;
        if !row.t1.is_finite() || !row.t2.is_finite() {
            return Err(DprhError::Data(format!("line {line}: non-finite value")));
        }
        out.push(CensoredPair {
            t1: row.t1,
            d1: flag(row.d1, line, "d1")?,
            t2: row.t2,
            d2: flag(row.d2, line, "d2")?,
        });
    }
    Ok(out)
}

pub fn read_pairs_path(path: impl AsRef<Path>) -> Result<Vec<CensoredPair>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path)
        .map_err(|e| DprhError::Data(format!("cannot open {}: {e}", path.display())))?;
    read_pairs(std::io::BufReader::new(f))
}

/// Write pairs as CSV. Values use the shortest representation that round-trips.
pub fn write_pairs<W: Write>(writer: W, pairs: &[CensoredPair]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in pairs {
        w.serialize(CsvRow {
            t1: p.t1,
            d1: p.d1 as u8,
            t2: p.t2,
            d2: p.d2 as u8,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pairs_path(path: impl AsRef<Path>, pairs: &[CensoredPair]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_pairs(std::io::BufWriter::new(f), pairs)
}
