//! Learning-curve CSV files: one row per episode, flushed as written so an
//! interrupted run leaves a readable prefix.

use std::fs::{File, OpenOptions};
use std::path::Path;

use serde::{Deserialize, Serialize};
use svqc_core::env::trailing_mean;
use svqc_core::{Error, Result};

pub const HEADER: [&str; 5] = ["episode", "reward", "avg20", "steps", "wall_ms"];
pub const CURVE_WINDOW: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub episode: usize,
    pub reward: f64,
    pub avg20: f64,
    pub steps: usize,
    pub wall_ms: u64,
}

/// Mean of the last (up to) 20 rewards.
pub fn avg20(rewards: &[f64]) -> f64 {
    trailing_mean(rewards, CURVE_WINDOW)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

pub struct CurveWriter {
    inner: csv::Writer<File>,
}

impl CurveWriter {
    /// Create (truncating) `path` and write the header.
    pub fn create(path: &Path) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
        inner.write_record(HEADER).map_err(csv_err)?;
        inner.flush()?;
        Ok(CurveWriter { inner })
    }

    /// Append to an existing curve, for resumed runs.
    pub fn append(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().append(true).open(path)?;
        let inner = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        Ok(CurveWriter { inner })
    }

    pub fn write(&mut self, row: &CurveRow) -> Result<()> {
        self.inner.serialize(row).map_err(csv_err)?;
        self.inner.flush()?;
        Ok(())
    }
}

pub fn read_curve(path: &Path) -> Result<Vec<CurveRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Parse(format!(
            "{}: expected header {}, found {}",
            path.display(),
            HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::Parse(format!("{}: {e}", path.display()))))
        .collect()
}
