//! CSV serialization of grid functions and weights.
//!
//! The format is a header `cell_index,value` followed by one row per cell in
//! row-major order. Values are written with Rust's shortest round-trip
//! formatting, so reading a file back yields bit-identical values.

use std::io::{Read, Write};

use crate::dyadic::function::GridFunction;
use crate::dyadic::grid::DyadicGrid;
use crate::dyadic::weight::Weight;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 2] = ["cell_index", "value"];

pub fn write_values<W: Write>(out: W, values: &[f64]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(CSV_HEADER)?;
    for (i, v) in values.iter().enumerate() {
        wtr.write_record([i.to_string(), format!("{v:?}")])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads the value column, checking the header and the row order.
pub fn read_values<R: Read>(input: R) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.len() != 2 || header.get(0) != Some(CSV_HEADER[0]) || header.get(1) != Some(CSV_HEADER[1]) {
        return Err(Error::Invalid(format!(
            "expected header `cell_index,value`, found `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut values = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let idx: usize = record
            .get(0)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Invalid(format!("row {row}: bad cell index")))?;
        if idx != row {
            return Err(Error::Invalid(format!("row {row}: expected cell index {row}, found {idx}")));
        }
        let v: f64 = record
            .get(1)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Invalid(format!("row {row}: bad value")))?;
        values.push(v);
    }
    Ok(values)
}

/// Infers the grid depth from a row count: `rows = 2^(dim * depth)`.
pub fn depth_for_rows(dim: u32, rows: usize) -> Result<u32> {
    if rows < 2 || !rows.is_power_of_two() {
        return Err(Error::Invalid(format!("{rows} rows is not a dyadic cell count")));
    }
    let log = rows.trailing_zeros();
    if log % dim != 0 {
        return Err(Error::Invalid(format!("{rows} rows is not a {dim}-dimensional cell count")));
    }
    Ok(log / dim)
}

impl GridFunction {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_values(out, self.values())
    }

    pub fn read_csv<R: Read>(grid: DyadicGrid, input: R) -> Result<Self> {
        GridFunction::new(grid, read_values(input)?)
    }
}

impl Weight {
    /// Writes the densities.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_values(out, self.density())
    }

    /// Reads densities; every entry must be positive.
    pub fn read_csv<R: Read>(grid: DyadicGrid, input: R) -> Result<Self> {
        Weight::from_density(grid, read_values(input)?)
    }
}
