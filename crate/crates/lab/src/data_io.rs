//! ETT-shaped CSV ingestion and series export.
//!
//! Layout: a header row, then one row per time step. The first column is a
//! timestamp or an integer index, every further column one numeric channel.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use frele_core::series::MultiSeries;
use frele_core::Matrix;

use crate::error::{LabError, Result};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<MultiSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| LabError::io(path, e))?;
    read_series(file, &path.display().to_string())
}

/// Parses a series from any reader. `source` names the input in errors.
/// Row numbers count data rows from 1; the header is row 0.
pub fn read_series<R: Read>(reader: R, source: &str) -> Result<MultiSeries> {
    let parse_err = |row: usize, message: String| LabError::Parse {
        input: source.to_string(),
        row,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_err(0, e.to_string()))?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(LabError::NoData(source.to_string()));
    }
    if headers.len() < 2 {
        return Err(parse_err(0, "expected a time column and at least one value column".into()));
    }
    let names: Vec<String> = headers.iter().skip(1).map(String::from).collect();
    let channels = names.len();

    let mut stamps = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); channels];
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| parse_err(row, e.to_string()))?;
        if record.len() != channels + 1 {
            return Err(parse_err(
                row,
                format!("expected {} fields, found {}", channels + 1, record.len()),
            ));
        }
        let stamp = &record[0];
        if stamp.is_empty() {
            return Err(parse_err(row, "empty time column".into()));
        }
        stamps.push(stamp.to_string());
        for (c, cell) in record.iter().skip(1).enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                parse_err(row, format!("column {:?}: {cell:?} is not a number", names[c]))
            })?;
            if !v.is_finite() {
                return Err(parse_err(row, format!("column {:?}: non-finite value", names[c])));
            }
            values[c].push(v);
        }
    }
    if stamps.is_empty() {
        return Err(LabError::NoData(source.to_string()));
    }

    let len = stamps.len();
    let timestamps = if stamps.iter().all(|s| s.parse::<i64>().is_ok()) {
        None
    } else {
        Some(stamps)
    };
    let matrix = Matrix::from_vec(channels, len, values.concat())?;
    Ok(MultiSeries::new(matrix, names, timestamps)?)
}

/// Writes a series in the layout [`read_series`] accepts. Series without
/// timestamps get an integer index column.
pub fn write_series<W: Write>(writer: W, series: &MultiSeries) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    let time_col = if series.timestamps().is_some() { "date" } else { "index" };
    write!(w, "{time_col}")?;
    for name in series.channel_names() {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    let values = series.values();
    for t in 0..series.len() {
        match series.timestamps() {
            Some(ts) => write!(w, "{}", ts[t])?,
            None => write!(w, "{t}")?,
        }
        for c in 0..series.channels() {
            write!(w, ",{}", fmt_f64(values[(c, t)]))?;
        }
        writeln!(w)?;
    }
    w.flush()
}

pub fn save_csv(path: impl AsRef<Path>, series: &MultiSeries) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| LabError::io(path, e))?;
    write_series(file, series).map_err(|e| LabError::io(path, e))
}
