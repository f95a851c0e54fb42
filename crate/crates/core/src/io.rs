//! CSV formats.
//!
//! * point clouds and configurations: a `dim=q` header line, then one point
//!   per row;
//! * dissimilarity and shortest-path matrices: headerless, `n` rows of `n`
//!   values, `inf` for disconnected pairs.
//!
//! Numbers are written in Rust's shortest round-trip form, so reading a
//! written file restores every value bit for bit.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::types::{Configuration, DissimilarityMatrix, PointCloud};

fn write_rows<W: Write>(w: W, header: Option<String>, m: ArrayView2<'_, f64>) -> Result<()> {
    let mut w = BufWriter::new(w);
    if let Some(h) = header {
        writeln!(w, "{h}")?;
    }
    let mut line = String::new();
    for row in m.rows() {
        line.clear();
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Parses comma-separated rows; `first_line` is the file line number of the
/// first row, for error messages.
fn parse_rows(text: &str, first_line: usize, width: Option<usize>) -> Result<Array2<f64>> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut cols = width;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: first_line + e.position().map_or(0, |p| p.line() as usize - 1),
            message: e.to_string(),
        })?;
        let line = first_line + record.position().map_or(rows, |p| p.line() as usize - 1);
        let expected = *cols.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Parse { line, message: format!("expected {expected} fields, found {}", record.len()) });
        }
        for field in record.iter() {
            let v: f64 =
                field.parse().map_err(|_| Error::Parse { line, message: format!("not a number: `{field}`") })?;
            if v.is_nan() {
                return Err(Error::Parse { line, message: "NaN is not allowed".into() });
            }
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    Ok(Array2::from_shape_vec((rows, cols), values).expect("row widths checked"))
}

fn read_to_string<R: Read>(mut r: R) -> Result<String> {
    let mut s = String::new();
    r.read_to_string(&mut s)?;
    Ok(s)
}

/// Splits off the `dim=q` header and parses the rows under it.
fn read_with_dim_header<R: Read>(r: R) -> Result<Array2<f64>> {
    let text = read_to_string(r)?;
    let (head, body) = text.split_once('\n').unwrap_or((text.as_str(), ""));
    let head = head.trim();
    if head.is_empty() {
        return Err(Error::Empty("missing `dim=` header".into()));
    }
    let dim: usize = head
        .strip_prefix("dim=")
        .and_then(|d| d.trim().parse().ok())
        .filter(|&d| d >= 1)
        .ok_or_else(|| Error::Parse { line: 1, message: format!("expected `dim=<q>` header, got `{head}`") })?;
    let m = parse_rows(body, 2, Some(dim))?;
    if m.nrows() == 0 {
        return Err(Error::Empty("no rows after the header".into()));
    }
    Ok(m)
}

pub fn write_point_cloud<W: Write>(w: W, cloud: &PointCloud) -> Result<()> {
    write_rows(w, Some(format!("dim={}", cloud.ambient_dim())), cloud.points())
}

pub fn read_point_cloud<R: Read>(r: R) -> Result<PointCloud> {
    PointCloud::new(read_with_dim_header(r)?)
}

pub fn write_configuration<W: Write>(w: W, z: &Configuration) -> Result<()> {
    write_rows(w, Some(format!("dim={}", z.dim())), z.coords())
}

pub fn read_configuration<R: Read>(r: R) -> Result<Configuration> {
    Configuration::new(read_with_dim_header(r)?)
}

/// Writes any square matrix; infinite entries become `inf`.
pub fn write_matrix<W: Write>(w: W, m: ArrayView2<'_, f64>) -> Result<()> {
    write_rows(w, None, m)
}

/// Square matrix that may contain `inf`.
pub fn read_matrix<R: Read>(r: R) -> Result<Array2<f64>> {
    let m = parse_rows(&read_to_string(r)?, 1, None)?;
    if m.nrows() == 0 {
        return Err(Error::Empty("matrix file has no rows".into()));
    }
    if m.nrows() != m.ncols() {
        return Err(Error::shape(format!("{0}x{0} matrix", m.nrows()), format!("{}x{}", m.nrows(), m.ncols())));
    }
    Ok(m)
}

pub fn write_dissimilarity<W: Write>(w: W, delta: &DissimilarityMatrix) -> Result<()> {
    write_matrix(w, delta.view())
}

/// Finite, symmetric, hollow, nonnegative matrix.
pub fn read_dissimilarity<R: Read>(r: R) -> Result<DissimilarityMatrix> {
    DissimilarityMatrix::new(read_matrix(r)?)
}

/// Creates `path` and hands a writer to `f`.
pub fn write_file(path: impl AsRef<Path>, f: impl FnOnce(File) -> Result<()>) -> Result<()> {
    f(File::create(path)?)
}

pub fn open_file(path: impl AsRef<Path>) -> Result<File> {
    Ok(File::open(path)?)
}
