//! Plain-text snapshot files.
//!
//! Scalar layout:
//! ```text
//! csd-field v1 <nx> <ny> <x_min> <x_max> <y_min> <y_max>
//! <value>                  one per line, row-major (x fastest), 17 sig digits
//! ```
//! Complex fields use the tag `csd-complex v1` and carry `<re> <im>` per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use super::field::{ComplexField, ScalarField};
use super::grid::Grid2D;
use crate::error::{CsdError, Result};

const SCALAR_TAG: &str = "csd-field v1";
const COMPLEX_TAG: &str = "csd-complex v1";

fn write_header(w: &mut impl Write, tag: &str, g: &Grid2D) -> Result<()> {
    // extents use shortest round-trip formatting, values below use 17 digits
    writeln!(w, "{} {} {} {} {} {} {}", tag, g.nx, g.ny, g.x_min, g.x_max, g.y_min, g.y_max)?;
    Ok(())
}

fn parse_header(line: &str, tag: &str, path: &Path) -> Result<Grid2D> {
    let rest = line.strip_prefix(tag).ok_or_else(|| {
        CsdError::SnapshotFormat(format!(
            "{}: expected header starting with '{tag}', got '{line}'",
            path.display()
        ))
    })?;
    let parts: Vec<&str> = rest.split_whitespace().collect();
    if parts.len() != 6 {
        return Err(CsdError::SnapshotFormat(format!(
            "{}: header needs nx ny x_min x_max y_min y_max, got {} fields",
            path.display(),
            parts.len()
        )));
    }
    let nx: usize = parts[0]
        .parse()
        .map_err(|_| CsdError::SnapshotFormat(format!("{}: bad nx '{}'", path.display(), parts[0])))?;
    let ny: usize = parts[1]
        .parse()
        .map_err(|_| CsdError::SnapshotFormat(format!("{}: bad ny '{}'", path.display(), parts[1])))?;
    let mut ext = [0.0f64; 4];
    for (slot, raw) in ext.iter_mut().zip(&parts[2..]) {
        *slot = raw.parse().map_err(|_| {
            CsdError::SnapshotFormat(format!("{}: bad extent '{}'", path.display(), raw))
        })?;
    }
    Grid2D::new(nx, ny, ext[0], ext[1], ext[2], ext[3])
}

pub fn write_scalar(field: &ScalarField, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, SCALAR_TAG, &field.grid)?;
    for v in &field.values {
        writeln!(w, "{v:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scalar(path: &Path) -> Result<ScalarField> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header = lines
        .next()
        .ok_or_else(|| CsdError::SnapshotFormat(format!("{}: empty file", path.display())))??;
    let grid = parse_header(&header, SCALAR_TAG, path)?;
    let mut values = Vec::with_capacity(grid.len());
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: f64 = line.trim().parse().map_err(|_| {
            CsdError::SnapshotFormat(format!("{}: line {}: bad value '{}'", path.display(), lineno + 2, line))
        })?;
        values.push(v);
    }
    if values.len() != grid.len() {
        return Err(CsdError::SnapshotFormat(format!(
            "{}: expected {} values, found {}",
            path.display(),
            grid.len(),
            values.len()
        )));
    }
    Ok(ScalarField { grid, values })
}

pub fn write_complex(field: &ComplexField, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, COMPLEX_TAG, &field.grid)?;
    for z in &field.values {
        writeln!(w, "{:.16e} {:.16e}", z.re, z.im)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_complex(path: &Path) -> Result<ComplexField> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header = lines
        .next()
        .ok_or_else(|| CsdError::SnapshotFormat(format!("{}: empty file", path.display())))??;
    let grid = parse_header(&header, COMPLEX_TAG, path)?;
    let mut values = Vec::with_capacity(grid.len());
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let bad = || {
            CsdError::SnapshotFormat(format!(
                "{}: line {}: expected '<re> <im>', got '{}'",
                path.display(),
                lineno + 2,
                line
            ))
        };
        let re: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let im: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if it.next().is_some() {
            return Err(bad());
        }
        values.push(Complex64::new(re, im));
    }
    if values.len() != grid.len() {
        return Err(CsdError::SnapshotFormat(format!(
            "{}: expected {} values, found {}",
            path.display(),
            grid.len(),
            values.len()
        )));
    }
    Ok(ComplexField { grid, values })
}
