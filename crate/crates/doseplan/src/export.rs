//! CSV grid export/import.
//!
//! Fields are written row-major, y-outer / x-inner, one CSV row per
//! y-line, values at 17 significant digits. The first line is a header
//! carrying the grid shape and domain bounds:
//!
//! ```text
//! # nx=100 ny=100 xmin=-1 xmax=1 ymin=-1 ymax=1
//! ```
//!
//! Vector fields are written as two parallel scalar files suffixed
//! `_x` and `_y`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::grid::{Grid, DOMAIN_MAX, DOMAIN_MIN};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldHeader {
    pub nx: usize,
    pub ny: usize,
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl FieldHeader {
    pub fn for_grid(grid: &Grid) -> FieldHeader {
        FieldHeader {
            nx: grid.nx,
            ny: grid.ny,
            xmin: DOMAIN_MIN,
            xmax: DOMAIN_MAX,
            ymin: DOMAIN_MIN,
            ymax: DOMAIN_MAX,
        }
    }

    fn line(&self) -> String {
        format!(
            "# nx={} ny={} xmin={} xmax={} ymin={} ymax={}",
            self.nx, self.ny, self.xmin, self.xmax, self.ymin, self.ymax
        )
    }

    fn parse(line: &str) -> Result<FieldHeader> {
        let mut nx = None;
        let mut ny = None;
        let mut bounds = [None; 4];
        for token in line.trim_start_matches('#').split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("malformed header token '{token}'")))?;
            match key {
                "nx" => nx = Some(value.parse::<usize>().map_err(|e| Error::Config(e.to_string()))?),
                "ny" => ny = Some(value.parse::<usize>().map_err(|e| Error::Config(e.to_string()))?),
                "xmin" | "xmax" | "ymin" | "ymax" => {
                    let idx = ["xmin", "xmax", "ymin", "ymax"].iter().position(|&k| k == key).unwrap();
                    bounds[idx] = Some(value.parse::<f64>().map_err(|e| Error::Config(e.to_string()))?);
                }
                other => return Err(Error::Config(format!("unknown header key '{other}'"))),
            }
        }
        match (nx, ny, bounds) {
            (Some(nx), Some(ny), [Some(xmin), Some(xmax), Some(ymin), Some(ymax)]) => Ok(FieldHeader {
                nx,
                ny,
                xmin,
                xmax,
                ymin,
                ymax,
            }),
            _ => Err(Error::Config("incomplete field header".into())),
        }
    }
}

fn write_rows(path: &Path, grid: &Grid, mut fmt_cell: impl FnMut(usize) -> String) -> Result<()> {
    let mut out = String::new();
    out.push_str(&FieldHeader::for_grid(grid).line());
    out.push('\n');
    for j in 0..grid.ny {
        let row: Vec<String> = (0..grid.nx).map(|i| fmt_cell(grid.idx(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes a scalar field at 17 significant digits.
pub fn write_scalar_field(path: impl AsRef<Path>, grid: &Grid, values: &[f64]) -> Result<()> {
    assert_eq!(values.len(), grid.n_cells(), "field does not match grid");
    write_rows(path.as_ref(), grid, |k| format!("{:.16e}", values[k]))
}

/// Writes an integer-coded field (region labels, band indices).
pub fn write_int_field(path: impl AsRef<Path>, grid: &Grid, values: &[i64]) -> Result<()> {
    assert_eq!(values.len(), grid.n_cells(), "field does not match grid");
    write_rows(path.as_ref(), grid, |k| values[k].to_string())
}

/// Writes a vector field as `<base>_x.csv` / `<base>_y.csv`.
pub fn write_vector_field(
    base: impl AsRef<Path>,
    grid: &Grid,
    x_values: &[f64],
    y_values: &[f64],
) -> Result<(PathBuf, PathBuf)> {
    let base = base.as_ref();
    let stem = base
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::Config(format!("bad export path {}", base.display())))?;
    let parent = base.parent().unwrap_or_else(|| Path::new("."));
    let px = parent.join(format!("{stem}_x.csv"));
    let py = parent.join(format!("{stem}_y.csv"));
    write_scalar_field(&px, grid, x_values)?;
    write_scalar_field(&py, grid, y_values)?;
    Ok((px, py))
}

/// Reads a scalar field written by [`write_scalar_field`] (or the integer
/// variant; integers parse as floats).
pub fn read_scalar_field(path: impl AsRef<Path>) -> Result<(FieldHeader, Vec<f64>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = FieldHeader::parse(
        lines
            .next()
            .ok_or_else(|| Error::Config(format!("{}: empty field file", path.display())))?,
    )?;
    let mut values = Vec::with_capacity(header.nx * header.ny);
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        for cell in line.split(',') {
            values.push(
                cell.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            );
        }
    }
    if values.len() != header.nx * header.ny {
        return Err(Error::Config(format!(
            "{}: expected {} values, found {}",
            path.display(),
            header.nx * header.ny,
            values.len()
        )));
    }
    Ok((header, values))
}
