//! File formats: JSON header plus raw little-endian f64 sidecar, CSV, 16-bit PGM.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Domain, GridSpec, ScalarField2D, Sinogram, SinogramGeometry};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldHeader {
    pub nx: usize,
    pub ny: usize,
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    pub dtype: String,
    pub order: String,
    pub data: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SinogramHeader {
    pub np: usize,
    pub ntheta: usize,
    pub pmax: f64,
    pub dtype: String,
    pub order: String,
    pub data: String,
}

fn sidecar(header: &Path) -> PathBuf {
    header.with_extension("f64")
}

fn write_raw(path: &Path, values: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn read_raw(path: &Path, n: usize) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() != 8 * n {
        return Err(Error::Dimension(format!(
            "{}: expected {} bytes, found {}",
            path.display(),
            8 * n,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Writes `header` (JSON) and its `.f64` sidecar; returns both paths.
pub fn write_field(header: &Path, f: &ScalarField2D) -> Result<Vec<PathBuf>> {
    let g = f.grid();
    let raw = sidecar(header);
    let h = FieldHeader {
        nx: g.nx,
        ny: g.ny,
        xmin: g.domain.xmin,
        xmax: g.domain.xmax,
        ymin: g.domain.ymin,
        ymax: g.domain.ymax,
        dtype: "f64le".into(),
        order: "row-major".into(),
        data: file_name(&raw),
    };
    fs::write(header, serde_json::to_string_pretty(&h)? + "\n")?;
    write_raw(&raw, f.values())?;
    Ok(vec![header.to_path_buf(), raw])
}

pub fn read_field(header: &Path) -> Result<ScalarField2D> {
    let h: FieldHeader = serde_json::from_str(&fs::read_to_string(header)?)?;
    check_layout(&h.dtype, &h.order)?;
    let grid = GridSpec::new(
        h.nx,
        h.ny,
        Domain {
            xmin: h.xmin,
            xmax: h.xmax,
            ymin: h.ymin,
            ymax: h.ymax,
        },
    )?;
    let raw = header.with_file_name(&h.data);
    ScalarField2D::new(grid, read_raw(&raw, grid.len())?)
}

pub fn write_sinogram(header: &Path, s: &Sinogram) -> Result<Vec<PathBuf>> {
    let g = s.geometry();
    let raw = sidecar(header);
    let h = SinogramHeader {
        np: g.np,
        ntheta: g.ntheta,
        pmax: g.pmax,
        dtype: "f64le".into(),
        order: "row-major".into(),
        data: file_name(&raw),
    };
    fs::write(header, serde_json::to_string_pretty(&h)? + "\n")?;
    write_raw(&raw, s.values())?;
    Ok(vec![header.to_path_buf(), raw])
}

pub fn read_sinogram(header: &Path) -> Result<Sinogram> {
    let h: SinogramHeader = serde_json::from_str(&fs::read_to_string(header)?)?;
    check_layout(&h.dtype, &h.order)?;
    let geom = SinogramGeometry::new(h.np, h.ntheta, h.pmax)?;
    let raw = header.with_file_name(&h.data);
    Sinogram::new(geom, read_raw(&raw, geom.len())?)
}

fn check_layout(dtype: &str, order: &str) -> Result<()> {
    if dtype != "f64le" || order != "row-major" {
        return Err(Error::InvalidParameter(format!(
            "unsupported layout dtype={dtype} order={order}"
        )));
    }
    Ok(())
}

/// CSV rows `p,theta,value`.
pub fn write_sinogram_csv(path: &Path, s: &Sinogram) -> Result<()> {
    let g = s.geometry();
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "p,theta,value")?;
    for j in 0..g.ntheta {
        for i in 0..g.np {
            writeln!(w, "{:.12e},{:.12e},{:.12e}", g.p(i), g.angle(j), s.get(i, j))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV rows `x1,x2,value` at cell centres.
pub fn write_field_csv(path: &Path, f: &ScalarField2D) -> Result<()> {
    let g = f.grid();
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "x1,x2,value")?;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = g.center(i, j);
            writeln!(w, "{:.12e},{:.12e},{:.12e}", c[0], c[1], f.get(i, j))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Two-column CSV with the given header names.
pub fn write_columns_csv(path: &Path, names: [&str; 2], x: &[f64], y: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{},{}", names[0], names[1])?;
    for (a, b) in x.iter().zip(y) {
        writeln!(w, "{a:.12e},{b:.12e}")?;
    }
    w.flush()?;
    Ok(())
}

/// Binary 16-bit PGM, linear min–max scaling recorded in a header comment.
/// Rows are written top (largest y or largest index) first.
pub fn write_pgm(path: &Path, width: usize, height: usize, values: &[f64]) -> Result<()> {
    if values.len() != width * height {
        return Err(Error::Dimension("PGM size mismatch".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n# min {lo:.17e} max {hi:.17e}\n{width} {height}\n65535\n").into_bytes();
    for row in (0..height).rev() {
        for v in &values[row * width..(row + 1) * width] {
            let q = (((v - lo) / span) * 65535.0).round().clamp(0.0, 65535.0) as u16;
            out.extend_from_slice(&q.to_be_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}
