//! Deterministic text and binary writers.
//!
//! Floats are printed as `{:.16e}` (17 significant digits), which round-trips
//! every finite `f64` exactly.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::dynamics::{Trajectory, TrajectoryPoint};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::modes::CurrentField;

pub const TRAJECTORY_COLUMNS: [&str; 16] = [
    "t",
    "r_x",
    "r_y",
    "r_z",
    "p_x",
    "p_y",
    "p_z",
    "l_x",
    "l_y",
    "l_z",
    "helicity",
    "theta_dyn",
    "theta_dirac",
    "theta_berry",
    "energy",
    "D",
];

pub const GRID_COLUMNS: [&str; 8] = ["x", "y", "re", "im", "rho", "j_x", "j_y", "j_z"];

pub const GRID_MAGIC: &[u8; 8] = b"VPGRID01";
pub const GRID_HEADER_LEN: usize = 32;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trajectory_row(pt: &TrajectoryPoint) -> [f64; 16] {
    let s = &pt.state;
    [
        s.t,
        s.r.x,
        s.r.y,
        s.r.z,
        s.p.x,
        s.p.y,
        s.p.z,
        s.l_vec.x,
        s.l_vec.y,
        s.l_vec.z,
        pt.helicity,
        s.theta_dyn,
        s.theta_dirac,
        s.theta_berry,
        pt.energy,
        pt.d_factor,
    ]
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = TRAJECTORY_COLUMNS.join(",");
    out.push('\n');
    for pt in &traj.points {
        let row: Vec<String> = trajectory_row(pt).iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_trajectory_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    write_text(path, &trajectory_csv(traj))
}

/// Parse a CSV with a header line into numeric rows, checking the header.
pub fn parse_numeric_csv(text: &str, columns: &[&str], path: &Path) -> Result<Vec<Vec<f64>>> {
    let fmt_err = |reason: String| Error::Format { path: path.to_path_buf(), reason };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| fmt_err("empty file".into()))?;
    if header != columns.join(",") {
        return Err(fmt_err(format!("unexpected header `{header}`")));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let row = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| fmt_err(format!("line {}: {e}", i + 2)))?;
            if row.len() != columns.len() {
                return Err(fmt_err(format!("line {}: {} columns, expected {}", i + 2, row.len(), columns.len())));
            }
            Ok(row)
        })
        .collect()
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<[f64; 16]>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows = parse_numeric_csv(&text, &TRAJECTORY_COLUMNS, path)?;
    Ok(rows.into_iter().map(|r| r.try_into().expect("width checked")).collect())
}

/// Grid dump with density and, if given, the probability current.
pub fn grid_csv(grid: &GridField, current: Option<&CurrentField>) -> String {
    let mut out = GRID_COLUMNS.join(",");
    out.push('\n');
    for (i, (x, y, u)) in grid.nodes().enumerate() {
        let (jx, jy, jz) = current.map_or((0.0, 0.0, 0.0), |c| (c.jx[i], c.jy[i], c.jz[i]));
        let row = [x, y, u.re, u.im, u.norm_sqr(), jx, jy, jz];
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_grid_csv(grid: &GridField, current: Option<&CurrentField>, path: &Path) -> Result<()> {
    write_text(path, &grid_csv(grid, current))
}

/// `VPGRID01` layout: magic, `grid_n` as u64, `extent`, `tau`, then
/// interleaved `(re, im)` pairs in storage order; all little-endian.
pub fn encode_grid(grid: &GridField) -> Vec<u8> {
    let mut buf = Vec::with_capacity(GRID_HEADER_LEN + 16 * grid.values().len());
    buf.extend_from_slice(GRID_MAGIC);
    buf.extend_from_slice(&(grid.grid_n() as u64).to_le_bytes());
    buf.extend_from_slice(&grid.extent().to_le_bytes());
    buf.extend_from_slice(&grid.tau.to_le_bytes());
    for v in grid.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    buf
}

pub fn decode_grid(bytes: &[u8], path: &Path) -> Result<GridField> {
    let fmt_err = |reason: String| Error::Format { path: path.to_path_buf(), reason };
    if bytes.len() < GRID_HEADER_LEN || &bytes[..8] != GRID_MAGIC {
        return Err(fmt_err("missing VPGRID01 header".into()));
    }
    let word = |i: usize| -> [u8; 8] { bytes[i..i + 8].try_into().expect("8 bytes") };
    let grid_n = u64::from_le_bytes(word(8));
    let extent = f64::from_le_bytes(word(16));
    let tau = f64::from_le_bytes(word(24));
    let grid_n = usize::try_from(grid_n).map_err(|_| fmt_err(format!("grid_n {grid_n} too large")))?;
    let expected = grid_n
        .checked_mul(grid_n)
        .and_then(|n| n.checked_mul(16))
        .and_then(|n| n.checked_add(GRID_HEADER_LEN))
        .ok_or_else(|| fmt_err(format!("grid_n {grid_n} too large")))?;
    if bytes.len() != expected {
        return Err(fmt_err(format!("{} bytes, expected {expected} for grid_n = {grid_n}", bytes.len())));
    }
    let values = bytes[GRID_HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    GridField::new(grid_n, extent, tau, values).map_err(|e| fmt_err(e.to_string()))
}

pub fn write_grid_binary(grid: &GridField, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode_grid(grid)).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_grid_binary(path: &Path) -> Result<GridField> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_grid(&bytes, path)
}

/// Aligned CSV: every column padded to its widest cell.
pub fn aligned_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let padded: Vec<String> =
            cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}", w = *w)).collect();
        padded.join(", ")
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}
