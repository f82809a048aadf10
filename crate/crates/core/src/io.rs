//! File output: CSV tables, 8-bit PGM rasters and a hashed manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::forward::{Field, GridField2D, PiecewiseField1D};

/// One emitted file with its SHA-256 digest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

pub fn sha256_hex(data: &[u8]) -> String {
    let digest = Sha256::digest(data);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Writes `data` to `dir/name`, creating `dir` if needed.
pub fn write_file(dir: &Path, name: &str, data: &[u8]) -> Result<ManifestEntry> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, data)?;
    Ok(ManifestEntry {
        path,
        bytes: data.len() as u64,
        sha256: sha256_hex(data),
    })
}

/// `breakpoint,value` rows, value on the arc to the right.
pub fn breakpoints_csv(field: &PiecewiseField1D) -> String {
    let mut s = String::from("breakpoint,value\n");
    for (x, v) in field.breakpoints() {
        let _ = writeln!(s, "{x},{v}");
    }
    s
}

#[inline]
fn gray(w: f64) -> u8 {
    (255.0 * w).round().clamp(0.0, 255.0) as u8
}

/// Binary PGM of the grid, `round(255 w)` per cell. The first image row
/// holds the largest second coordinate, so the picture has `y` pointing up.
pub fn encode_pgm(grid: &GridField2D) -> Vec<u8> {
    let n = grid.cells_per_side();
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    out.reserve(n * n);
    for j in (0..n).rev() {
        out.extend(grid.values()[j * n..(j + 1) * n].iter().map(|w| gray(*w)));
    }
    out
}

/// Plot of a line field as a `width x height` PGM: pixel rows below the
/// curve are white.
pub fn rasterize_line(field: &PiecewiseField1D, width: usize, height: usize) -> Vec<u8> {
    let side = field.torus().side();
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    let heights: Vec<f64> = (0..width)
        .map(|i| field.value_at(-0.5 * side + (i as f64 + 0.5) * side / width as f64))
        .collect();
    for row in 0..height {
        let level = 1.0 - (row as f64 + 0.5) / height as f64;
        out.extend(heights.iter().map(|w| if *w >= level { 255u8 } else { 0 }));
    }
    out
}

/// Writes a snapshot: CSV of breakpoints plus a trace image on the line,
/// a PGM with a text sidecar in the plane.
pub fn emit_snapshot(dir: &Path, stem: &str, field: &Field, header: &str) -> Result<Vec<ManifestEntry>> {
    let mut files = Vec::new();
    match field {
        Field::Line(f) => {
            files.push(write_file(dir, &format!("{stem}.csv"), breakpoints_csv(f).as_bytes())?);
            files.push(write_file(dir, &format!("{stem}.pgm"), &rasterize_line(f, 1000, 200))?);
        }
        Field::Grid(g) => {
            files.push(write_file(dir, &format!("{stem}.pgm"), &encode_pgm(g))?);
        }
    }
    files.push(write_file(dir, &format!("{stem}.pgm.txt"), header.as_bytes())?);
    Ok(files)
}

/// Flat `key=value` manifest: one `file=` line per entry, with paths
/// relative to `root`.
pub fn manifest_text(root: &Path, entries: &[ManifestEntry], extra: &[(String, String)]) -> String {
    let mut s = String::new();
    for (k, v) in extra {
        let _ = writeln!(s, "{k}={v}");
    }
    for e in entries {
        let rel = e.path.strip_prefix(root).unwrap_or(&e.path);
        let _ = writeln!(s, "file={} bytes={} sha256={}", rel.display(), e.bytes, e.sha256);
    }
    s
}
