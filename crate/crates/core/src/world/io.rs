//! Map file format: a plain-text header followed by row-major run-length
//! encoded cell codes.
//!
//! ```text
//! sitenav-map 1
//! resolution 0.1
//! size 40 30
//! origin 0 0
//! data
//! 38F2O
//! 40F
//! ...
//! ```
//!
//! One data line per row (row 0 first, i.e. the origin row), runs written as
//! `<count><code>` with codes `F` free, `O` occupied, `U` unknown. Counts of
//! one keep the `1` prefix. Numbers use shortest-round-trip decimal, so a
//! write-read-write cycle is byte identical.

use super::{Cell, GridMap, WorldError};
use crate::geometry::Vector2;
use crate::scalar::Real;
use std::fmt::Write as _;
use std::path::Path;

const MAGIC: &str = "sitenav-map";
const VERSION: u32 = 1;

fn code(c: Cell) -> char {
    match c {
        Cell::Free => 'F',
        Cell::Occupied => 'O',
        Cell::Unknown => 'U',
    }
}

fn decode(ch: char) -> Option<Cell> {
    match ch {
        'F' => Some(Cell::Free),
        'O' => Some(Cell::Occupied),
        'U' => Some(Cell::Unknown),
        _ => None,
    }
}

pub fn write_map_string<F: Real>(map: &GridMap<F>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "resolution {}", map.resolution().as_f64());
    let _ = writeln!(out, "size {} {}", map.width(), map.height());
    let _ = writeln!(
        out,
        "origin {} {}",
        map.origin().x.as_f64(),
        map.origin().y.as_f64()
    );
    let _ = writeln!(out, "data");
    for iy in 0..map.height() {
        let mut run_cell = map.cell(0, iy);
        let mut run_len = 1usize;
        for ix in 1..map.width() {
            let c = map.cell(ix, iy);
            if c == run_cell {
                run_len += 1;
            } else {
                let _ = write!(out, "{}{}", run_len, code(run_cell));
                run_cell = c;
                run_len = 1;
            }
        }
        let _ = writeln!(out, "{}{}", run_len, code(run_cell));
    }
    out
}

pub fn write_map<F: Real>(map: &GridMap<F>, path: &Path) -> Result<(), WorldError> {
    std::fs::write(path, write_map_string(map))?;
    Ok(())
}

pub fn read_map_str<F: Real>(text: &str) -> Result<GridMap<F>, WorldError> {
    let mut lines = text.lines();
    let head = lines
        .next()
        .ok_or_else(|| WorldError::Format("empty file".into()))?;
    let mut it = head.split_whitespace();
    if it.next() != Some(MAGIC) {
        return Err(WorldError::Format(format!("bad magic line {head:?}")));
    }
    let version: u32 = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| WorldError::Format("missing format version".into()))?;
    if version != VERSION {
        return Err(WorldError::Format(format!(
            "unsupported map version {version} (expected {VERSION})"
        )));
    }

    let mut resolution = None;
    let mut size = None;
    let mut origin = None;
    loop {
        let line = lines
            .next()
            .ok_or_else(|| WorldError::Format("missing data section".into()))?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("resolution") => {
                let v: f64 = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| WorldError::Format("bad resolution".into()))?;
                resolution = Some(v);
            }
            Some("size") => {
                let w: usize = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| WorldError::Format("bad size".into()))?;
                let h: usize = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| WorldError::Format("bad size".into()))?;
                size = Some((w, h));
            }
            Some("origin") => {
                let x: f64 = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| WorldError::Format("bad origin".into()))?;
                let y: f64 = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| WorldError::Format("bad origin".into()))?;
                origin = Some((x, y));
            }
            Some("data") => break,
            Some(k) => return Err(WorldError::Format(format!("unknown header key {k:?}"))),
            None => continue,
        }
    }
    let resolution = resolution.ok_or_else(|| WorldError::Format("missing resolution".into()))?;
    let (width, height) = size.ok_or_else(|| WorldError::Format("missing size".into()))?;
    let (ox, oy) = origin.ok_or_else(|| WorldError::Format("missing origin".into()))?;

    let mut cells = Vec::with_capacity(width * height);
    for iy in 0..height {
        let line = lines
            .next()
            .ok_or_else(|| WorldError::Format(format!("missing data row {iy}")))?;
        let mut count = 0usize;
        let mut row_len = 0usize;
        for ch in line.trim().chars() {
            if let Some(d) = ch.to_digit(10) {
                count = count * 10 + d as usize;
            } else if let Some(cell) = decode(ch) {
                if count == 0 {
                    return Err(WorldError::Format(format!(
                        "row {iy}: run without a count"
                    )));
                }
                for _ in 0..count {
                    cells.push(cell);
                }
                row_len += count;
                count = 0;
            } else {
                return Err(WorldError::Format(format!("row {iy}: bad char {ch:?}")));
            }
        }
        if count != 0 {
            return Err(WorldError::Format(format!("row {iy}: dangling count")));
        }
        if row_len != width {
            return Err(WorldError::Format(format!(
                "row {iy}: {row_len} cells, expected {width}"
            )));
        }
    }
    GridMap::from_parts(
        F::from_f64(resolution),
        width,
        height,
        Vector2::new(F::from_f64(ox), F::from_f64(oy)),
        cells,
    )
}

pub fn read_map<F: Real>(path: &Path) -> Result<GridMap<F>, WorldError> {
    read_map_str(&std::fs::read_to_string(path)?)
}
