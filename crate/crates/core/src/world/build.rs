//! Grid-map construction from 3D point clouds: points inside a height band
//! are projected onto the ground plane and binned into cells.

use super::{Cell, GridMap, WorldError};
use crate::geometry::{Rect, Vector2};
use crate::scalar::Real;

/// A raw 3D point (meters).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3<F> {
    pub x: F,
    pub y: F,
    pub z: F,
}

impl<F: Real> Point3<F> {
    pub fn new(x: F, y: F, z: F) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Projection parameters.
#[derive(Debug, Clone, Copy)]
pub struct MapBuildOptions<F> {
    /// Height band `[z_min, z_max]`; points outside are ignored. The low end
    /// keeps hand tools and debris on the floor visible, the high end covers
    /// the robot's height envelope.
    pub z_band: (F, F),
    pub resolution: F,
    pub bounds: Rect<F>,
    /// A cell becomes occupied once this many in-band points land in it.
    pub min_hits: usize,
}

/// Build result plus input diagnostics.
#[derive(Debug, Clone)]
pub struct MapBuild<F> {
    pub map: GridMap<F>,
    /// Non-finite points skipped.
    pub skipped_points: usize,
    /// Finite points that fell outside the bounds or height band.
    pub out_of_range_points: usize,
}

/// Project `points` into an occupancy grid. A cell is occupied iff at least
/// `min_hits` points with z inside the band land in it; all other in-bounds
/// cells are free.
pub fn map_from_points<F: Real>(
    points: &[Point3<F>],
    opts: &MapBuildOptions<F>,
) -> Result<MapBuild<F>, WorldError> {
    let (z_min, z_max) = opts.z_band;
    if z_min >= z_max {
        return Err(WorldError::EmptyZBand(z_min.as_f64(), z_max.as_f64()));
    }
    if opts.bounds.is_degenerate() {
        return Err(WorldError::EmptyBounds);
    }
    let map = GridMap::empty(opts.bounds, opts.resolution)?;
    let mut hits = vec![0usize; map.width() * map.height()];
    let mut skipped = 0usize;
    let mut out_of_range = 0usize;
    for pt in points {
        if !pt.is_finite() {
            skipped += 1;
            continue;
        }
        if pt.z < z_min || pt.z > z_max {
            out_of_range += 1;
            continue;
        }
        match map.world_to_cell(Vector2::new(pt.x, pt.y)) {
            Some((ix, iy)) => hits[iy * map.width() + ix] += 1,
            None => out_of_range += 1,
        }
    }
    let min_hits = opts.min_hits.max(1);
    let mut map = map;
    for iy in 0..map.height() {
        for ix in 0..map.width() {
            if hits[iy * map.width() + ix] >= min_hits {
                map.set_cell(ix, iy, Cell::Occupied);
            }
        }
    }
    Ok(MapBuild {
        map,
        skipped_points: skipped,
        out_of_range_points: out_of_range,
    })
}

/// Parse a whitespace-separated `x y z` point cloud, one point per line.
/// Blank lines and `#` comments are allowed. Returns the 1-based line number
/// with the first malformed entry on error.
pub fn parse_point_cloud<F: Real>(text: &str) -> Result<Vec<Point3<F>>, WorldError> {
    let mut points = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut next = |name: &str| -> Result<F, WorldError> {
            let tok = it.next().ok_or_else(|| {
                WorldError::Format(format!("line {}: missing {name}", idx + 1))
            })?;
            let v: f64 = tok.parse().map_err(|_| {
                WorldError::Format(format!("line {}: bad {name} value {tok:?}", idx + 1))
            })?;
            Ok(F::from_f64(v))
        };
        let (x, y, z) = (next("x")?, next("y")?, next("z")?);
        if it.next().is_some() {
            return Err(WorldError::Format(format!(
                "line {}: trailing tokens",
                idx + 1
            )));
        }
        points.push(Point3::new(x, y, z));
    }
    Ok(points)
}
