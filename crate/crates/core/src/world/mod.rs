//! Static environment: occupancy grid of the site layout plus the spatial
//! queries used by planning and collision checking.

mod build;
mod io;
mod state;

pub use build::{map_from_points, parse_point_cloud, MapBuild, MapBuildOptions, Point3};
pub use io::{read_map, read_map_str, write_map, write_map_string};
pub use state::{JointState, RobotState, WorkerState};

use crate::geometry::{Rect, Vector2};
use crate::scalar::{real, Real};
use thiserror::Error;

/// Per-cell occupancy state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Free,
    Occupied,
    Unknown,
}

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("degenerate bounds: min must be strictly below max on both axes")]
    EmptyBounds,
    #[error("resolution must be positive, got {0}")]
    BadResolution(f64),
    #[error("z band is empty: z_min {0} >= z_max {1}")]
    EmptyZBand(f64, f64),
    #[error("point {0:?} outside map bounds")]
    OutOfBounds((f64, f64)),
    #[error("map file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Occupancy grid with resolution metadata. Immutable after construction;
/// shared read-only across parallel rollouts.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap<F> {
    resolution: F,
    width: usize,
    height: usize,
    origin: Vector2<F>,
    cells: Vec<Cell>,
}

impl<F: Real> GridMap<F> {
    /// An all-free map covering `bounds` at `resolution`. Cell (0,0) sits at
    /// the bounds' min corner; width/height round up so the bounds are covered.
    pub fn empty(bounds: Rect<F>, resolution: F) -> Result<Self, WorldError> {
        if bounds.is_degenerate() {
            return Err(WorldError::EmptyBounds);
        }
        if resolution <= F::zero() {
            return Err(WorldError::BadResolution(resolution.as_f64()));
        }
        let width = ((bounds.max.x - bounds.min.x) / resolution)
            .ceil()
            .as_f64() as usize;
        let height = ((bounds.max.y - bounds.min.y) / resolution)
            .ceil()
            .as_f64() as usize;
        let (width, height) = (width.max(1), height.max(1));
        Ok(Self {
            resolution,
            width,
            height,
            origin: bounds.min,
            cells: vec![Cell::Free; width * height],
        })
    }

    pub fn from_parts(
        resolution: F,
        width: usize,
        height: usize,
        origin: Vector2<F>,
        cells: Vec<Cell>,
    ) -> Result<Self, WorldError> {
        if resolution <= F::zero() {
            return Err(WorldError::BadResolution(resolution.as_f64()));
        }
        if cells.len() != width * height || width == 0 || height == 0 {
            return Err(WorldError::Format(format!(
                "cell count {} does not match {}x{}",
                cells.len(),
                width,
                height
            )));
        }
        Ok(Self {
            resolution,
            width,
            height,
            origin,
            cells,
        })
    }

    pub fn resolution(&self) -> F {
        self.resolution
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn origin(&self) -> Vector2<F> {
        self.origin
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn bounds(&self) -> Rect<F> {
        Rect::new(
            self.origin,
            self.origin
                + Vector2::new(
                    self.resolution * real(self.width as f64),
                    self.resolution * real(self.height as f64),
                ),
        )
    }

    #[inline]
    pub fn cell(&self, ix: usize, iy: usize) -> Cell {
        self.cells[iy * self.width + ix]
    }

    pub(crate) fn set_cell(&mut self, ix: usize, iy: usize, c: Cell) {
        self.cells[iy * self.width + ix] = c;
    }

    /// Grid index of the cell containing `p`, if in bounds.
    pub fn world_to_cell(&self, p: Vector2<F>) -> Option<(usize, usize)> {
        let rel = p - self.origin;
        if rel.x < F::zero() || rel.y < F::zero() {
            return None;
        }
        let ix = (rel.x / self.resolution).floor().as_f64() as usize;
        let iy = (rel.y / self.resolution).floor().as_f64() as usize;
        // Points exactly on the max edge belong to the last cell.
        let ix = if ix == self.width && rel.x <= self.resolution * real(self.width as f64) {
            self.width - 1
        } else {
            ix
        };
        let iy = if iy == self.height && rel.y <= self.resolution * real(self.height as f64) {
            self.height - 1
        } else {
            iy
        };
        (ix < self.width && iy < self.height).then_some((ix, iy))
    }

    /// World coordinates of the center of cell `(ix, iy)`.
    pub fn cell_center(&self, ix: usize, iy: usize) -> Vector2<F> {
        let half = real::<F>(0.5);
        self.origin
            + Vector2::new(
                (real::<F>(ix as f64) + half) * self.resolution,
                (real::<F>(iy as f64) + half) * self.resolution,
            )
    }

    /// World-space rectangle of cell `(ix, iy)`.
    pub fn cell_rect(&self, ix: usize, iy: usize) -> Rect<F> {
        let min = self.origin
            + Vector2::new(
                real::<F>(ix as f64) * self.resolution,
                real::<F>(iy as f64) * self.resolution,
            );
        Rect::new(min, min + Vector2::new(self.resolution, self.resolution))
    }

    /// True when the cell blocks traversal. Unknown is treated as occupied:
    /// the robot refuses to gamble on unmapped space.
    #[inline]
    pub fn is_blocked(&self, ix: usize, iy: usize) -> bool {
        !matches!(self.cell(ix, iy), Cell::Free)
    }

    /// Blocked test for a world point; anything outside the map is blocked.
    pub fn is_blocked_at(&self, p: Vector2<F>) -> bool {
        match self.world_to_cell(p) {
            Some((ix, iy)) => self.is_blocked(ix, iy),
            None => true,
        }
    }

    pub fn occupied_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.iter_indices(Cell::Occupied)
    }

    fn iter_indices(&self, kind: Cell) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(move |(_, c)| **c == kind)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    pub fn blocked_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| !matches!(c, Cell::Free))
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    pub fn has_occupied(&self) -> bool {
        self.cells.iter().any(|c| *c == Cell::Occupied)
    }

    /// Mark every cell whose rectangle intersects `rect` as `kind`.
    pub fn stamp_rect(&mut self, rect: Rect<F>, kind: Cell) {
        for iy in 0..self.height {
            for ix in 0..self.width {
                let c = self.cell_rect(ix, iy);
                let overlap = c.min.x < rect.max.x
                    && c.max.x > rect.min.x
                    && c.min.y < rect.max.y
                    && c.max.y > rect.min.y;
                if overlap {
                    self.set_cell(ix, iy, kind);
                }
            }
        }
    }

    /// True when a disc of radius `r` swept along segment `a..b` touches a
    /// blocked cell rectangle or leaves the map. Exact segment-to-rect
    /// distances, no sampling.
    pub fn swept_disc_blocked(&self, a: Vector2<F>, b: Vector2<F>, r: F) -> bool {
        let bounds = self.bounds();
        let lo = Vector2::new(a.x.min(b.x) - r, a.y.min(b.y) - r);
        let hi = Vector2::new(a.x.max(b.x) + r, a.y.max(b.y) + r);
        if lo.x < bounds.min.x || lo.y < bounds.min.y || hi.x > bounds.max.x || hi.y > bounds.max.y
        {
            return true;
        }
        let (x0, y0) = self.world_to_cell(lo).unwrap_or((0, 0));
        let (x1, y1) = self
            .world_to_cell(hi)
            .unwrap_or((self.width - 1, self.height - 1));
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                if self.is_blocked(ix, iy)
                    && crate::geometry::segment_rect_distance(a, b, &self.cell_rect(ix, iy)) <= r
                {
                    return true;
                }
            }
        }
        false
    }

    /// True when a disc of radius `r` centered at `p` intersects a blocked
    /// cell rectangle (or leaves the map).
    pub fn disc_blocked(&self, p: Vector2<F>, r: F) -> bool {
        let b = self.bounds();
        if p.x - r < b.min.x || p.y - r < b.min.y || p.x + r > b.max.x || p.y + r > b.max.y {
            return true;
        }
        let lo = self.world_to_cell(Vector2::new(p.x - r, p.y - r));
        let hi = self.world_to_cell(Vector2::new(p.x + r, p.y + r));
        let ((x0, y0), (x1, y1)) = match (lo, hi) {
            (Some(a), Some(b)) => (a, b),
            _ => return true,
        };
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                if self.is_blocked(ix, iy) && self.cell_rect(ix, iy).distance_to_point(p) <= r {
                    return true;
                }
            }
        }
        false
    }
}

/// Dilate occupancy: a cell is occupied in the output iff some input occupied
/// cell center lies within Euclidean distance `radius` of its center. Free
/// and unknown cells outside that reach keep their input state.
pub fn inflate<F: Real>(map: &GridMap<F>, radius: F) -> GridMap<F> {
    assert!(radius >= F::zero(), "inflation radius must be >= 0");
    let mut out = map.clone();
    if radius == F::zero() {
        return out;
    }
    let r_cells = (radius / map.resolution).as_f64().floor() as i64;
    // Precompute the disc stencil once; membership uses exact center-to-center
    // distances so cells at exactly `radius` count as inside.
    let mut stencil = Vec::new();
    for dy in -r_cells..=r_cells {
        for dx in -r_cells..=r_cells {
            let d = ((dx * dx + dy * dy) as f64).sqrt();
            if real::<F>(d) * map.resolution <= radius {
                stencil.push((dx, dy));
            }
        }
    }
    for (ix, iy) in map.occupied_indices() {
        for &(dx, dy) in &stencil {
            let (nx, ny) = (ix as i64 + dx, iy as i64 + dy);
            if nx >= 0 && ny >= 0 && (nx as usize) < map.width && (ny as usize) < map.height {
                out.set_cell(nx as usize, ny as usize, Cell::Occupied);
            }
        }
    }
    out
}

/// Euclidean distance from `p` to the nearest occupied cell center, zero
/// anywhere inside an occupied cell; `F::infinity()` when the map holds no
/// occupied cell.
pub fn clearance<F: Real>(map: &GridMap<F>, p: Vector2<F>) -> Result<F, WorldError> {
    if !map.bounds().contains(p) {
        return Err(WorldError::OutOfBounds((p.x.as_f64(), p.y.as_f64())));
    }
    if let Some((ix, iy)) = map.world_to_cell(p) {
        if map.cell(ix, iy) == Cell::Occupied {
            return Ok(F::zero());
        }
    }
    let mut best = F::infinity();
    for (ix, iy) in map.occupied_indices() {
        best = best.min(map.cell_center(ix, iy).distance(p));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Rect, Vector2};
    use proptest::prelude::*;

    type V = Vector2<f64>;

    fn square_map(side_cells: usize, res: f64) -> GridMap<f64> {
        GridMap::empty(
            Rect::new(
                V::new(0.0, 0.0),
                V::new(side_cells as f64 * res, side_cells as f64 * res),
            ),
            res,
        )
        .unwrap()
    }

    #[test]
    fn world_to_cell_roundtrip() {
        let map = square_map(8, 0.5);
        assert_eq!(map.world_to_cell(V::new(1.0, 1.0)), Some((2, 2)));
        assert_eq!(map.world_to_cell(V::new(0.0, 0.0)), Some((0, 0)));
        // Max edge belongs to the last cell.
        assert_eq!(map.world_to_cell(V::new(4.0, 4.0)), Some((7, 7)));
        assert_eq!(map.world_to_cell(V::new(-0.1, 1.0)), None);
    }

    #[test]
    fn inflate_zero_radius_is_identity() {
        let mut map = square_map(10, 0.1);
        map.set_cell(3, 4, Cell::Occupied);
        map.set_cell(7, 1, Cell::Unknown);
        assert_eq!(inflate(&map, 0.0), map);
    }

    #[test]
    fn inflate_one_cell_is_plus_neighborhood() {
        // radius = 1 cell: the 4-neighborhood plus center; diagonals sit at
        // sqrt(2) * res > radius and stay free.
        let mut map = square_map(5, 1.0);
        map.set_cell(2, 2, Cell::Occupied);
        let out = inflate(&map, 1.0);
        let occupied: Vec<_> = out.occupied_indices().collect();
        assert_eq!(occupied, vec![(2, 1), (1, 2), (2, 2), (3, 2), (2, 3)]);
    }

    #[test]
    fn inflate_saturated_map_stays_saturated() {
        let mut map = square_map(4, 0.3);
        for iy in 0..4 {
            for ix in 0..4 {
                map.set_cell(ix, iy, Cell::Occupied);
            }
        }
        let out = inflate(&map, 0.7);
        assert!(out.cells().iter().all(|c| *c == Cell::Occupied));
    }

    #[test]
    fn clearance_empty_map_is_infinite() {
        let map = square_map(5, 0.2);
        assert_eq!(clearance(&map, V::new(0.5, 0.5)).unwrap(), f64::INFINITY);
    }

    #[test]
    fn clearance_zero_at_occupied_center() {
        let mut map = square_map(5, 0.2);
        map.set_cell(2, 2, Cell::Occupied);
        let c = map.cell_center(2, 2);
        assert_eq!(clearance(&map, c).unwrap(), 0.0);
    }

    #[test]
    fn clearance_out_of_bounds_errors() {
        let map = square_map(5, 0.2);
        assert!(clearance(&map, V::new(10.0, 0.0)).is_err());
    }

    proptest! {
        // clearance matches an exhaustive scan (the implementation *is* the
        // scan, so this is a guard against future optimization bugs) and the
        // "zero iff occupied" invariant holds.
        #[test]
        fn clearance_matches_bruteforce(seed in 0u64..100) {
            let mut rng = crate::seeding::rng_from(seed);
            use rand::Rng as _;
            let mut map = square_map(30, 0.1);
            for _ in 0..rng.gen_range(0..40) {
                let ix = rng.gen_range(0..30);
                let iy = rng.gen_range(0..30);
                map.set_cell(ix, iy, Cell::Occupied);
            }
            for _ in 0..100 {
                let p = V::new(rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0));
                let got = clearance(&map, p).unwrap();
                let in_occupied = map
                    .world_to_cell(p)
                    .map(|(ix, iy)| map.cell(ix, iy) == Cell::Occupied)
                    .unwrap_or(false);
                let mut want = f64::INFINITY;
                if in_occupied {
                    want = 0.0;
                } else {
                    for iy in 0..30 {
                        for ix in 0..30 {
                            if map.cell(ix, iy) == Cell::Occupied {
                                want = want.min(map.cell_center(ix, iy).distance(p));
                            }
                        }
                    }
                }
                prop_assert_eq!(got, want);
                prop_assert_eq!(got == 0.0, in_occupied);
            }
        }

        #[test]
        fn inflate_is_monotone(seed in 0u64..50, r1 in 0.0f64..0.5, r2 in 0.0f64..0.5) {
            let (r1, r2) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let mut rng = crate::seeding::rng_from(seed);
            use rand::Rng as _;
            let mut map = square_map(15, 0.1);
            for _ in 0..rng.gen_range(0..15) {
                map.set_cell(rng.gen_range(0..15), rng.gen_range(0..15), Cell::Occupied);
            }
            let a = inflate(&map, r1);
            let b = inflate(&map, r2);
            for (ca, cb) in a.cells().iter().zip(b.cells()) {
                if *ca == Cell::Occupied {
                    prop_assert_eq!(*cb, Cell::Occupied);
                }
            }
        }
    }
}
