//! Static environment and the sensing model.
//!
//! Obstacles are a point cloud. Two robots see each other when they are
//! closer than `r_s` and the segment between them keeps a clearance of at
//! least `r_o` from every obstacle point.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Bounds {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    pub fn min_v(&self) -> Vec3 {
        Vec3::from(self.min)
    }

    pub fn max_v(&self) -> Vec3 {
        Vec3::from(self.max)
    }

    pub fn is_degenerate(&self) -> bool {
        (0..3).any(|k| !(self.max[k] > self.min[k]) || !self.min[k].is_finite() || !self.max[k].is_finite())
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }
}

/// Sensing radii. Field names follow the usual notation: `r_s` is the
/// maximum robot-sensing range and `r_s_inner` the radius below which an
/// edge has full weight; likewise for obstacle clearance (`r_o`,
/// `r_o_outer`) and inter-robot distance (`r_c`, `r_c_outer`). `r_m` is the
/// range of the obstacle sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingParams {
    pub r_s: f64,
    pub r_s_inner: f64,
    pub r_o: f64,
    pub r_o_outer: f64,
    pub r_c: f64,
    pub r_c_outer: f64,
    pub r_m: f64,
}

impl SensingParams {
    /// Indoor parameter set used by the desk-scale scenarios.
    pub fn office() -> Self {
        Self {
            r_s: 2.5,
            r_s_inner: 1.1,
            r_o: 0.25,
            r_o_outer: 0.6,
            r_c: 0.8,
            r_c_outer: 1.1,
            r_m: 2.5,
        }
    }

    /// Outdoor parameter set (empty space and town scenes).
    pub fn outdoor() -> Self {
        Self {
            r_s: 6.0,
            r_s_inner: 2.5,
            r_o: 0.75,
            r_o_outer: 1.75,
            r_c: 1.0,
            r_c_outer: 2.5,
            r_m: 6.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 < self.r_s_inner
            && self.r_s_inner < self.r_s
            && 0.0 < self.r_o
            && self.r_o < self.r_o_outer
            && 0.0 < self.r_c
            && self.r_c < self.r_c_outer
            && self.r_o < self.r_m;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("sensing radii out of order: {self:?}")))
        }
    }
}

impl Default for SensingParams {
    fn default() -> Self {
        Self::office()
    }
}

/// Distance from `o` to the segment `a + ς(b − a)`, `ς ∈ [0, 1]`, together
/// with the minimising `ς`.
pub fn point_segment_distance(a: &Vec3, b: &Vec3, o: &Vec3) -> (f64, f64) {
    // evaluate in a canonical endpoint order so swapping a and b is exact
    let swapped = (b.x, b.y, b.z) < (a.x, a.y, a.z);
    if swapped {
        let (d, t) = segment_distance_ordered(b, a, o);
        return (d, 1.0 - t);
    }
    segment_distance_ordered(a, b, o)
}

fn segment_distance_ordered(a: &Vec3, b: &Vec3, o: &Vec3) -> (f64, f64) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((o - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((a + ab * t - o).norm(), t)
}

/// Bucket grid over the obstacle points for radius queries.
#[derive(Debug, Clone)]
struct SpatialIndex {
    origin: Vec3,
    cell: f64,
    dims: [usize; 3],
    buckets: Vec<Vec<u32>>,
}

const MAX_INDEX_CELLS: usize = 1 << 21;

impl SpatialIndex {
    fn build(points: &[Vec3], cell_hint: f64) -> Option<Self> {
        if points.is_empty() {
            return None;
        }
        let mut lo = points[0];
        let mut hi = points[0];
        for p in points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let mut cell = cell_hint.max(1e-3);
        let dims = loop {
            let d = [0, 1, 2].map(|k| (((hi[k] - lo[k]) / cell).floor() as usize) + 1);
            if d[0] * d[1] * d[2] <= MAX_INDEX_CELLS {
                break d;
            }
            cell *= 2.0;
        };
        let mut buckets = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
        let mut idx = Self {
            origin: lo,
            cell,
            dims,
            buckets: Vec::new(),
        };
        for (n, p) in points.iter().enumerate() {
            let c = idx.cell_of(p);
            buckets[idx.flat(c)].push(n as u32);
        }
        idx.buckets = buckets;
        Some(idx)
    }

    fn cell_of(&self, p: &Vec3) -> [usize; 3] {
        [0, 1, 2].map(|k| {
            let v = ((p[k] - self.origin[k]) / self.cell).floor();
            (v.max(0.0) as usize).min(self.dims[k] - 1)
        })
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    /// Visits every point whose bucket intersects the box `[lo, hi]`.
    fn for_each_in_box(&self, lo: &Vec3, hi: &Vec3, mut f: impl FnMut(usize)) {
        for k in 0..3 {
            if hi[k] < self.origin[k] || lo[k] > self.origin[k] + self.cell * self.dims[k] as f64 {
                return;
            }
        }
        let a = self.cell_of(lo);
        let b = self.cell_of(hi);
        for z in a[2]..=b[2] {
            for y in a[1]..=b[1] {
                let row = (z * self.dims[1] + y) * self.dims[0];
                for x in a[0]..=b[0] {
                    for &n in &self.buckets[row + x] {
                        f(n as usize);
                    }
                }
            }
        }
    }
}

/// Closest obstacle point to a segment within a search radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentHit {
    pub distance: f64,
    /// Position of the obstacle point.
    pub obstacle: Vec3,
    /// Segment parameter of the closest point, in `[0, 1]`.
    pub param: f64,
}

/// The obstacle point cloud. Immutable after construction.
#[derive(Debug, Clone, Default)]
pub struct ObstacleSet {
    points: Vec<Vec3>,
    index: Option<SpatialIndex>,
}

impl ObstacleSet {
    /// Builds the set with a bucket size tuned for queries of radius about
    /// `query_radius`.
    pub fn new(points: Vec<Vec3>, query_radius: f64) -> Self {
        let index = SpatialIndex::build(&points, query_radius);
        Self { points, index }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Closest obstacle point to the segment `a–b` among those within
    /// `radius` of it, optionally restricted to points closer than
    /// `sensor_range` to at least one endpoint.
    pub fn nearest_to_segment(
        &self,
        a: &Vec3,
        b: &Vec3,
        radius: f64,
        sensor_range: Option<f64>,
    ) -> Option<SegmentHit> {
        let index = self.index.as_ref()?;
        let pad = Vec3::repeat(radius);
        let lo = a.inf(b) - pad;
        let hi = a.sup(b) + pad;
        let mut best: Option<SegmentHit> = None;
        index.for_each_in_box(&lo, &hi, |n| {
            let o = &self.points[n];
            if let Some(rm) = sensor_range {
                let rm2 = rm * rm;
                if (o - a).norm_squared() >= rm2 && (o - b).norm_squared() >= rm2 {
                    return;
                }
            }
            let (d, t) = point_segment_distance(a, b, o);
            if d <= radius && best.is_none_or(|h| d < h.distance) {
                best = Some(SegmentHit {
                    distance: d,
                    obstacle: *o,
                    param: t,
                });
            }
        });
        best
    }

    /// Distance from `p` to the nearest obstacle point, searching only
    /// within `radius`.
    pub fn nearest_to_point(&self, p: &Vec3, radius: f64) -> Option<f64> {
        self.nearest_to_segment(p, p, radius, None).map(|h| h.distance)
    }
}

/// Minimum distance between the segment `qi–qj` and any obstacle point;
/// `f64::INFINITY` for an empty obstacle set.
pub fn line_of_sight_clearance(qi: &Vec3, qj: &Vec3, obstacles: &ObstacleSet) -> f64 {
    obstacles
        .points()
        .iter()
        .map(|o| point_segment_distance(qi, qj, o).0)
        .fold(f64::INFINITY, f64::min)
}

fn sees(qi: &Vec3, qj: &Vec3, obstacles: &ObstacleSet, p: &SensingParams) -> bool {
    if (qj - qi).norm() >= p.r_s {
        return false;
    }
    // A hit strictly inside r_o breaks line of sight; clearance exactly r_o is allowed.
    match obstacles.nearest_to_segment(qi, qj, p.r_o, None) {
        Some(hit) => hit.distance >= p.r_o,
        None => true,
    }
}

/// Indices of the robots that robot `i` can sense.
pub fn neighbors(i: usize, positions: &[Vec3], obstacles: &ObstacleSet, p: &SensingParams) -> Vec<usize> {
    (0..positions.len())
        .filter(|&j| j != i && sees(&positions[i], &positions[j], obstacles, p))
        .collect()
}

/// Adjacency lists of the whole sensing graph, computed once per pair.
pub fn neighbor_graph(positions: &[Vec3], obstacles: &ObstacleSet, p: &SensingParams) -> Vec<Vec<usize>> {
    let n = positions.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if sees(&positions[i], &positions[j], obstacles, p) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    adj
}

/// Uniform 3D occupancy grid. Cell `(x, y, z)` has its center at
/// `origin + (idx + ½)·cell_size`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub cell_size: f64,
    pub origin: Vec3,
    pub dims: [usize; 3],
    occupied: Vec<bool>,
}

pub type Cell = [usize; 3];

impl OccupancyGrid {
    pub fn free(bounds: &Bounds, cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(Error::NonPositiveCellSize(cell_size));
        }
        if bounds.is_degenerate() {
            return Err(Error::DegenerateBounds);
        }
        let dims = [0, 1, 2].map(|k| (((bounds.max[k] - bounds.min[k]) / cell_size).ceil() as usize).max(1));
        Ok(Self {
            cell_size,
            origin: bounds.min_v(),
            dims,
            occupied: vec![false; dims[0] * dims[1] * dims[2]],
        })
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn index(&self, c: Cell) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    pub fn cell_at(&self, idx: usize) -> Cell {
        let x = idx % self.dims[0];
        let y = (idx / self.dims[0]) % self.dims[1];
        let z = idx / (self.dims[0] * self.dims[1]);
        [x, y, z]
    }

    pub fn center(&self, c: Cell) -> Vec3 {
        self.origin + Vec3::new(c[0] as f64 + 0.5, c[1] as f64 + 0.5, c[2] as f64 + 0.5) * self.cell_size
    }

    /// Cell containing `p`; points outside the grid map to the nearest
    /// border cell.
    pub fn cell_of(&self, p: &Vec3) -> Cell {
        [0, 1, 2].map(|k| {
            let v = ((p[k] - self.origin[k]) / self.cell_size).floor();
            (v.max(0.0) as usize).min(self.dims[k] - 1)
        })
    }

    pub fn is_occupied(&self, c: Cell) -> bool {
        self.occupied[self.index(c)]
    }

    pub fn set_occupied(&mut self, c: Cell, value: bool) {
        let i = self.index(c);
        self.occupied[i] = value;
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    /// In-grid 26-neighbourhood of `c`.
    pub fn neighbors26(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        let d = self.dims;
        (0..27).filter_map(move |k| {
            if k == 13 {
                return None;
            }
            let off = [k % 3, (k / 3) % 3, k / 9];
            let mut out = [0usize; 3];
            for a in 0..3 {
                let v = c[a] as isize + off[a] as isize - 1;
                if v < 0 || v >= d[a] as isize {
                    return None;
                }
                out[a] = v as usize;
            }
            Some(out)
        })
    }

    /// Nearest free cell to `c` by breadth-first search over the
    /// 26-neighbourhood.
    pub fn nearest_free(&self, c: Cell) -> Option<Cell> {
        if !self.is_occupied(c) {
            return Some(c);
        }
        let mut seen = vec![false; self.len()];
        let mut queue = std::collections::VecDeque::from([c]);
        seen[self.index(c)] = true;
        let target = self.center(c);
        while !queue.is_empty() {
            // Expand one BFS layer and pick the geometrically closest free cell in it.
            let mut layer_best: Option<(f64, Cell)> = None;
            for _ in 0..queue.len() {
                let cur = queue.pop_front().expect("non-empty");
                for nb in self.neighbors26(cur) {
                    let i = self.index(nb);
                    if seen[i] {
                        continue;
                    }
                    seen[i] = true;
                    if !self.occupied[i] {
                        let d = (self.center(nb) - target).norm();
                        if layer_best.is_none_or(|(bd, _)| d < bd) {
                            layer_best = Some((d, nb));
                        }
                    }
                    queue.push_back(nb);
                }
            }
            if let Some((_, cell)) = layer_best {
                return Some(cell);
            }
        }
        None
    }
}

/// Rasterises the obstacle set: a cell is occupied when some obstacle
/// point lies within `cell_size` of its center (closed boundary).
pub fn rasterize(obstacles: &ObstacleSet, bounds: &Bounds, cell_size: f64) -> Result<OccupancyGrid> {
    rasterize_inflated(obstacles, bounds, cell_size, cell_size)
}

/// Like [`rasterize`] but with an arbitrary occupancy radius, used to build
/// clearance-inflated planning grids.
pub fn rasterize_inflated(obstacles: &ObstacleSet, bounds: &Bounds, cell_size: f64, radius: f64) -> Result<OccupancyGrid> {
    let mut grid = OccupancyGrid::free(bounds, cell_size)?;
    // rounding slack of one cell on top of the radius
    let reach = (radius / cell_size).ceil() as isize + 1;
    for o in obstacles.points() {
        let rel = (o - grid.origin) / cell_size;
        let base = [0, 1, 2].map(|k| (rel[k] - 0.5).round() as isize);
        for dz in -reach..=reach {
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    let c = [base[0] + dx, base[1] + dy, base[2] + dz];
                    if (0..3).any(|k| c[k] < 0 || c[k] >= grid.dims[k] as isize) {
                        continue;
                    }
                    let cell = [c[0] as usize, c[1] as usize, c[2] as usize];
                    if (grid.center(cell) - o).norm() <= radius {
                        grid.set_occupied(cell, true);
                    }
                }
            }
        }
    }
    Ok(grid)
}
