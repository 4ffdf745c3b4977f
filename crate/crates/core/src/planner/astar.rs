use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::world::{Cell, OccupancyGrid};
use crate::{Error, Result, Vec3};

/// Cell path returned by [`astar`]. Consecutive cells are 26-neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub cells: Vec<Cell>,
    /// Cell centers of `cells`.
    pub waypoints: Vec<Vec3>,
    pub cell_size: f64,
    /// Path cost in metres.
    pub cost: f64,
}

impl GridPath {
    /// Path through arbitrary points, for callers that post-process grid
    /// paths (or build one by hand).
    pub fn from_points(waypoints: Vec<Vec3>, cell_size: f64) -> Self {
        let cost = waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        Self {
            cells: Vec::new(),
            waypoints,
            cell_size,
            cost,
        }
    }
}

const SQRT2: f64 = std::f64::consts::SQRT_2;
const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Number of axes that change, which is also the squared step length in
/// cell units.
pub(crate) fn step_kind(a: Cell, b: Cell) -> usize {
    (0..3).filter(|&k| a[k] != b[k]).count()
}

pub(crate) fn step_length(kind: usize) -> f64 {
    match kind {
        1 => 1.0,
        2 => SQRT2,
        3 => SQRT3,
        _ => 0.0,
    }
}

/// Exact cost of a cell sequence: the count of each step type decides the
/// value, so equal-cost paths give bit-identical results.
pub fn cell_path_cost(cells: &[Cell], cell_size: f64) -> f64 {
    let mut counts = [0u64; 4];
    for w in cells.windows(2) {
        counts[step_kind(w[0], w[1])] += 1;
    }
    (counts[1] as f64 + counts[2] as f64 * SQRT2 + counts[3] as f64 * SQRT3) * cell_size
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    g: f64,
    idx: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on f, then prefer deeper nodes, then lower index
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest 26-connected cell path from the cell of `start` to the cell of
/// `goal`, with Euclidean step costs and the Euclidean heuristic.
pub fn astar(grid: &OccupancyGrid, start: &Vec3, goal: &Vec3) -> Result<GridPath> {
    let s = grid.cell_of(start);
    let g = grid.cell_of(goal);
    for (c, p) in [(s, start), (g, goal)] {
        if grid.is_occupied(c) {
            return Err(Error::OccupiedEndpoint([p.x, p.y, p.z]));
        }
    }
    let cells = astar_cells(grid, s, g).ok_or(Error::NoPath {
        start: [start.x, start.y, start.z],
        goal: [goal.x, goal.y, goal.z],
    })?;
    Ok(GridPath {
        waypoints: cells.iter().map(|&c| grid.center(c)).collect(),
        cost: cell_path_cost(&cells, grid.cell_size),
        cell_size: grid.cell_size,
        cells,
    })
}

fn heuristic(a: Cell, b: Cell) -> f64 {
    let d: f64 = (0..3).map(|k| (a[k] as f64 - b[k] as f64).powi(2)).sum();
    d.sqrt()
}

fn astar_cells(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Option<Vec<Cell>> {
    let n = grid.len();
    let mut g_cost = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let si = grid.index(start);
    let gi = grid.index(goal);
    g_cost[si] = 0.0;
    let mut open = BinaryHeap::new();
    open.push(Open {
        f: heuristic(start, goal),
        g: 0.0,
        idx: si,
    });
    while let Some(Open { idx, .. }) = open.pop() {
        if closed[idx] {
            continue;
        }
        if idx == gi {
            let mut path = vec![grid.cell_at(idx)];
            let mut cur = idx;
            while cur != si {
                cur = parent[cur];
                path.push(grid.cell_at(cur));
            }
            path.reverse();
            return Some(path);
        }
        closed[idx] = true;
        let cell = grid.cell_at(idx);
        for nb in grid.neighbors26(cell) {
            let ni = grid.index(nb);
            if closed[ni] || grid.is_occupied(nb) {
                continue;
            }
            let cand = g_cost[idx] + step_length(step_kind(cell, nb));
            if cand < g_cost[ni] {
                g_cost[ni] = cand;
                parent[ni] = idx;
                open.push(Open {
                    f: cand + heuristic(nb, goal),
                    g: cand,
                    idx: ni,
                });
            }
        }
    }
    None
}
