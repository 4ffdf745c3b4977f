//! Scenario files and their instantiation into a runnable trial.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::behavior::{BehaviorParams, Target};
use crate::connectivity::{fiedler, laplacian, ConnectivityParams, WeightField};
use crate::dynamics::{BodyParams, FilterGains};
use crate::planner::astar;
use crate::world::{rasterize_inflated, Bounds, ObstacleSet, OccupancyGrid, SensingParams};
use crate::{Error, Result, Vec3};

/// Obstacle primitive of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Obstacle {
    Points { points: Vec<[f64; 3]> },
    /// Axis-aligned box, sampled on its surface.
    Box { min: [f64; 3], max: [f64; 3] },
}

/// Samples the surface of a box on a lattice no coarser than `spacing`.
pub fn sample_box(min: [f64; 3], max: [f64; 3], spacing: f64) -> Vec<Vec3> {
    let counts = [0, 1, 2].map(|k| (((max[k] - min[k]) / spacing).ceil() as usize).max(1));
    let coord = |k: usize, i: usize| {
        if max[k] <= min[k] {
            min[k]
        } else {
            min[k] + (max[k] - min[k]) * i as f64 / counts[k] as f64
        }
    };
    let mut pts = Vec::new();
    for i in 0..=counts[0] {
        for j in 0..=counts[1] {
            for k in 0..=counts[2] {
                let on_surface = i == 0 || i == counts[0] || j == 0 || j == counts[1] || k == 0 || k == counts[2];
                if on_surface {
                    pts.push(Vec3::new(coord(0, i), coord(1, j), coord(2, k)));
                }
            }
        }
    }
    pts.dedup();
    pts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    pub dt: f64,
    /// Control ticks per planning tick (and per message round).
    pub planning_period: u32,
    pub timeout: f64,
    /// Control ticks between trace samples.
    pub trace_stride: u32,
    pub r_grid: f64,
    /// Extra clearance added to the occupancy radius of the planning grid.
    pub planning_inflation: f64,
    pub filter: FilterGains,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            planning_period: 100,
            timeout: 300.0,
            trace_stride: 10,
            r_grid: 0.25,
            planning_inflation: 0.35,
            filter: FilterGains::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub z: [f64; 3],
    #[serde(default)]
    pub dwell: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub position: [f64; 3],
    #[serde(default)]
    pub targets: Vec<TargetSpec>,
}

/// Random team: explorers with the listed target counts, followed by
/// target-less connectors, all packed in a square lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Generator {
    pub explorer_targets: Vec<usize>,
    pub connectors: usize,
    /// Lattice center.
    pub start: [f64; 3],
    pub spacing: f64,
    pub z_range: [f64; 2],
    /// Minimum distance of sampled targets from the world bounds.
    pub margin: f64,
    pub dwell: f64,
}

impl Default for Generator {
    fn default() -> Self {
        Self {
            explorer_targets: vec![2, 2, 2, 1, 1, 1],
            connectors: 0,
            start: [2.5, 2.5, 1.5],
            spacing: 1.1,
            z_range: [1.0, 2.0],
            margin: 0.75,
            dwell: 3.0,
        }
    }
}

/// A scenario as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub name: String,
    pub bounds: Bounds,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub sensing: SensingParams,
    #[serde(default)]
    pub connectivity: ConnectivityParams,
    #[serde(default)]
    pub body: BodyParams,
    #[serde(default)]
    pub behavior: BehaviorParams,
    #[serde(default)]
    pub sim: SimParams,
    #[serde(default)]
    pub robots: Vec<RobotSpec>,
    #[serde(default)]
    pub generator: Option<Generator>,
}

impl ScenarioFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            path: "<inline>".into(),
            source,
        })
    }

    /// Number of generated connectors, if the team is generated.
    pub fn connectors(&self) -> usize {
        self.generator.as_ref().map_or(0, |g| g.connectors)
    }

    /// Copy with a different generated connector count.
    pub fn with_connectors(&self, connectors: usize) -> Self {
        let mut s = self.clone();
        if let Some(g) = s.generator.as_mut() {
            g.connectors = connectors;
        }
        s
    }

    fn obstacle_points(&self) -> Vec<Vec3> {
        let spacing = 0.5 * self.sim.r_grid;
        let mut pts = Vec::new();
        for o in &self.obstacles {
            match o {
                Obstacle::Points { points } => pts.extend(points.iter().map(|p| Vec3::from(*p))),
                Obstacle::Box { min, max } => pts.extend(sample_box(*min, *max, spacing)),
            }
        }
        pts
    }

    /// Resolves the file into a runnable scenario. The seed drives the
    /// target sampler only, so the same seed gives the same targets for any
    /// connector count.
    pub fn instantiate(&self, seed: u64) -> Result<Scenario> {
        self.sensing.validate()?;
        self.connectivity.validate()?;
        self.body.validate()?;
        self.behavior.validate()?;
        if !(self.sim.dt > 0.0) || self.sim.planning_period == 0 || !(self.sim.timeout > 0.0) {
            return Err(Error::InvalidParameter("sim needs dt > 0, planning_period > 0 and timeout > 0".into()));
        }
        let obstacles = Arc::new(ObstacleSet::new(self.obstacle_points(), self.sensing.r_o_outer));
        let grid = Arc::new(rasterize_inflated(
            &obstacles,
            &self.bounds,
            self.sim.r_grid,
            self.sim.r_grid + self.sim.planning_inflation,
        )?);
        let mut robots: Vec<(Vec3, Vec<Target>)> = self
            .robots
            .iter()
            .map(|r| {
                let targets = r
                    .targets
                    .iter()
                    .map(|t| Target {
                        z: t.z,
                        dwell: t.dwell.unwrap_or(3.0),
                    })
                    .collect();
                (Vec3::from(r.position), targets)
            })
            .collect();
        if let Some(g) = &self.generator {
            robots.extend(generate_team(g, &self.bounds, &obstacles, &grid, &self.sensing, seed)?);
        }
        let scenario = Scenario {
            name: self.name.clone(),
            seed,
            bounds: self.bounds,
            obstacles,
            grid,
            sensing: self.sensing,
            connectivity: self.connectivity,
            body: self.body,
            behavior: self.behavior,
            sim: self.sim,
            robots,
            num_connectors: 0,
        };
        let mut scenario = scenario;
        scenario.num_connectors = scenario.robots.iter().filter(|r| r.1.is_empty()).count();
        let l2 = scenario.initial_lambda2();
        if scenario.robots.len() >= 2 && !(l2 > scenario.connectivity.lambda2_min) {
            return Err(Error::InitiallyDisconnected(l2));
        }
        Ok(scenario)
    }
}

/// Square lattice positions around `start`, filled row by row from the
/// center outwards so that smaller teams are prefixes of larger ones.
pub fn lattice(n: usize, start: Vec3, spacing: f64) -> Vec<Vec3> {
    let mut cells: Vec<(i64, i64)> = Vec::new();
    let r = (n as f64).sqrt().ceil() as i64 + 1;
    for x in -r..=r {
        for y in -r..=r {
            cells.push((x, y));
        }
    }
    // by ring (Chebyshev radius), then angle-free lexicographic order
    cells.sort_by_key(|&(x, y)| (x.abs().max(y.abs()), y, x));
    cells
        .into_iter()
        .take(n)
        .map(|(x, y)| start + Vec3::new(x as f64, y as f64, 0.0) * spacing)
        .collect()
}

fn generate_team(
    g: &Generator,
    bounds: &Bounds,
    obstacles: &ObstacleSet,
    grid: &OccupancyGrid,
    sensing: &SensingParams,
    seed: u64,
) -> Result<Vec<(Vec3, Vec<Target>)>> {
    let explorers = g.explorer_targets.len();
    let start = Vec3::from(g.start);
    let positions = lattice(explorers + g.connectors, start, g.spacing);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = bounds.min_v() + Vec3::repeat(g.margin);
    let hi = bounds.max_v() - Vec3::repeat(g.margin);
    let start_cell = grid.nearest_free(grid.cell_of(&start));
    let mut team = Vec::new();
    for (k, &count) in g.explorer_targets.iter().enumerate() {
        let mut targets = Vec::new();
        for _ in 0..count {
            let mut tries = 0;
            let z = loop {
                tries += 1;
                if tries > 10_000 {
                    return Err(Error::InvalidParameter("could not sample a feasible target".into()));
                }
                let p = Vec3::new(
                    rng.gen_range(lo.x..hi.x),
                    rng.gen_range(lo.y..hi.y),
                    rng.gen_range(g.z_range[0]..g.z_range[1]),
                );
                if obstacles.nearest_to_point(&p, sensing.r_o_outer).is_some() || !bounds.contains(&p) {
                    continue;
                }
                let cell = grid.cell_of(&p);
                if grid.is_occupied(cell) {
                    continue;
                }
                let reachable = start_cell.is_some_and(|s| astar(grid, &grid.center(s), &grid.center(cell)).is_ok());
                if reachable {
                    break p;
                }
            };
            targets.push(Target::new(z, g.dwell));
        }
        team.push((positions[k], targets));
    }
    for p in positions.into_iter().skip(explorers) {
        team.push((p, Vec::new()));
    }
    Ok(team)
}

/// A fully resolved trial input.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub bounds: Bounds,
    pub obstacles: Arc<ObstacleSet>,
    /// Planning grid (occupancy inflated by the planning clearance).
    pub grid: Arc<OccupancyGrid>,
    pub sensing: SensingParams,
    pub connectivity: ConnectivityParams,
    pub body: BodyParams,
    pub behavior: BehaviorParams,
    pub sim: SimParams,
    /// Initial position and target list of every robot.
    pub robots: Vec<(Vec3, Vec<Target>)>,
    pub num_connectors: usize,
}

impl Scenario {
    pub fn positions(&self) -> Vec<Vec3> {
        self.robots.iter().map(|r| r.0).collect()
    }

    pub fn initial_lambda2(&self) -> f64 {
        let field = WeightField::build(&self.positions(), &self.obstacles, &self.sensing);
        fiedler(&laplacian(field.weights())).lambda2
    }

    pub fn num_targets(&self) -> usize {
        self.robots.iter().map(|r| r.1.len()).sum()
    }
}
