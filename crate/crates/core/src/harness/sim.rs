//! The deterministic two-rate simulation loop.

use serde::Serialize;

use crate::behavior::{election_window, Event, PlanContext, Robot, Role};
use crate::connectivity::{ConnectivityField, FieldState};
use crate::dynamics::{integrate_step, ReferenceFilter};
use crate::harness::metrics::{MetricsAccumulator, TrialMetrics};
use crate::harness::scenario::Scenario;
use crate::netsim::{Network, TraceRecord};
use crate::world::neighbor_graph;
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimOptions {
    /// Collect robot, connectivity, event, message and path traces.
    pub traces: bool,
    /// Also run the reference filter on every robot's position stream.
    pub filter: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobotRecord {
    pub t: f64,
    pub robot_id: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub role_code: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConnectivityRecord {
    pub t: f64,
    pub lambda2: f64,
    pub num_edges: usize,
    pub min_interrobot_dist: f64,
    pub min_obstacle_clearance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilteredRecord {
    pub t: f64,
    pub robot_id: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub robot_id: usize,
    /// Index of the plan among this robot's plans.
    pub plan: usize,
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Traces {
    pub robots: Vec<RobotRecord>,
    pub connectivity: Vec<ConnectivityRecord>,
    pub events: Vec<Event>,
    pub messages: Vec<TraceRecord>,
    pub paths: Vec<PathRecord>,
    pub filtered: Vec<FilteredRecord>,
}

/// One anchoring episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwellRecord {
    pub robot: usize,
    pub z: Vec3,
    pub start: f64,
    pub end: Option<f64>,
    pub required: f64,
    /// Largest `‖q − z‖` seen while anchored.
    pub max_distance: f64,
}

/// Invariant monitors of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Monitors {
    /// Largest number of simultaneous prime travelers.
    pub max_primes: usize,
    /// Longest run of message rounds without a prime traveler while some
    /// secondary traveler was waiting.
    pub max_zero_prime_rounds: u64,
    pub foreign_reads: usize,
    pub degenerate_ticks: u64,
    pub ticks: u64,
    pub dwells: Vec<DwellRecord>,
}

impl Monitors {
    /// Every dwell is finished, long enough, and stayed inside the ball.
    pub fn dwells_ok(&self, r_z: f64) -> bool {
        self.dwells
            .iter()
            .all(|d| d.end.is_some_and(|e| e - d.start >= d.required - 1e-9) && d.max_distance < r_z)
    }
}

#[derive(Debug)]
pub struct TrialOutcome {
    pub metrics: TrialMetrics,
    pub fault: Option<Error>,
    pub monitors: Monitors,
    pub traces: Option<Traces>,
    pub num_robots: usize,
}

impl TrialOutcome {
    pub fn safety_fault(&self) -> bool {
        self.fault.as_ref().is_some_and(Error::is_safety_fault)
    }

    pub fn timed_out(&self) -> bool {
        self.fault.is_none() && !self.metrics.completed
    }
}

fn with_time(e: Error, t: f64) -> Error {
    match e {
        Error::ConnectivityViolation { lambda2, floor, .. } => Error::ConnectivityViolation { t, lambda2, floor },
        Error::AnchorViolation {
            robot, distance, radius, ..
        } => Error::AnchorViolation {
            t,
            robot,
            distance,
            radius,
        },
        Error::NonFiniteForce { robot, .. } => Error::NonFiniteForce { t, robot },
        other => other,
    }
}

struct Engine<'a> {
    sc: &'a Scenario,
    robots: Vec<Robot>,
    net: Network,
    field: ConnectivityField,
    events: Vec<Event>,
    acc: MetricsAccumulator,
    monitors: Monitors,
    traces: Option<Traces>,
    filters: Option<Vec<ReferenceFilter>>,
    last_clearance: f64,
    plan_counts: Vec<usize>,
    last_paths: Vec<Option<f64>>,
    open_dwell: Vec<Option<usize>>,
    zero_streak: u64,
}

impl<'a> Engine<'a> {
    fn new(sc: &'a Scenario, opts: SimOptions) -> Result<Self> {
        let n = sc.robots.len();
        let robots = sc
            .robots
            .iter()
            .enumerate()
            .map(|(i, (q, targets))| Robot::new(i, *q, targets.clone()))
            .collect::<Result<Vec<_>>>()?;
        let explorers = (0..n).filter(|&i| !sc.robots[i].1.is_empty()).collect();
        let net = if opts.traces { Network::new(n).with_trace() } else { Network::new(n) };
        let filters = if opts.filter {
            Some(sc.robots.iter().map(|r| ReferenceFilter::new(sc.sim.filter, r.0)).collect::<Result<Vec<_>>>()?)
        } else {
            None
        };
        Ok(Self {
            sc,
            robots,
            net,
            field: ConnectivityField::new(sc.sensing, sc.connectivity),
            events: Vec::new(),
            acc: MetricsAccumulator::new(explorers, n),
            monitors: Monitors::default(),
            traces: opts.traces.then(Traces::default),
            filters,
            last_clearance: f64::INFINITY,
            plan_counts: vec![0; n],
            last_paths: vec![None; n],
            open_dwell: vec![None; n],
            zero_streak: 0,
        })
    }

    fn positions(&self) -> Vec<Vec3> {
        self.robots.iter().map(|r| r.kin.q).collect()
    }

    fn graph(&self) -> Vec<Vec<usize>> {
        neighbor_graph(&self.positions(), &self.sc.obstacles, &self.sc.sensing)
    }

    /// Runs `f` on every robot with a fresh planning context.
    fn for_each_robot(&mut self, t: f64, f: impl Fn(&mut Robot, &mut PlanContext)) {
        let round = self.net.round();
        for r in self.robots.iter_mut() {
            let mut ctx = PlanContext {
                t,
                round,
                grid: &self.sc.grid,
                params: &self.sc.behavior,
                net: &mut self.net,
                events: &mut self.events,
            };
            f(r, &mut ctx);
        }
    }

    /// Plans first targets and runs the startup election on the initial
    /// graph before any motion.
    fn startup(&mut self) {
        let n = self.robots.len();
        self.for_each_robot(0.0, |r, ctx| r.startup(ctx));
        if self.robots.iter().all(|r| r.path.is_none()) {
            return;
        }
        {
            let round = self.net.round();
            let mut ctx = PlanContext {
                t: 0.0,
                round,
                grid: &self.sc.grid,
                params: &self.sc.behavior,
                net: &mut self.net,
                events: &mut self.events,
            };
            self.robots[0].host_startup(&mut ctx);
            self.robots[0].startup_round(&mut ctx);
        }
        let graph = self.graph();
        let rounds = election_window(n) + n as u64;
        for _ in 0..rounds {
            self.net.deliver(&graph);
            self.for_each_robot(0.0, |r, ctx| r.startup_round(ctx));
        }
    }

    fn record_paths(&mut self) {
        let Some(traces) = self.traces.as_mut() else { return };
        for (i, r) in self.robots.iter().enumerate() {
            let len = r.path.as_ref().map(|p| p.length());
            let changed = match (len, self.last_paths[i]) {
                (Some(a), Some(b)) => a != b,
                (Some(_), None) => true,
                _ => false,
            };
            if changed {
                let path = r.path.as_ref().expect("checked");
                for (s, p) in path.dump(self.sc.sim.r_grid) {
                    traces.paths.push(PathRecord {
                        robot_id: i,
                        plan: self.plan_counts[i],
                        s,
                        x: p.x,
                        y: p.y,
                        z: p.z,
                    });
                }
                self.plan_counts[i] += 1;
            }
            self.last_paths[i] = len;
        }
    }

    fn check_roles(&mut self) {
        let primes = self.robots.iter().filter(|r| r.role == Role::PrimeTraveler).count();
        self.monitors.max_primes = self.monitors.max_primes.max(primes);
        let waiting = self.robots.iter().any(|r| r.role == Role::SecondaryTraveler);
        if primes == 0 && waiting {
            self.zero_streak += 1;
            self.monitors.max_zero_prime_rounds = self.monitors.max_zero_prime_rounds.max(self.zero_streak);
        } else {
            self.zero_streak = 0;
        }
    }

    fn track_dwells(&mut self, t: f64) {
        for (i, r) in self.robots.iter().enumerate() {
            match (r.dwell_start, self.open_dwell[i]) {
                (Some(start), None) => {
                    let tg = r.target.expect("anchored robots have a target");
                    self.monitors.dwells.push(DwellRecord {
                        robot: i,
                        z: tg.point(),
                        start,
                        end: None,
                        required: tg.dwell,
                        max_distance: (r.kin.q - tg.point()).norm(),
                    });
                    self.open_dwell[i] = Some(self.monitors.dwells.len() - 1);
                }
                (None, Some(k)) => {
                    self.monitors.dwells[k].end = Some(t);
                    self.open_dwell[i] = None;
                }
                (Some(_), Some(k)) => {
                    let d = &mut self.monitors.dwells[k];
                    d.max_distance = d.max_distance.max((r.kin.q - d.z).norm());
                }
                (None, None) => {}
            }
        }
    }

    fn clearance(&mut self, positions: &[Vec3], wide: bool) -> f64 {
        let p = &self.sc.sensing;
        let radius = if wide { p.r_m } else { p.r_o_outer };
        let mut best = f64::INFINITY;
        for q in positions {
            if let Some(d) = self.sc.obstacles.nearest_to_point(q, radius) {
                best = best.min(d);
            }
        }
        if wide {
            self.last_clearance = best;
        }
        best
    }

    fn sample(&mut self, t: f64, state: &FieldState, positions: &[Vec3], clearance: f64) {
        let Some(traces) = self.traces.as_mut() else { return };
        for r in &self.robots {
            traces.robots.push(RobotRecord {
                t,
                robot_id: r.id,
                x: r.kin.q.x,
                y: r.kin.q.y,
                z: r.kin.q.z,
                vx: r.kin.v.x,
                vy: r.kin.v.y,
                vz: r.kin.v.z,
                role_code: r.role.code(),
            });
        }
        let mut min_d = f64::INFINITY;
        for i in 0..positions.len() {
            for j in 0..i {
                min_d = min_d.min((positions[i] - positions[j]).norm());
            }
        }
        traces.connectivity.push(ConnectivityRecord {
            t,
            lambda2: state.lambda2,
            num_edges: state.num_edges,
            min_interrobot_dist: min_d,
            min_obstacle_clearance: clearance,
        });
    }

    fn run(&mut self) -> (TrialMetrics, Option<Error>) {
        let sc = self.sc;
        let dt = sc.sim.dt;
        let n = self.robots.len();
        self.startup();
        self.record_paths();
        self.check_roles();
        let max_ticks = (sc.sim.timeout / dt).round() as u64;
        let period = u64::from(sc.sim.planning_period);
        let stride = u64::from(sc.sim.trace_stride.max(1));
        let mut completion = None;
        let mut hats = vec![0.0; n];
        let mut fault = None;
        let mut t = 0.0;
        for tick in 0..=max_ticks {
            t = tick as f64 * dt;
            let positions = self.positions();
            let state = match self.field.evaluate(&positions, &sc.obstacles) {
                Ok(s) => s,
                Err(e) => {
                    fault = Some(with_time(e, t));
                    break;
                }
            };
            if state.degenerate {
                self.monitors.degenerate_ticks += 1;
            }
            self.acc.record_lambda(state.lambda2, if tick == 0 { 0.0 } else { dt });
            self.acc.record_positions(&positions);
            let planning = tick % period == 0;
            let clearance = if planning {
                self.clearance(&positions, true)
            } else {
                self.clearance(&positions, false).min(self.last_clearance)
            };
            self.acc.min_clearance = self.acc.min_clearance.min(clearance);
            if planning {
                if tick > 0 {
                    let graph = self.graph();
                    self.net.deliver(&graph);
                    self.for_each_robot(t, |r, ctx| r.plan_tick(ctx));
                    self.check_roles();
                    self.record_paths();
                }
                self.track_dwells(t);
                if self.robots.iter().all(Robot::is_done) {
                    completion = Some(t);
                    if tick % stride == 0 {
                        self.sample(t, &state, &positions, clearance);
                    }
                    break;
                }
            }
            if tick == max_ticks {
                break;
            }
            if tick % stride == 0 {
                self.sample(t, &state, &positions, clearance);
            }

            let graph = self.graph();
            for r in &self.robots {
                hats[r.id] = r.lambda_hat;
            }
            let mut step_fault = None;
            for i in 0..n {
                let nb: Vec<f64> = graph[i].iter().map(|&j| hats[j]).collect();
                let view = state.local_view(i);
                let r = &mut self.robots[i];
                let cmd = match r.control_tick(&view, &nb, &sc.behavior, sc.body.f_max, dt) {
                    Ok(c) => c,
                    Err(e) => {
                        step_fault = Some(e);
                        break;
                    }
                };
                let f_lambda = view.force + cmd.anchor;
                match integrate_step(&r.kin, &cmd.travel, &f_lambda, &sc.body, dt) {
                    Ok(k) => {
                        self.acc.record_motion(i, (k.q - r.kin.q).norm());
                        r.kin = k;
                    }
                    Err(Error::NonFiniteForce { t, .. }) => {
                        step_fault = Some(Error::NonFiniteForce { t, robot: i });
                        break;
                    }
                    Err(e) => {
                        step_fault = Some(e);
                        break;
                    }
                }
            }
            if let Some(e) = step_fault {
                fault = Some(with_time(e, t));
                break;
            }
            if !planning {
                self.track_dwells(t);
            }
            if let Some(filters) = self.filters.as_mut() {
                let record = tick % stride == 0;
                for (i, f) in filters.iter_mut().enumerate() {
                    let out = f.step(&self.robots[i].kin.q, dt);
                    if record {
                        if let Some(tr) = self.traces.as_mut() {
                            tr.filtered.push(FilteredRecord {
                                t,
                                robot_id: i,
                                x: out.q.x,
                                y: out.q.y,
                                z: out.q.z,
                                vx: out.dq.x,
                                vy: out.dq.y,
                                vz: out.dq.z,
                                ax: out.ddq.x,
                                ay: out.ddq.y,
                                az: out.ddq.z,
                            });
                        }
                    }
                }
            }
            self.monitors.ticks += 1;
        }
        self.monitors.foreign_reads = self.net.foreign_reads();
        let completed = completion.is_some() && fault.is_none();
        let metrics = self.acc.finish(completion.unwrap_or(t), completed);
        (metrics, fault)
    }
}

/// Runs one full trial.
pub fn run_trial(sc: &Scenario, opts: SimOptions) -> TrialOutcome {
    let n = sc.robots.len();
    let mut engine = match Engine::new(sc, opts) {
        Ok(e) => e,
        Err(e) => {
            return TrialOutcome {
                metrics: MetricsAccumulator::new(Vec::new(), n).finish(0.0, false),
                fault: Some(e),
                monitors: Monitors::default(),
                traces: None,
                num_robots: n,
            }
        }
    };
    let (metrics, fault) = engine.run();
    let mut traces = engine.traces.take();
    if let Some(tr) = traces.as_mut() {
        tr.events = std::mem::take(&mut engine.events);
        tr.messages = engine.net.trace().map(<[_]>::to_vec).unwrap_or_default();
    }
    TrialOutcome {
        metrics,
        fault,
        monitors: engine.monitors,
        traces,
        num_robots: n,
    }
}

fn write_table<T: Serialize>(path: &std::path::Path, rows: &[T], header: &[&str]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Serialize)]
struct EventRow<'a> {
    t: f64,
    robot_id: usize,
    event: &'static str,
    detail: &'a str,
}

impl Traces {
    /// Writes `robots.csv`, `connectivity.csv`, `events.csv`,
    /// `messages.csv`, `paths.csv` and, if present, `filtered.csv`.
    pub fn write(&self, dir: impl AsRef<std::path::Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_table(
            &dir.join("robots.csv"),
            &self.robots,
            &["t", "robot_id", "x", "y", "z", "vx", "vy", "vz", "role_code"],
        )?;
        write_table(
            &dir.join("connectivity.csv"),
            &self.connectivity,
            &["t", "lambda2", "num_edges", "min_interrobot_dist", "min_obstacle_clearance"],
        )?;
        let events: Vec<EventRow> = self
            .events
            .iter()
            .map(|e| EventRow {
                t: e.t,
                robot_id: e.robot,
                event: e.kind.as_str(),
                detail: &e.detail,
            })
            .collect();
        write_table(&dir.join("events.csv"), &events, &["t", "robot_id", "event", "detail"])?;
        write_table(&dir.join("messages.csv"), &self.messages, &["round", "src", "dst", "kind", "ttl"])?;
        write_table(&dir.join("paths.csv"), &self.paths, &["robot_id", "plan", "s", "x", "y", "z"])?;
        if !self.filtered.is_empty() {
            write_table(
                &dir.join("filtered.csv"),
                &self.filtered,
                &["t", "robot_id", "x", "y", "z", "vx", "vy", "vz", "ax", "ay", "az"],
            )?;
        }
        Ok(())
    }
}
