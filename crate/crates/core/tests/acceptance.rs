//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use tether_explore::behavior::{adaptive_gain, consensus_step, run_election, Role};
use tether_explore::connectivity::{fiedler, laplacian, WeightField, WeightMatrix};
use tether_explore::dynamics::{step_settling_time, FilterGains};
use tether_explore::harness::scenario::lattice;
use tether_explore::harness::{run_trial, Scenario, ScenarioFile, SimOptions, TrialOutcome};
use tether_explore::planner::{astar, cell_path_cost};
use tether_explore::world::{neighbor_graph, Bounds, ObstacleSet, OccupancyGrid, SensingParams};
use tether_explore::{Error, Vec3};

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: u32, ok: bool, text: String) {
        if !ok {
            self.failed += 1;
        }
        println!("criterion {id:>2}: {}  {text}", if ok { "PASS" } else { "FAIL" });
    }
}

fn scenario_file(name: &str) -> ScenarioFile {
    let path = format!("{}/../../scenarios/{name}", env!("CARGO_MANIFEST_DIR"));
    ScenarioFile::load(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

struct Trial {
    sc: Scenario,
    out: TrialOutcome,
}

fn run_suite(specs: Vec<(ScenarioFile, u64)>) -> Vec<Trial> {
    specs
        .into_par_iter()
        .map(|(f, seed)| {
            let sc = f.instantiate(seed).unwrap_or_else(|e| panic!("{} seed {seed}: {e}", f.name));
            let out = run_trial(&sc, SimOptions::default());
            Trial { sc, out }
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Connectivity and clearance monitors of one trial; `None` when clean.
fn safety_violation(t: &Trial) -> Option<String> {
    let (m, s) = (&t.out.metrics, &t.sc);
    if let Some(e) = t.out.fault.as_ref().filter(|e| e.is_safety_fault()) {
        return Some(e.to_string());
    }
    if !(m.min_lambda2 > s.connectivity.lambda2_min) {
        return Some(format!("min lambda2 {}", m.min_lambda2));
    }
    if !(m.min_interrobot_dist > s.sensing.r_c) {
        return Some(format!("inter-robot distance {}", m.min_interrobot_dist));
    }
    if !(m.min_obstacle_clearance > s.sensing.r_o) {
        return Some(format!("obstacle clearance {}", m.min_obstacle_clearance));
    }
    None
}

fn completeness_violation(t: &Trial) -> Option<String> {
    let (m, mon, s) = (&t.out.metrics, &t.out.monitors, &t.sc);
    let n = s.robots.len() as u64;
    if let Some(e) = &t.out.fault {
        return Some(e.to_string());
    }
    if !m.completed {
        return Some(format!("timeout at {} s", m.completion_time));
    }
    if mon.dwells.len() != s.num_targets() || !mon.dwells_ok(s.behavior.r_z) {
        return Some(format!("{} of {} dwells valid", mon.dwells.len(), s.num_targets()));
    }
    if mon.max_primes > 1 {
        return Some(format!("{} simultaneous primes", mon.max_primes));
    }
    if mon.max_zero_prime_rounds > n - 1 {
        return Some(format!("{} rounds without a prime", mon.max_zero_prime_rounds));
    }
    None
}

fn describe(trials: &[&Trial], f: impl Fn(&Trial) -> Option<String>) -> (usize, String) {
    let bad: Vec<String> = trials
        .iter()
        .filter_map(|t| f(t).map(|why| format!("{}/N={}/seed {}: {why}", t.sc.name, t.sc.robots.len(), t.sc.seed)))
        .collect();
    let first = bad.iter().take(3).cloned().collect::<Vec<_>>().join("; ");
    (bad.len(), first)
}

fn criteria_1_5_6(r: &mut Report) {
    let walled = scenario_file("walled.json");
    let empty = scenario_file("empty.json");
    let walled_specs: Vec<_> = [0, 4]
        .into_iter()
        .flat_map(|c| (1..=20).map(move |s| (c, s)))
        .map(|(c, s)| (walled.with_connectors(c), s))
        .collect();
    let empty_specs: Vec<_> = [0, 2, 4]
        .into_iter()
        .flat_map(|c| (1..=10).map(move |s| (c, s)))
        .map(|(c, s)| (empty.with_connectors(c), s))
        .collect();

    let t0 = Instant::now();
    let walled_trials = run_suite(walled_specs);
    let walled_time = t0.elapsed().as_secs_f64();
    let empty_trials = run_suite(empty_specs);
    let suite_time = t0.elapsed().as_secs_f64();
    let all: Vec<&Trial> = walled_trials.iter().chain(&empty_trials).collect();

    let (bad, first) = describe(&all, safety_violation);
    let min_l2 = all.iter().map(|t| t.out.metrics.min_lambda2).fold(f64::INFINITY, f64::min);
    let min_rr = all.iter().map(|t| t.out.metrics.min_interrobot_dist).fold(f64::INFINITY, f64::min);
    let min_ro = all
        .iter()
        .map(|t| t.out.metrics.min_obstacle_clearance - t.sc.sensing.r_o)
        .fold(f64::INFINITY, f64::min);
    r.line(
        1,
        bad == 0 && all.len() >= 60 && suite_time < 600.0,
        format!(
            "connectivity invariant: {} trials, {bad} violating; min λ₂ {min_l2:.4}, min inter-robot {min_rr:.3} m, \
             min clearance margin {min_ro:.3} m; {suite_time:.0} s (budget 600 s) {first}",
            all.len()
        ),
    );

    let (bad, first) = describe(&all, completeness_violation);
    let worst_zero = all.iter().map(|t| t.out.monitors.max_zero_prime_rounds).max().unwrap_or(0);
    r.line(
        5,
        bad == 0,
        format!(
            "completeness: {} of {} trials complete with every dwell valid and one prime; \
             longest prime-free streak {worst_zero} rounds {first}",
            all.len() - bad,
            all.len()
        ),
    );

    let times = |c: usize| -> Vec<f64> {
        walled_trials
            .iter()
            .filter(|t| t.sc.num_connectors == c)
            .map(|t| if t.out.metrics.completed { t.out.metrics.completion_time } else { f64::INFINITY })
            .collect()
    };
    let (m0, m4) = (median(times(0)), median(times(4)));
    let pairs = times(0).len().min(times(4).len());
    r.line(
        6,
        pairs >= 20 && m4 < m0 && walled_time < 900.0,
        format!("connector benefit (walled, {pairs} paired seeds): median {m0:.1} s with 0 connectors, {m4:.1} s with 4; {walled_time:.0} s (budget 900 s)"),
    );
}

fn criterion_2(r: &mut Report) {
    let start = Instant::now();
    let p = SensingParams::outdoor();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 100 {
        let column: Vec<Vec3> = {
            let c = Vec3::new(rng.gen_range(1.0..5.0), rng.gen_range(1.0..5.0), 0.0);
            (0..12).map(|k| c + Vec3::new(0.0, 0.0, 0.25 * k as f64)).collect()
        };
        let obstacles = ObstacleSet::new(column, p.r_o_outer);
        let q: Vec<Vec3> = (0..5)
            .map(|_| Vec3::new(rng.gen_range(0.0..6.0), rng.gen_range(0.0..6.0), rng.gen_range(1.0..2.0)))
            .collect();
        let field = WeightField::build(&q, &obstacles, &p);
        let eig = fiedler(&laplacian(field.weights()));
        if eig.lambda2 < 1e-3 || eig.eigengap() <= 1e-3 {
            continue;
        }
        let g = field.gradients(&eig);
        let norm = g.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
        if norm < 1e-6 {
            // every weight on a plateau: the gradient is exactly zero
            continue;
        }
        let fd = common::fd_gradient(&q, &obstacles, &p, 1e-6);
        let err = g.iter().zip(&fd).map(|(a, b)| (a - b).norm_squared()).sum::<f64>().sqrt() / norm;
        worst = worst.max(err);
        checked += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    r.line(
        2,
        worst < 1e-4 && secs < 30.0,
        format!("λ₂ gradient vs central differences: {checked} configurations, worst relative error {worst:.2e} (< 1e-4); {secs:.1} s"),
    );
}

fn unit_graph(n: usize, edges: &[(usize, usize)]) -> WeightMatrix {
    let mut m = nalgebra::DMatrix::zeros(n, n);
    for &(a, b) in edges {
        m[(a, b)] = 1.0;
        m[(b, a)] = 1.0;
    }
    WeightMatrix::from_matrix(m).unwrap()
}

fn criterion_3(r: &mut Report) {
    let l = |w: &WeightMatrix| fiedler(&laplacian(w)).lambda2;
    let k3 = l(&unit_graph(3, &[(0, 1), (1, 2), (0, 2)]));
    let p3 = l(&unit_graph(3, &[(0, 1), (1, 2)]));
    let split = l(&unit_graph(3, &[(0, 1)]));
    let ok = (k3 - 3.0).abs() < 1e-9 && (p3 - 1.0).abs() < 1e-9 && split.abs() < 1e-9;
    r.line(3, ok, format!("spectral oracle: K₃ {k3:.12}, P₃ {p3:.12}, disconnected {split:.1e}"));
}

fn criterion_4(r: &mut Report) {
    let sigmas = [1.0, 2.0, 3.0, 5.0, 10.0];
    let mut ok = true;
    let mut worst_identity = 0.0f64;
    for &s in &sigmas {
        for a in 0..=100 {
            let theta = a as f64 / 100.0;
            ok &= adaptive_gain(theta, 1.0, s) == 1.0 && adaptive_gain(theta, 0.0, s) == 0.0;
            let mut prev = f64::NEG_INFINITY;
            for b in 0..=100 {
                let lh = b as f64 / 100.0;
                let rho = adaptive_gain(theta, lh, s);
                ok &= rho >= prev && (0.0..=1.0).contains(&rho);
                prev = rho;
                if s == 1.0 {
                    worst_identity = worst_identity.max((rho - lh).abs());
                }
            }
        }
    }
    ok &= worst_identity < 1e-12;
    r.line(
        4,
        ok,
        format!("gain algebra on 101×101×5 grid: endpoints exact, σ=1 identity error {worst_identity:.1e}, monotone in Λ̂"),
    );
}

fn criterion_7(r: &mut Report) {
    // the startup graphs of the desk-scale teams
    let k = 1.0;
    let dt = 1e-3;
    let steps = (20.0 / k / dt) as usize;
    let mut worst = 0.0f64;
    let mut graphs = 0;
    for (name, sizes) in [("walled.json", vec![6, 10]), ("empty.json", vec![6, 8, 10])] {
        let f = scenario_file(name);
        let g = f.generator.clone().unwrap();
        let obstacles = f.instantiate(1).unwrap().obstacles;
        for n in sizes {
            let q = lattice(n, Vec3::from(g.start), g.spacing);
            let graph = neighbor_graph(&q, &obstacles, &f.sensing);
            let (prime, lp) = (0, 0.8);
            let mut x = vec![0.0; n];
            for _ in 0..steps {
                let prev = x.clone();
                for i in 0..n {
                    let nb: Vec<f64> = graph[i].iter().map(|&j| prev[j]).collect();
                    let role = if i == prime { Role::PrimeTraveler } else { Role::Connector };
                    x[i] = consensus_step(prev[i], &nb, role, (i == prime).then_some(lp), k, dt);
                }
            }
            worst = worst.max(x.iter().map(|v| (v - lp).abs()).fold(0.0, f64::max));
            graphs += 1;
        }
    }
    r.line(7, worst < 1e-3, format!("consensus: {graphs} team graphs, max error {worst:.2e} after 20/k_Λ s (< 1e-3)"));
}

fn criterion_8(r: &mut Report) {
    let t = step_settling_time(FilterGains::default(), 1e-4, 5.0);
    let ok = t.is_some_and(|t| (0.24..=0.36).contains(&t));
    r.line(8, ok, format!("reference filter 5% settling time {t:?} s (0.3 s ± 20%)"));
}

fn criterion_9(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut matched, mut paths) = (0, 0);
    for _ in 0..50 {
        let dims = [0; 3].map(|_| rng.gen_range(2..=12usize));
        let b = Bounds::new([0.0; 3], dims.map(|d| d as f64 * 0.25));
        let mut g = OccupancyGrid::free(&b, 0.25).unwrap();
        let density = rng.gen_range(0.05..0.4);
        for i in 0..g.len() {
            if rng.gen_bool(density) {
                g.set_occupied(g.cell_at(i), true);
            }
        }
        let s = g.cell_at(rng.gen_range(0..g.len()));
        let t = g.cell_at(rng.gen_range(0..g.len()));
        g.set_occupied(s, false);
        g.set_occupied(t, false);
        let oracle = common::dijkstra(&g, s, t);
        let same = match (astar(&g, &g.center(s), &g.center(t)), &oracle) {
            (Ok(p), Some(o)) => {
                paths += 1;
                p.cost == cell_path_cost(o, g.cell_size)
            }
            (Err(Error::NoPath { .. }), None) => true,
            _ => false,
        };
        matched += usize::from(same);
    }
    r.line(9, matched == 50, format!("A* vs Dijkstra: {matched}/50 grids match exactly ({paths} with a path)"));
}

fn criterion_10(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut ok = 0;
    let mut slowest = 0;
    for _ in 0..50 {
        let n = rng.gen_range(2..=10);
        let graph = common::random_connected_graph(&mut rng, n, 0.2);
        let host = rng.gen_range(0..n);
        let mut cands: Vec<(usize, f64)> = Vec::new();
        for i in 0..n {
            if rng.gen_bool(0.7) {
                cands.push((i, f64::from(rng.gen_range(0..5u8)) * 0.5));
            }
        }
        let oracle = cands.iter().min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))).map(|c| c.0);
        let out = run_election(&graph, host, &cands);
        let window = 2 * (n as u64 - 1);
        slowest = slowest.max(out.decided);
        if out.winner == oracle && out.decided <= window && out.collected.len() == cands.len() {
            ok += 1;
        }
    }
    r.line(10, ok == 50, format!("election: {ok}/50 random graphs elect the centralized minimum within 2(N−1) rounds (latest decision round {slowest})"));
}

fn main() {
    let mut r = Report { failed: 0 };
    criteria_1_5_6(&mut r);
    criterion_2(&mut r);
    criterion_3(&mut r);
    criterion_4(&mut r);
    criterion_7(&mut r);
    criterion_8(&mut r);
    criterion_9(&mut r);
    criterion_10(&mut r);
    println!("{} criteria failed", r.failed);
    if r.failed > 0 {
        std::process::exit(1);
    }
}
