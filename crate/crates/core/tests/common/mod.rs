//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use tether_explore::connectivity::{fiedler, laplacian, WeightField};
use tether_explore::world::{Cell, ObstacleSet, OccupancyGrid, SensingParams};
use tether_explore::Vec3;

/// Plain Dijkstra over the free 26-neighbourhood; returns the cell path.
pub fn dijkstra(grid: &OccupancyGrid, s: Cell, g: Cell) -> Option<Vec<Cell>> {
    #[derive(PartialEq)]
    struct Item(f64, usize);
    impl Eq for Item {}
    impl Ord for Item {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
        }
    }
    impl PartialOrd for Item {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    let d = grid.dims;
    let idx = |c: Cell| (c[2] * d[1] + c[1]) * d[0] + c[0];
    let cell = |i: usize| [i % d[0], (i / d[0]) % d[1], i / (d[0] * d[1])];
    let n = d[0] * d[1] * d[2];
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[idx(s)] = 0.0;
    heap.push(Item(0.0, idx(s)));
    while let Some(Item(du, u)) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        if u == idx(g) {
            break;
        }
        let c = cell(u);
        for dx in -1i64..=1 {
            for dy in -1i64..=1 {
                for dz in -1i64..=1 {
                    if (dx, dy, dz) == (0, 0, 0) {
                        continue;
                    }
                    let nb = [c[0] as i64 + dx, c[1] as i64 + dy, c[2] as i64 + dz];
                    if (0..3).any(|k| nb[k] < 0 || nb[k] >= d[k] as i64) {
                        continue;
                    }
                    let nb = [nb[0] as usize, nb[1] as usize, nb[2] as usize];
                    if grid.is_occupied(nb) {
                        continue;
                    }
                    let w = ((dx * dx + dy * dy + dz * dz) as f64).sqrt();
                    let v = idx(nb);
                    if du + w < dist[v] {
                        dist[v] = du + w;
                        prev[v] = u;
                        heap.push(Item(dist[v], v));
                    }
                }
            }
        }
    }
    if !dist[idx(g)].is_finite() {
        return None;
    }
    let mut path = vec![g];
    let mut cur = idx(g);
    while cur != idx(s) {
        cur = prev[cur];
        path.push(cell(cur));
    }
    path.reverse();
    Some(path)
}

/// BFS hop distances from `src`.
pub fn bfs(graph: &[Vec<usize>], src: usize) -> Vec<Option<usize>> {
    let mut d = vec![None; graph.len()];
    d[src] = Some(0);
    let mut q = VecDeque::from([src]);
    while let Some(u) = q.pop_front() {
        for &v in &graph[u] {
            if d[v].is_none() {
                d[v] = Some(d[u].unwrap() + 1);
                q.push_back(v);
            }
        }
    }
    d
}

/// Random connected graph: a random spanning tree plus extra edges.
pub fn random_connected_graph(rng: &mut impl Rng, n: usize, extra: f64) -> Vec<Vec<usize>> {
    let mut adj = vec![vec![false; n]; n];
    for v in 1..n {
        let u = rng.gen_range(0..v);
        adj[u][v] = true;
        adj[v][u] = true;
    }
    for u in 0..n {
        for v in 0..u {
            if rng.gen_bool(extra) {
                adj[u][v] = true;
                adj[v][u] = true;
            }
        }
    }
    // relabel so that index order says nothing about the tree structure
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let mut g = vec![Vec::new(); n];
    for u in 0..n {
        for v in 0..n {
            if adj[u][v] {
                g[perm[u]].push(perm[v]);
            }
        }
    }
    for l in &mut g {
        l.sort_unstable();
    }
    g
}

pub fn lambda2_of(q: &[Vec3], obstacles: &ObstacleSet, p: &SensingParams) -> f64 {
    fiedler(&laplacian(WeightField::build(q, obstacles, p).weights())).lambda2
}

/// Central finite-difference gradient of λ₂ for every robot.
pub fn fd_gradient(q: &[Vec3], obstacles: &ObstacleSet, p: &SensingParams, h: f64) -> Vec<Vec3> {
    (0..q.len())
        .map(|i| {
            let mut g = Vec3::zeros();
            for k in 0..3 {
                let mut a = q.to_vec();
                let mut b = q.to_vec();
                a[i][k] += h;
                b[i][k] -= h;
                g[k] = (lambda2_of(&a, obstacles, p) - lambda2_of(&b, obstacles, p)) / (2.0 * h);
            }
            g
        })
        .collect()
}

/// Forward-Euler linear consensus with one pinned node, as a closed-form
/// free reference: `x ← x − k·dt·L_g(x − x*)`.
pub fn linear_consensus(graph: &[Vec<usize>], pinned: usize, value: f64, k: f64, dt: f64, steps: usize) -> Vec<f64> {
    let n = graph.len();
    let mut x = vec![0.0; n];
    x[pinned] = value;
    for _ in 0..steps {
        let mut next = x.clone();
        for i in 0..n {
            if i != pinned {
                next[i] = x[i] + k * dt * graph[i].iter().map(|&j| x[j] - x[i]).sum::<f64>();
            }
        }
        x = next;
    }
    x
}
