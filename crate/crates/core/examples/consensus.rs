//! Efficiency estimate spreading from the prime traveler over a star-plus-tail graph.
use tether_explore::behavior::{consensus_step, Role};

fn main() {
    let graph = [vec![1, 2, 3], vec![0], vec![0, 4], vec![0], vec![2]];
    let (k, dt, lambda_p) = (1.0, 1e-3, 0.8);
    let mut x = vec![0.0; graph.len()];
    for step in 0..=20_000 {
        if step % 2000 == 0 {
            let err = x.iter().map(|v: &f64| (v - lambda_p).abs()).fold(0.0, f64::max);
            println!("t = {:5.1} s  max error {err:.2e}", step as f64 * dt);
        }
        let prev = x.clone();
        for i in 0..x.len() {
            let nb: Vec<f64> = graph[i].iter().map(|&j| prev[j]).collect();
            let role = if i == 0 { Role::PrimeTraveler } else { Role::Connector };
            x[i] = consensus_step(prev[i], &nb, role, (i == 0).then_some(lambda_p), k, dt);
        }
    }
}
