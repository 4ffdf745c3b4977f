//! Flooding election on a line of six robots hosted at one end.
use tether_explore::behavior::{election_window, run_election};

fn main() {
    let n: usize = 6;
    let graph: Vec<Vec<usize>> = (0..n)
        .map(|i| [i.checked_sub(1), (i + 1 < n).then_some(i + 1)].into_iter().flatten().collect())
        .collect();
    let candidates = [(1, 4.0), (3, 2.5), (5, 2.5)];
    let out = run_election(&graph, 0, &candidates);
    println!("window {} rounds", election_window(n));
    println!("winner {:?}, decided in round {}, known to all by round {:?}", out.winner, out.decided, out.announced);
    println!("collected {:?}", out.collected);
}
