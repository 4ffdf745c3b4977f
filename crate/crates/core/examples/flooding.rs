//! Round-by-round flooding over a random-looking graph.
use tether_explore::netsim::flood;

fn main() {
    let graph = vec![vec![1, 2], vec![0, 3], vec![0, 3, 4], vec![1, 2, 5], vec![2], vec![3, 6], vec![5]];
    let rep = flood(&graph, 0, 6);
    for (i, r) in rep.received.iter().enumerate() {
        println!("robot {i}: {}", r.map_or("never".into(), |k| format!("round {k}")));
    }
    println!("complete: {}, rounds used: {}", rep.complete(), rep.rounds_used);
}
