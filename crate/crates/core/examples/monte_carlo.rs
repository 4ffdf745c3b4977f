//! A small seeded batch in the empty desk-scale world, summarized per team size.
use tether_explore::harness::{montecarlo, run_batch, summarize, Batch, ScenarioFile};

fn main() -> tether_explore::Result<()> {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/empty.json");
    let batch = Batch {
        template: ScenarioFile::load(root)?,
        connectors: vec![0, 2],
        seeds: vec![1, 2, 3],
    };
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let rows = run_batch(&batch, jobs)?;
    montecarlo::write_rows(std::io::stdout(), &rows)?;
    for g in summarize(&rows)? {
        print!("{g}");
    }
    Ok(())
}
