//! One trial with three robots, one of them a connector, printing metrics and the event log.
use tether_explore::harness::{run_trial, ScenarioFile, SimOptions};

const SCENARIO: &str = r#"{
  "name": "demo",
  "bounds": { "min": [0, 0, 0], "max": [12, 10, 3] },
  "obstacles": [ { "type": "box", "min": [6, 0, 0], "max": [6.2, 6, 3] } ],
  "robots": [
    { "position": [2.0, 5.0, 1.5], "targets": [ { "z": [9, 2, 1.5] } ] },
    { "position": [3.1, 5.0, 1.5], "targets": [ { "z": [4, 8, 1.5] }, { "z": [2, 2, 1.5] } ] },
    { "position": [2.0, 6.1, 1.5] }
  ]
}"#;

fn main() -> tether_explore::Result<()> {
    let sc = ScenarioFile::from_json(SCENARIO)?.instantiate(0)?;
    let out = run_trial(&sc, SimOptions { traces: true, filter: false });
    for e in &out.traces.as_ref().expect("requested").events {
        println!("{:7.2}  robot {}  {:<14} {}", e.t, e.robot, e.kind.as_str(), e.detail);
    }
    println!("{:#?}", out.metrics);
    if let Some(f) = out.fault {
        println!("fault: {f}");
    }
    Ok(())
}
