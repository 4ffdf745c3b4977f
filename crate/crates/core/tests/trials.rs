use tether_explore::harness::{run_trial, ScenarioFile, SimOptions};

const SINGLE: &str = r#"{
  "name": "single",
  "bounds": { "min": [0, 0, 0], "max": [15, 20, 3] },
  "sensing": { "r_s": 6.0, "r_s_inner": 2.5, "r_o": 0.75, "r_o_outer": 1.75, "r_c": 1.0, "r_c_outer": 2.5, "r_m": 6.0 },
  "robots": [ { "position": [5, 5, 1.5], "targets": [ { "z": [10, 5, 1.5], "dwell": 3.0 } ] } ]
}"#;

const TRIO: &str = r#"{
  "name": "trio",
  "bounds": { "min": [0, 0, 0], "max": [12, 10, 3] },
  "obstacles": [ { "type": "box", "min": [6, 0, 0], "max": [6.2, 6, 3] } ],
  "robots": [
    { "position": [2.0, 5.0, 1.5], "targets": [ { "z": [9, 2, 1.5] } ] },
    { "position": [3.1, 5.0, 1.5], "targets": [ { "z": [4, 8, 1.5] }, { "z": [2, 2, 1.5] } ] },
    { "position": [2.0, 6.1, 1.5] }
  ]
}"#;

#[test]
fn team_without_targets_is_done_at_once() {
    let mut f = ScenarioFile::from_json(TRIO).unwrap();
    for r in &mut f.robots {
        r.targets.clear();
    }
    let out = run_trial(&f.instantiate(0).unwrap(), SimOptions::default());
    assert!(out.fault.is_none());
    assert!(out.metrics.completed);
    assert_eq!(out.metrics.completion_time, 0.0);
}

#[test]
fn single_robot_reaches_a_target_five_metres_away() {
    // 5 m at cruise speed plus the 3 s dwell; the dwell clock starts inside
    // the anchor ball, so arrival is slightly earlier than 5 s
    let out = run_trial(&ScenarioFile::from_json(SINGLE).unwrap().instantiate(0).unwrap(), SimOptions::default());
    assert!(out.metrics.completed);
    assert!((out.metrics.completion_time - 8.0).abs() <= 1.0, "{}", out.metrics.completion_time);
    assert!((out.metrics.mean_explorer_distance - 5.0).abs() < 0.5);
}

#[test]
fn repeated_runs_are_bit_identical() {
    let sc = ScenarioFile::from_json(TRIO).unwrap().instantiate(3).unwrap();
    let opts = SimOptions { traces: true, filter: false };
    let a = run_trial(&sc, opts);
    let b = run_trial(&sc, opts);
    assert_eq!(a.metrics, b.metrics);
    let (ta, tb) = (a.traces.unwrap(), b.traces.unwrap());
    assert_eq!(ta.robots, tb.robots);
    assert_eq!(ta.messages, tb.messages);
}

#[test]
fn walled_trio_completes_every_dwell_safely() {
    let sc = ScenarioFile::from_json(TRIO).unwrap().instantiate(0).unwrap();
    let out = run_trial(&sc, SimOptions::default());
    assert!(out.fault.is_none(), "{:?}", out.fault);
    assert!(out.metrics.completed);
    assert_eq!(out.monitors.dwells.len(), 3);
    assert!(out.monitors.dwells_ok(sc.behavior.r_z));
    assert!(out.monitors.max_primes <= 1);
    assert!(out.metrics.min_interrobot_dist > sc.sensing.r_c);
    assert!(out.metrics.min_obstacle_clearance > sc.sensing.r_o);
    assert!(out.metrics.min_lambda2 > sc.connectivity.lambda2_min);
}

#[test]
fn traces_have_the_documented_columns() {
    let sc = ScenarioFile::from_json(TRIO).unwrap().instantiate(0).unwrap();
    let out = run_trial(&sc, SimOptions { traces: true, filter: true });
    let dir = tempfile::tempdir().unwrap();
    out.traces.unwrap().write(dir.path()).unwrap();
    let header = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header("robots.csv"), "t,robot_id,x,y,z,vx,vy,vz,role_code");
    assert_eq!(header("connectivity.csv"), "t,lambda2,num_edges,min_interrobot_dist,min_obstacle_clearance");
    assert_eq!(header("events.csv"), "t,robot_id,event,detail");
    assert_eq!(header("messages.csv"), "round,src,dst,kind,ttl");
    assert_eq!(header("paths.csv"), "robot_id,plan,s,x,y,z");
    assert!(header("filtered.csv").starts_with("t,robot_id,x,y,z"));
}

#[test]
fn disconnected_start_is_rejected() {
    let mut f = ScenarioFile::from_json(TRIO).unwrap();
    f.robots[2].position = [11.0, 9.0, 1.5];
    assert!(f.instantiate(0).is_err());
}
