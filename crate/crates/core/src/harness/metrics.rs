use serde::{Deserialize, Serialize};

/// Summary of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    /// Time at which the last dwell finished (or the time the run stopped).
    pub completion_time: f64,
    /// Mean distance traveled by the robots that had at least one target.
    pub mean_explorer_distance: f64,
    /// Largest distance between two explorers at any instant.
    pub max_stretch: f64,
    /// Time average of λ₂.
    pub mean_lambda2: f64,
    pub min_lambda2: f64,
    pub min_interrobot_dist: f64,
    pub min_obstacle_clearance: f64,
    pub completed: bool,
}

impl TrialMetrics {
    pub const COLUMNS: [&'static str; 8] = [
        "completion_time",
        "mean_explorer_distance",
        "max_stretch",
        "mean_lambda2",
        "min_lambda2",
        "min_interrobot_dist",
        "min_obstacle_clearance",
        "completed",
    ];

    /// Numeric value of a metric column (`completed` maps to 0/1).
    pub fn value(&self, column: &str) -> Option<f64> {
        Some(match column {
            "completion_time" => self.completion_time,
            "mean_explorer_distance" => self.mean_explorer_distance,
            "max_stretch" => self.max_stretch,
            "mean_lambda2" => self.mean_lambda2,
            "min_lambda2" => self.min_lambda2,
            "min_interrobot_dist" => self.min_interrobot_dist,
            "min_obstacle_clearance" => self.min_obstacle_clearance,
            "completed" => f64::from(u8::from(self.completed)),
            _ => return None,
        })
    }
}

/// One line of the Monte Carlo CSV: the trial key followed by the metrics in
/// field order and the fault description (empty when the run was clean).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub num_robots: usize,
    pub num_connectors: usize,
    pub seed: u64,
    pub completion_time: f64,
    pub mean_explorer_distance: f64,
    pub max_stretch: f64,
    pub mean_lambda2: f64,
    pub min_lambda2: f64,
    pub min_interrobot_dist: f64,
    pub min_obstacle_clearance: f64,
    pub completed: bool,
    pub fault: String,
}

impl MetricsRow {
    pub fn new(scenario: &str, num_robots: usize, num_connectors: usize, seed: u64, m: &TrialMetrics, fault: String) -> Self {
        Self {
            scenario: scenario.to_string(),
            num_robots,
            num_connectors,
            seed,
            completion_time: m.completion_time,
            mean_explorer_distance: m.mean_explorer_distance,
            max_stretch: m.max_stretch,
            mean_lambda2: m.mean_lambda2,
            min_lambda2: m.min_lambda2,
            min_interrobot_dist: m.min_interrobot_dist,
            min_obstacle_clearance: m.min_obstacle_clearance,
            completed: m.completed,
            fault,
        }
    }

    pub fn metrics(&self) -> TrialMetrics {
        TrialMetrics {
            completion_time: self.completion_time,
            mean_explorer_distance: self.mean_explorer_distance,
            max_stretch: self.max_stretch,
            mean_lambda2: self.mean_lambda2,
            min_lambda2: self.min_lambda2,
            min_interrobot_dist: self.min_interrobot_dist,
            min_obstacle_clearance: self.min_obstacle_clearance,
            completed: self.completed,
        }
    }

    pub fn header() -> Vec<&'static str> {
        let mut h = vec!["scenario", "num_robots", "num_connectors", "seed"];
        h.extend(TrialMetrics::COLUMNS);
        h.push("fault");
        h
    }
}

/// Running accumulators of the engine.
#[derive(Debug, Clone)]
pub(crate) struct MetricsAccumulator {
    explorers: Vec<usize>,
    traveled: Vec<f64>,
    lambda_integral: f64,
    duration: f64,
    pub(crate) min_lambda2: f64,
    pub(crate) max_stretch: f64,
    pub(crate) min_interrobot: f64,
    pub(crate) min_clearance: f64,
}

impl MetricsAccumulator {
    pub(crate) fn new(explorers: Vec<usize>, n: usize) -> Self {
        Self {
            explorers,
            traveled: vec![0.0; n],
            lambda_integral: 0.0,
            duration: 0.0,
            min_lambda2: f64::INFINITY,
            max_stretch: 0.0,
            min_interrobot: f64::INFINITY,
            min_clearance: f64::INFINITY,
        }
    }

    pub(crate) fn record_lambda(&mut self, lambda2: f64, dt: f64) {
        self.lambda_integral += lambda2 * dt;
        self.duration += dt;
        self.min_lambda2 = self.min_lambda2.min(lambda2);
    }

    pub(crate) fn record_motion(&mut self, i: usize, step: f64) {
        self.traveled[i] += step;
    }

    pub(crate) fn record_positions(&mut self, q: &[crate::Vec3]) {
        for (a, &i) in self.explorers.iter().enumerate() {
            for &j in &self.explorers[..a] {
                self.max_stretch = self.max_stretch.max((q[i] - q[j]).norm());
            }
        }
        for i in 0..q.len() {
            for j in 0..i {
                self.min_interrobot = self.min_interrobot.min((q[i] - q[j]).norm());
            }
        }
    }

    pub(crate) fn finish(&self, completion_time: f64, completed: bool) -> TrialMetrics {
        let mean_explorer_distance = if self.explorers.is_empty() {
            0.0
        } else {
            self.explorers.iter().map(|&i| self.traveled[i]).sum::<f64>() / self.explorers.len() as f64
        };
        let mean_lambda2 = if self.duration > 0.0 {
            self.lambda_integral / self.duration
        } else {
            self.min_lambda2
        };
        TrialMetrics {
            completion_time,
            mean_explorer_distance,
            max_stretch: self.max_stretch,
            mean_lambda2,
            min_lambda2: self.min_lambda2,
            min_interrobot_dist: self.min_interrobot,
            min_obstacle_clearance: self.min_clearance,
            completed,
        }
    }
}
