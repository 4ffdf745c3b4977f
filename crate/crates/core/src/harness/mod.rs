//! Scenarios, the simulation engine, metrics and Monte Carlo batches.

pub mod metrics;
pub mod montecarlo;
pub mod scenario;
pub mod sim;
pub mod summarize;

pub use metrics::{MetricsRow, TrialMetrics};
pub use montecarlo::{run_batch, Batch};
pub use scenario::{Scenario, ScenarioFile};
pub use sim::{run_trial, Monitors, SimOptions, TrialOutcome};
pub use summarize::{summarize, FiveNumber, GroupSummary};
