//! Seeded batches of independent trials.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::harness::metrics::MetricsRow;
use crate::harness::scenario::ScenarioFile;
use crate::harness::sim::{run_trial, SimOptions};
use crate::{Error, Result};

/// Batch file: one template, a list of connector counts and a list of seeds.
/// Every (connectors, seed) pair is one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchFile {
    /// Scenario template, relative to the batch file.
    pub scenario: PathBuf,
    #[serde(default)]
    pub connectors: Vec<usize>,
    #[serde(default)]
    pub seeds: Vec<u64>,
}

/// A loaded batch.
#[derive(Debug, Clone)]
pub struct Batch {
    pub template: ScenarioFile,
    pub connectors: Vec<usize>,
    pub seeds: Vec<u64>,
}

impl Batch {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: BatchFile = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let template = ScenarioFile::load(base.join(&file.scenario))?;
        Ok(Self {
            template,
            connectors: file.connectors,
            seeds: file.seeds,
        })
    }

    pub fn len(&self) -> usize {
        self.connectors.len() * self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Runs one trial of the batch. Instantiation failures and faults end up in
/// the `fault` column.
pub fn run_one(template: &ScenarioFile, connectors: usize, seed: u64) -> MetricsRow {
    let file = template.with_connectors(connectors);
    match file.instantiate(seed) {
        Ok(sc) => {
            let out = run_trial(&sc, SimOptions::default());
            let fault = match (&out.fault, out.metrics.completed) {
                (Some(e), _) => e.to_string(),
                (None, false) => "timeout".to_string(),
                (None, true) => String::new(),
            };
            MetricsRow::new(&sc.name, sc.robots.len(), sc.num_connectors, seed, &out.metrics, fault)
        }
        Err(e) => {
            let m = crate::harness::metrics::TrialMetrics {
                completion_time: 0.0,
                mean_explorer_distance: 0.0,
                max_stretch: 0.0,
                mean_lambda2: 0.0,
                min_lambda2: 0.0,
                min_interrobot_dist: 0.0,
                min_obstacle_clearance: 0.0,
                completed: false,
            };
            MetricsRow::new(&file.name, 0, connectors, seed, &m, e.to_string())
        }
    }
}

/// Runs the batch on `jobs` worker threads. Rows come back sorted by
/// (scenario, seed, connectors) whatever the completion order.
pub fn run_batch(batch: &Batch, jobs: usize) -> Result<Vec<MetricsRow>> {
    let trials: Vec<(usize, u64)> = batch
        .connectors
        .iter()
        .flat_map(|&c| batch.seeds.iter().map(move |&s| (c, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let mut rows: Vec<MetricsRow> =
        pool.install(|| trials.par_iter().map(|&(c, s)| run_one(&batch.template, c, s)).collect());
    rows.sort_by(|a, b| {
        (a.scenario.as_str(), a.seed, a.num_connectors).cmp(&(b.scenario.as_str(), b.seed, b.num_connectors))
    });
    Ok(rows)
}

pub fn write_rows<W: std::io::Write>(out: W, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(MetricsRow::header())?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_csv(path: impl AsRef<Path>, rows: &[MetricsRow]) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_rows(f, rows)
}

pub fn read_rows<R: std::io::Read>(input: R) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<MetricsRow>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_rows(f)
}
