//! Five-number summaries of Monte Carlo rows.

use std::collections::BTreeMap;
use std::fmt;

use crate::harness::metrics::{MetricsRow, TrialMetrics};
use crate::{Error, Result};

/// min / p25 / median / p75 / max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiveNumber {
    pub min: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub max: f64,
}

/// Linear-interpolation percentile (`p` in [0, 1]) of sorted data.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let x = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = x.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    if sorted[lo] == sorted[hi] {
        // also keeps a run of infinities from turning into NaN
        return sorted[lo];
    }
    sorted[lo] + (x - lo as f64) * (sorted[hi] - sorted[lo])
}

impl FiveNumber {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            min: v[0],
            p25: percentile(&v, 0.25),
            p50: percentile(&v, 0.5),
            p75: percentile(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub scenario: String,
    pub num_robots: usize,
    pub trials: usize,
    /// One entry per metric column, in column order.
    pub metrics: Vec<(&'static str, FiveNumber)>,
}

/// Groups rows by (scenario, robot count) and summarizes every metric.
pub fn summarize(rows: &[MetricsRow]) -> Result<Vec<GroupSummary>> {
    if rows.is_empty() {
        return Err(Error::EmptyGroup("no rows".into()));
    }
    let mut groups: BTreeMap<(String, usize), Vec<TrialMetrics>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.scenario.clone(), r.num_robots)).or_default().push(r.metrics());
    }
    groups
        .into_iter()
        .map(|((scenario, num_robots), ms)| {
            let metrics = TrialMetrics::COLUMNS
                .iter()
                .map(|&c| {
                    let vals: Vec<f64> = ms.iter().filter_map(|m| m.value(c)).collect();
                    FiveNumber::of(&vals)
                        .map(|f| (c, f))
                        .ok_or_else(|| Error::EmptyGroup(format!("{scenario}/{num_robots}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(GroupSummary {
                scenario,
                num_robots,
                trials: ms.len(),
                metrics,
            })
        })
        .collect()
}

impl fmt::Display for GroupSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} N={} ({} trials)", self.scenario, self.num_robots, self.trials)?;
        writeln!(f, "  {:<24} {:>10} {:>10} {:>10} {:>10} {:>10}", "metric", "min", "p25", "p50", "p75", "max")?;
        for (name, s) in &self.metrics {
            writeln!(
                f,
                "  {:<24} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
                name, s.min, s.p25, s.p50, s.p75, s.max
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn median_of_one_to_five() {
        let f = FiveNumber::of(&[5.0, 3.0, 1.0, 4.0, 2.0]).unwrap();
        assert_eq!(f.p50, 3.0);
        assert_eq!((f.min, f.p25, f.p75, f.max), (1.0, 2.0, 4.0, 5.0));
    }

    #[test]
    fn single_value_collapses() {
        let f = FiveNumber::of(&[7.5]).unwrap();
        assert_eq!([f.min, f.p25, f.p50, f.p75, f.max], [7.5; 5]);
    }

    #[test]
    fn infinite_values_stay_infinite() {
        let f = FiveNumber::of(&[f64::INFINITY; 4]).unwrap();
        assert_eq!([f.min, f.p25, f.p50, f.p75, f.max], [f64::INFINITY; 5]);
    }

    #[test]
    fn no_rows_is_an_error() {
        assert!(matches!(summarize(&[]), Err(Error::EmptyGroup(_))));
    }

    proptest! {
        #[test]
        fn percentiles_are_ordered(v in prop::collection::vec(-1e3f64..1e3, 1..40)) {
            let f = FiveNumber::of(&v).unwrap();
            prop_assert!(f.min <= f.p25 && f.p25 <= f.p50 && f.p50 <= f.p75 && f.p75 <= f.max);
        }
    }
}
