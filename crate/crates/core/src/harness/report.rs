//! CSV and JSON reports of trial records with per-group aggregates.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::protocol::{ExperimentConfig, TrialRecord};
use crate::error::{Error, Result};

/// Metric columns, in report order.
pub const METRICS: [&str; 5] = ["overlap", "beta_corr", "train_error", "test_error", "time_s"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Mean and sample standard deviation over the records that have a value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Aggregate {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self {
            mean,
            std,
            count: values.len(),
        })
    }
}

fn metric(r: &TrialRecord, name: &str) -> Option<f64> {
    match name {
        "overlap" => r.overlap,
        "beta_corr" => r.beta_corr,
        "train_error" => r.train_error,
        "test_error" => r.test_error,
        "time_s" => r.time_s,
        _ => None,
    }
}

/// Group key, then metric name, then its aggregate.
pub type Aggregates = BTreeMap<String, BTreeMap<String, Aggregate>>;

pub fn aggregate(records: &[TrialRecord]) -> Aggregates {
    let mut groups: BTreeMap<String, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.group()).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(key, recs)| {
            let metrics = METRICS
                .iter()
                .filter_map(|&m| {
                    let values: Vec<f64> = recs.iter().filter_map(|r| metric(r, m)).collect();
                    Aggregate::of(&values).map(|a| (m.to_string(), a))
                })
                .collect();
            (key, metrics)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialRecord>,
    pub aggregates: Aggregates,
}

impl Report {
    pub fn new(config: ExperimentConfig, trials: Vec<TrialRecord>) -> Result<Self> {
        if trials.is_empty() {
            return Err(Error::Config("report needs at least one record".into()));
        }
        let aggregates = aggregate(&trials);
        Ok(Self {
            config,
            trials,
            aggregates,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// One row per trial, then one row per group holding the metric means.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "kind", "group", "trial", "repeat", "algorithm", "n", "sigma", "seed_ratio",
            "num_seeds", "trial_seed", "recovery_feasible",
        ];
        header.extend(METRICS);
        header.extend(["converged", "stages", "inner_iterations", "objective", "count", "error"]);
        w.write_record(&header)?;

        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let flag = |v: Option<bool>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.trials {
            let mut row = vec![
                "trial".to_string(),
                r.group(),
                r.trial.to_string(),
                r.repeat.to_string(),
                r.algorithm.to_string(),
                r.n.to_string(),
                opt(r.sigma),
                opt(r.seed_ratio),
                r.num_seeds.to_string(),
                r.trial_seed.to_string(),
                flag(r.recovery_feasible),
            ];
            row.extend(METRICS.iter().map(|m| opt(metric(r, m))));
            row.extend([
                flag(r.converged),
                r.stages.to_string(),
                r.inner_iterations.to_string(),
                opt(r.objective),
                String::new(),
                r.error.clone().unwrap_or_default(),
            ]);
            w.write_record(&row)?;
        }

        for (key, metrics) in &self.aggregates {
            let members: Vec<&TrialRecord> = self.trials.iter().filter(|r| &r.group() == key).collect();
            let first = members[0];
            let common = |f: &dyn Fn(&TrialRecord) -> String| {
                let v = f(first);
                if members.iter().all(|r| f(r) == v) { v } else { String::new() }
            };
            let mut row = vec![
                "aggregate".to_string(),
                key.clone(),
                String::new(),
                String::new(),
                first.algorithm.to_string(),
                common(&|r| r.n.to_string()),
                opt(first.sigma),
                opt(first.seed_ratio),
                common(&|r| r.num_seeds.to_string()),
                String::new(),
                common(&|r| flag(r.recovery_feasible)),
            ];
            row.extend(METRICS.iter().map(|m| opt(metrics.get(*m).map(|a| a.mean))));
            row.extend([
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                members.len().to_string(),
                String::new(),
            ]);
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Json => self.to_json(),
        }
    }
}

/// Writes `report` to `path`.
pub fn emit_report(report: &Report, path: &Path, format: ReportFormat) -> Result<()> {
    std::fs::write(path, report.render(format)?)?;
    Ok(())
}
