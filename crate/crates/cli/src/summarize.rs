//! Final-round tables from regret CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{io_err, CliError, Result};
use crate::output::CSV_HEADER;

/// Final-round aggregate of one policy on one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalValue {
    pub experiment: String,
    pub alpha: f64,
    pub policy: String,
    pub metric: String,
    pub t: usize,
    pub mean: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub rows: Vec<FinalValue>,
}

impl Summary {
    /// Policies sorted by increasing final value, per (experiment, metric).
    pub fn orderings(&self) -> Vec<(String, String, Vec<String>)> {
        let mut groups: BTreeMap<(String, String), Vec<&FinalValue>> = BTreeMap::new();
        for r in &self.rows {
            groups
                .entry((r.experiment.clone(), r.metric.clone()))
                .or_default()
                .push(r);
        }
        groups
            .into_iter()
            .map(|((exp, metric), mut rows)| {
                rows.sort_by(|x, y| x.mean.total_cmp(&y.mean));
                (
                    exp,
                    metric,
                    rows.into_iter().map(|r| r.policy.clone()).collect(),
                )
            })
            .collect()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<40} {:>6} {:<10} {:<12} {:>14} {:>12}",
            "experiment", "alpha", "policy", "metric", "final", "std_err"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<40} {:>6} {:<10} {:<12} {:>14.4} {:>12.4}",
                r.experiment, r.alpha, r.policy, r.metric, r.mean, r.std_err
            );
        }
        for (exp, metric, order) in self.orderings() {
            let _ = writeln!(s, "ordering {exp} {metric}: {}", order.join(" < "));
        }
        s
    }
}

fn schema(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Schema {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Collects the last aggregate row of every (experiment, policy, metric).
pub fn summarize<P: AsRef<Path>>(paths: &[P]) -> Result<Summary> {
    let mut finals: BTreeMap<(String, String, String), FinalValue> = BTreeMap::new();
    let mut order: Vec<(String, String, String)> = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut lines = text.lines();
        match lines.next() {
            None => return Err(schema(path, "empty file")),
            Some(h) if h != CSV_HEADER => {
                return Err(schema(path, format!("unexpected header `{h}`")))
            }
            Some(_) => {}
        }
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            let lineno = i + 2;
            if fields.len() != 11 {
                return Err(schema(
                    path,
                    format!("line {lineno}: expected 11 fields, found {}", fields.len()),
                ));
            }
            if fields[4] != "1" {
                continue;
            }
            let parse_f = |k: usize| {
                fields[k]
                    .parse::<f64>()
                    .map_err(|_| schema(path, format!("line {lineno}: bad number `{}`", fields[k])))
            };
            let t = fields[5]
                .parse::<usize>()
                .map_err(|_| schema(path, format!("line {lineno}: bad round `{}`", fields[5])))?;
            let row = FinalValue {
                experiment: fields[0].to_string(),
                alpha: parse_f(2)?,
                policy: fields[3].to_string(),
                metric: fields[6].to_string(),
                t,
                mean: parse_f(7)?,
                std_err: parse_f(8)?,
            };
            let key = (
                row.experiment.clone(),
                row.policy.clone(),
                row.metric.clone(),
            );
            match finals.get(&key) {
                Some(prev) if prev.t >= t => {}
                Some(_) => {
                    finals.insert(key, row);
                }
                None => {
                    order.push(key.clone());
                    finals.insert(key, row);
                }
            }
        }
    }
    Ok(Summary {
        rows: order
            .into_iter()
            .filter_map(|k| finals.remove(&k))
            .collect(),
    })
}
