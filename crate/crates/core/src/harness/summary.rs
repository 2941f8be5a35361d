use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One line of `trials.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub optimizer: String,
    pub seed: u64,
    pub metric: String,
    pub step: u64,
    pub value: f64,
}

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub optimizer: String,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub median: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("statistics of an empty sample"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Ok(Self {
            count: values.len(),
            mean,
            std: var.sqrt(),
            median: median(values),
        })
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Aggregates the last-step value of every seed per (experiment, optimizer,
/// metric), in order of first appearance.
pub fn summarize(rows: &[ResultRow]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(Error::param("nothing to summarize"));
    }
    type Key<'a> = (&'a str, &'a str, &'a str);
    let mut order: Vec<Key> = Vec::new();
    let mut finals: HashMap<Key, HashMap<u64, (u64, f64)>> = HashMap::new();
    for r in rows {
        let key = (r.experiment.as_str(), r.optimizer.as_str(), r.metric.as_str());
        let per_seed = finals.entry(key).or_insert_with(|| {
            order.push(key);
            HashMap::new()
        });
        let slot = per_seed.entry(r.seed).or_insert((r.step, r.value));
        if r.step >= slot.0 {
            *slot = (r.step, r.value);
        }
    }
    order
        .into_iter()
        .map(|key| {
            let mut seeds: Vec<_> = finals[&key].iter().collect();
            seeds.sort_by_key(|(s, _)| **s);
            let values: Vec<f64> = seeds.iter().map(|(_, (_, v))| *v).collect();
            let s = Stats::of(&values)?;
            Ok(SummaryRow {
                experiment: key.0.into(),
                optimizer: key.1.into(),
                metric: key.2.into(),
                count: s.count,
                mean: s.mean,
                std: s.std,
                median: s.median,
            })
        })
        .collect()
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<ResultRow>, _>>()?)
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `trials.csv` in `dir` itself or one level below.
pub fn find_trial_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let direct = dir.join("trials.csv");
    if direct.is_file() {
        found.push(direct);
    }
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut subdirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    found.extend(subdirs.into_iter().map(|d| d.join("trials.csv")).filter(|p| p.is_file()));
    Ok(found)
}

/// Rewrites `summary.csv` beside every `trials.csv` under `dir` and returns
/// all summary rows.
pub fn summarize_dir(dir: &Path) -> Result<Vec<SummaryRow>> {
    let files = find_trial_files(dir)?;
    if files.is_empty() {
        return Err(Error::param(format!("no trials.csv under {}", dir.display())));
    }
    let mut all = Vec::new();
    for f in files {
        let summary = summarize(&read_rows(&f)?)?;
        write_rows(&f.with_file_name("summary.csv"), &summary)?;
        all.extend(summary);
    }
    Ok(all)
}
