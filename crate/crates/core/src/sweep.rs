//! Sweeps over one dataset axis: for every axis value and repeat seed a
//! dataset is generated once, then each method is trained on it and scored
//! on the test split.

use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, SweepAxis};
use crate::error::{Error, Result};
use crate::heads::Head;
use crate::metrics::evaluate;
use crate::pipeline::{build_dataset, dataset_split, train_model};

/// One CSV row. Column order is fixed:
/// `axis,value,method,seed,auc,balanced_accuracy,learned_q,status`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: &'static str,
    pub value: f64,
    pub method: Head,
    pub seed: u64,
    pub auc: Option<f64>,
    pub balanced_accuracy: Option<f64>,
    /// Only the quantile head learns q.
    pub learned_q: Option<f64>,
    pub status: String,
}

pub fn apply_axis(cfg: &ExperimentConfig, axis: SweepAxis, value: f64) -> ExperimentConfig {
    let mut c = cfg.clone();
    match axis {
        SweepAxis::Threshold => c.data.threshold_qstar = value,
        SweepAxis::BagSize => c.data.bag_size_mean = value,
        // the axis counts training bags
        SweepAxis::NBags => {
            c.data.n_bags = (value / c.data.split[0]).round().max(0.0) as usize;
        }
    }
    c
}

/// `(auc, balanced_accuracy, learned_q)` of one trained method.
type CellResult = Result<(f64, f64, Option<f64>)>;

fn run_cell(cfg: &ExperimentConfig, methods: &[Head], seed: u64) -> Vec<CellResult> {
    let split = build_dataset(cfg, seed).and_then(|d| dataset_split(&d, cfg));
    let split = match split {
        Ok(s) => s,
        Err(e) => {
            let msg = e.to_string();
            return methods.iter().map(|_| Err(Error::domain(msg.clone()))).collect();
        }
    };
    methods
        .iter()
        .map(|&head| {
            let trained = train_model(cfg, &split, head, seed)?;
            let ev = evaluate(&trained.model, &split.test, head)?;
            let q = (head == Head::Promil).then(|| trained.model.q.q());
            Ok((ev.auc, ev.balanced_accuracy, q))
        })
        .collect()
}

/// Runs every `(value, seed)` cell, in parallel, and returns rows ordered by
/// value, then method, then seed. Seeds are `cfg.seed + r` for
/// `r in 0..repeats`.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    repeats: usize,
    methods: &[Head],
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::domain("sweep needs at least one axis value"));
    }
    if repeats == 0 || methods.is_empty() {
        return Err(Error::domain("sweep needs at least one repeat and one method"));
    }
    let cells: Vec<(usize, u64)> = (0..values.len())
        .flat_map(|v| (0..repeats as u64).map(move |r| (v, r)))
        .collect();
    let results: Vec<Vec<CellResult>> = cells
        .par_iter()
        .map(|&(v, r)| {
            let c = apply_axis(cfg, axis, values[v]);
            run_cell(&c, methods, cfg.seed.wrapping_add(r))
        })
        .collect();

    let mut rows = Vec::with_capacity(values.len() * methods.len() * repeats);
    for (v, &value) in values.iter().enumerate() {
        for (m, &method) in methods.iter().enumerate() {
            for r in 0..repeats {
                let seed = cfg.seed.wrapping_add(r as u64);
                let row = match &results[v * repeats + r][m] {
                    Ok((auc, bacc, q)) => SweepRow {
                        axis: axis.as_str(),
                        value,
                        method,
                        seed,
                        auc: Some(*auc),
                        balanced_accuracy: Some(*bacc),
                        learned_q: *q,
                        status: "ok".into(),
                    },
                    Err(e) => SweepRow {
                        axis: axis.as_str(),
                        value,
                        method,
                        seed,
                        auc: None,
                        balanced_accuracy: None,
                        learned_q: None,
                        status: format!("error: {e}"),
                    },
                };
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

pub fn write_csv<W: io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

pub fn save_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(rows, file)
}

/// Mean AUC per method over the rows that succeeded.
pub fn mean_auc(rows: &[SweepRow], method: Head) -> Option<f64> {
    let aucs: Vec<f64> = rows
        .iter()
        .filter(|r| r.method == method)
        .filter_map(|r| r.auc)
        .collect();
    (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.data.n_bags = 40;
        cfg.data.bag_size_mean = 8.0;
        cfg.data.bag_size_std = 2.0;
        cfg.train.max_epochs = 2;
        cfg.train.patience = 2;
        cfg.train.learning_rate = 1e-2;
        cfg
    }

    #[test]
    fn row_count_and_header() {
        let rows = run_sweep(&small(), SweepAxis::Threshold, &[0.3, 0.5], 2, &Head::ALL).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 2);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "axis,value,method,seed,auc,balanced_accuracy,learned_q,status"
        );
        assert_eq!(text.lines().count(), 13);
        assert!(rows.iter().filter(|r| r.method != Head::Promil).all(|r| r.learned_q.is_none()));
    }

    #[test]
    fn failures_are_recorded_and_the_sweep_continues() {
        let rows = run_sweep(&small(), SweepAxis::Threshold, &[1.5, 0.4], 1, &[Head::Mean]).unwrap();
        assert!(rows[0].status.starts_with("error"));
        assert_eq!(rows[1].status, "ok");
    }

    #[test]
    fn axis_application() {
        let c = apply_axis(&small(), SweepAxis::NBags, 100.0);
        assert_eq!(c.data.n_bags, 200);
        let c = apply_axis(&small(), SweepAxis::BagSize, 12.0);
        assert_eq!(c.data.bag_size_mean, 12.0);
    }
}
