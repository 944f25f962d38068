//! Loss-versus-measurement-budget comparison across estimator configurations.

use crate::error::{Error, Result};
use crate::harness::ensemble::EnsembleResult;

/// One experiment's mean-loss curve over the normalized measurement axis
/// (cumulative measurements in multiples of the 1-shot full-estimator step
/// cost).
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierCurve {
    pub label: String,
    /// Strictly increasing x positions.
    pub x: Vec<f64>,
    pub loss_mean: Vec<f64>,
}

pub fn frontier_curve(label: impl Into<String>, result: &EnsembleResult) -> FrontierCurve {
    let mc1 = result.mc1 as f64;
    FrontierCurve {
        label: label.into(),
        x: result.summary.iter().map(|r| r.meas_cum / mc1).collect(),
        loss_mean: result.summary.iter().map(|r| r.loss_mean).collect(),
    }
}

/// First normalized measurement count at which the mean loss reaches
/// `threshold`, or `None` if it never does.
pub fn first_crossing(curve: &FrontierCurve, threshold: f64) -> Option<f64> {
    curve
        .x
        .iter()
        .zip(&curve.loss_mean)
        .find(|(_, &loss)| loss <= threshold)
        .map(|(&x, _)| x)
}

/// Aligns the curves on the sorted union of their x grids, carrying each
/// curve's last value forward between its own sample points. Positions
/// before a curve's first sample are empty in the CSV.
pub fn merge_frontiers(results: &[(String, &EnsembleResult)]) -> Result<MergedFrontier> {
    if results.is_empty() {
        return Err(Error::InvalidConfig("nothing to compare".into()));
    }
    let first_task = &results[0].1.task;
    for (label, r) in results {
        if &r.task != first_task {
            return Err(Error::InvalidConfig(format!(
                "experiment '{label}' runs a different task; frontiers are not comparable"
            )));
        }
    }
    let curves: Vec<FrontierCurve> = results
        .iter()
        .map(|(label, r)| frontier_curve(label.clone(), r))
        .collect();

    let mut grid: Vec<f64> = curves.iter().flat_map(|c| c.x.iter().cloned()).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let values = curves
        .iter()
        .map(|curve| {
            let mut column = Vec::with_capacity(grid.len());
            let mut idx = 0usize;
            for &x in &grid {
                while idx < curve.x.len() && curve.x[idx] <= x {
                    idx += 1;
                }
                column.push(if idx == 0 {
                    None
                } else {
                    Some(curve.loss_mean[idx - 1])
                });
            }
            column
        })
        .collect();
    Ok(MergedFrontier {
        labels: curves.iter().map(|c| c.label.clone()).collect(),
        grid,
        values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergedFrontier {
    pub labels: Vec<String>,
    /// Normalized measurement positions (multiples of MC1).
    pub grid: Vec<f64>,
    /// Per-curve carried-forward loss means; `None` before a curve starts.
    pub values: Vec<Vec<Option<f64>>>,
}

impl MergedFrontier {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("meas_over_mc1");
        for label in &self.labels {
            out.push(',');
            out.push_str(label);
        }
        out.push('\n');
        for (i, x) in self.grid.iter().enumerate() {
            out.push_str(&format!("{x}"));
            for column in &self.values {
                out.push(',');
                if let Some(v) = column[i] {
                    out.push_str(&format!("{v}"));
                }
            }
            out.push('\n');
        }
        out
    }
}
