//! Result tables: one row per (cell, replication, estimator), plus
//! per-cell summaries.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::EstimatorTag;

/// Status of a row whose fit and evaluation succeeded.
pub const STATUS_OK: &str = "ok";

/// One CSV row. Metric columns are empty when the run failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub plan: String,
    pub distribution: String,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub n_corrupt: usize,
    pub replication: u64,
    pub seed: u64,
    pub estimator: EstimatorTag,
    pub status: String,
    pub margin: Option<f64>,
    pub margin_ratio: Option<f64>,
    pub prediction_error: Option<f64>,
    pub l2_direction_error: Option<f64>,
    pub loss: Option<f64>,
    pub iterations: u64,
    pub wall_time_ms: u64,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }

    fn sort_key(&self) -> (&str, &str, usize, usize, usize, usize, u64, u64, EstimatorTag) {
        (
            &self.plan,
            &self.distribution,
            self.n,
            self.p,
            self.s,
            self.n_corrupt,
            self.replication,
            self.seed,
            self.estimator,
        )
    }

    fn cell(&self) -> (&str, &str, usize, usize, usize, usize, EstimatorTag) {
        (
            &self.plan,
            &self.distribution,
            self.n,
            self.p,
            self.s,
            self.n_corrupt,
            self.estimator,
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// Rows sorted lexicographically by the key columns.
    pub fn from_rows(mut rows: Vec<ResultRow>) -> Self {
        rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        Self { rows }
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let rows = r
            .deserialize()
            .collect::<std::result::Result<Vec<ResultRow>, _>>()
            .map_err(csv_error)?;
        Ok(Self { rows })
    }

    /// Per-cell aggregates over the successful rows, in table order.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut sorted: Vec<&ResultRow> = self.rows.iter().collect();
        sorted.sort_by(|a, b| (a.cell(), a.replication).cmp(&(b.cell(), b.replication)));
        let mut out = Vec::new();
        for group in sorted.chunk_by(|a, b| a.cell() == b.cell()) {
            let first = group[0];
            let ok: Vec<&ResultRow> = group.iter().copied().filter(|r| r.is_ok()).collect();
            let stat = |f: fn(&ResultRow) -> Option<f64>| Stats::of(ok.iter().filter_map(|r| f(r)).collect());
            let pe = stat(|r| r.prediction_error);
            let margin = stat(|r| r.margin);
            let l2 = stat(|r| r.l2_direction_error);
            let ratio = stat(|r| r.margin_ratio);
            out.push(SummaryRow {
                plan: first.plan.clone(),
                distribution: first.distribution.clone(),
                n: first.n,
                p: first.p,
                s: first.s,
                n_corrupt: first.n_corrupt,
                estimator: first.estimator,
                runs: group.len(),
                ok_runs: ok.len(),
                prediction_error_median: pe.median,
                prediction_error_q1: pe.q1,
                prediction_error_q3: pe.q3,
                prediction_error_mean: pe.mean,
                margin_median: margin.median,
                margin_q1: margin.q1,
                margin_q3: margin.q3,
                margin_mean: margin.mean,
                l2_direction_error_median: l2.median,
                l2_direction_error_mean: l2.mean,
                margin_ratio_median: ratio.median,
            });
        }
        out
    }

    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in self.summary() {
            w.serialize(row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(format!("result CSV: {e}"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub plan: String,
    pub distribution: String,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub n_corrupt: usize,
    pub estimator: EstimatorTag,
    pub runs: usize,
    pub ok_runs: usize,
    pub prediction_error_median: Option<f64>,
    pub prediction_error_q1: Option<f64>,
    pub prediction_error_q3: Option<f64>,
    pub prediction_error_mean: Option<f64>,
    pub margin_median: Option<f64>,
    pub margin_q1: Option<f64>,
    pub margin_q3: Option<f64>,
    pub margin_mean: Option<f64>,
    pub l2_direction_error_median: Option<f64>,
    pub l2_direction_error_mean: Option<f64>,
    pub margin_ratio_median: Option<f64>,
}

struct Stats {
    median: Option<f64>,
    q1: Option<f64>,
    q3: Option<f64>,
    mean: Option<f64>,
}

impl Stats {
    fn of(mut values: Vec<f64>) -> Self {
        values.retain(|v| v.is_finite());
        values.sort_by(f64::total_cmp);
        let mean = (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64);
        Self {
            median: quantile(&values, 0.5),
            q1: quantile(&values, 0.25),
            q3: quantile(&values, 0.75),
            mean,
        }
    }
}

/// Linearly interpolated quantile of ascending `sorted` values: position
/// `q (len − 1)` between neighbouring order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    })
}
