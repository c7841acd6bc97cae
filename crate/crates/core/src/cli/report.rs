//! Serializable shapes of the JSON the CLI prints. Field names are part of
//! the published schemas under `schemas/`.

use serde::Serialize;

use crate::barycenter::BarycenterResult;
use crate::coreset::CoresetEvaluation;
use crate::distribution::DiscreteDistribution;
use crate::projection::{DimensionPolicy, MapKind, SweepRow, Timings};

pub(super) fn rows(nu: &DiscreteDistribution) -> Vec<Vec<f64>> {
    nu.atoms().rows().into_iter().map(|r| r.to_vec()).collect()
}

#[derive(Serialize)]
pub(super) struct BarycenterReport {
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub p: f64,
    pub seed: u64,
    pub support: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub per_atom_costs: Vec<f64>,
    pub trace: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve_secs: Option<f64>,
}

impl BarycenterReport {
    pub fn new(res: &BarycenterResult, p: f64, seed: u64, solve_secs: Option<f64>) -> Self {
        Self {
            cost: res.report.total_cost,
            iterations: res.report.iterations,
            converged: res.report.converged,
            p,
            seed,
            support: rows(&res.nu),
            weights: res.nu.weights().to_vec(),
            per_atom_costs: res.report.per_atom_costs.clone(),
            trace: res.trace.clone(),
            solve_secs,
        }
    }
}

#[derive(Serialize)]
pub(super) struct TimingReport {
    pub projection_secs: f64,
    pub solve_secs: f64,
    pub reconstruction_secs: f64,
}

impl From<Timings> for TimingReport {
    fn from(t: Timings) -> Self {
        Self {
            projection_secs: t.projection_secs,
            solve_secs: t.solve_secs,
            reconstruction_secs: t.reconstruction_secs,
        }
    }
}

#[derive(Serialize)]
pub(super) struct ReduceReport {
    pub d: usize,
    pub m: usize,
    pub map: MapKind,
    pub policy: Option<DimensionPolicy>,
    pub p: f64,
    pub seed: u64,
    pub cost_low: f64,
    pub cost_high: f64,
    pub iterations: usize,
    pub support: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<TimingReport>,
}

#[derive(Serialize)]
pub(super) struct CoresetRow {
    pub method: String,
    pub size: usize,
    pub query: Vec<f64>,
    pub cost_orig: f64,
    pub mean_cost_core: f64,
    /// Mean over trials; absent when the original cost is zero but a sample is not.
    pub mean_rel_error: Option<f64>,
    pub rel_errors: Vec<Option<f64>>,
}

impl CoresetRow {
    pub fn new(method: &str, size: usize, query: Vec<f64>, evals: &[CoresetEvaluation]) -> Self {
        let rel_errors: Vec<Option<f64>> = evals.iter().map(|e| e.rel_error).collect();
        let mean_rel_error = rel_errors
            .iter()
            .copied()
            .collect::<Option<Vec<f64>>>()
            .map(|v| v.iter().sum::<f64>() / v.len() as f64);
        Self {
            method: method.to_string(),
            size,
            query,
            cost_orig: evals[0].cost_orig,
            mean_cost_core: evals.iter().map(|e| e.cost_core).sum::<f64>() / evals.len() as f64,
            mean_rel_error,
            rel_errors,
        }
    }
}

#[derive(Serialize)]
pub(super) struct CoresetReport {
    pub k: usize,
    pub p: f64,
    pub alpha: f64,
    pub seed: u64,
    pub trials: usize,
    pub s_bar: f64,
    pub rows: Vec<CoresetRow>,
}

#[derive(Serialize)]
pub(super) struct SweepReportRow {
    pub m: usize,
    pub mean_ratio: f64,
    pub std_ratio: f64,
    pub ratios: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub low_secs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub high_secs: Option<f64>,
}

#[derive(Serialize)]
pub(super) struct SweepReport {
    pub d: usize,
    pub map: MapKind,
    pub trials: usize,
    pub seed: u64,
    pub p: f64,
    pub rows: Vec<SweepReportRow>,
}

impl SweepReport {
    pub fn new(d: usize, map: MapKind, trials: usize, seed: u64, p: f64, rows: Vec<SweepRow>, timing: bool) -> Self {
        let rows = rows
            .into_iter()
            .map(|r| {
                SweepReportRow {
                    m: r.m,
                    mean_ratio: r.mean_ratio,
                    std_ratio: r.std_ratio,
                    ratios: r.ratios,
                    low_secs: timing.then_some(r.low_secs),
                    high_secs: timing.then_some(r.high_secs),
                }
            })
            .collect();
        Self {
            d,
            map,
            trials,
            seed,
            p,
            rows,
        }
    }
}
