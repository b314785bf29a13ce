//! Regret and variation measures over completed traces.

use crate::compress::{roundtrip, Compression};
use crate::cost::{CostScenario, LocalData};
use crate::error::Result;
use crate::model::WorkerId;
use crate::network::DelayConfig;
use crate::trace::{ErrorComponents, RunTrace};

/// `Σ_t f_t(x_t) − f_t(x_t^*)`.
pub fn dynamic_regret(trace: &RunTrace) -> Result<f64> {
    trace.ensure_complete()?;
    Ok(trace.records().iter().map(|r| r.cost - r.opt_cost).sum())
}

fn hops(trace: &RunTrace) -> impl Iterator<Item = f64> + '_ {
    trace
        .records()
        .windows(2)
        .map(|w| w[1].opt.distance(&w[0].opt))
}

/// `Π_T^* = Σ_t ‖x_t^* − x_{t−1}^*‖` with `x_0^* := x_1^*`.
pub fn path_length(trace: &RunTrace) -> Result<f64> {
    trace.ensure_complete()?;
    Ok(hops(trace).sum())
}

/// `Π_{2,T}^* = Σ_t ‖x_t^* − x_{t−1}^*‖²` with `x_0^* := x_1^*`.
pub fn squared_path_length(trace: &RunTrace) -> Result<f64> {
    trace.ensure_complete()?;
    Ok(hops(trace).map(|h| h * h).sum())
}

/// `(Δ_T, Δ_{2,T})` from the per-slot `ε_t` column.
pub fn gradient_error_measures(trace: &RunTrace) -> Result<(f64, f64)> {
    trace.ensure_complete()?;
    Ok(trace
        .records()
        .iter()
        .fold((0.0, 0.0), |(s, s2), r| (s + r.eps, s2 + r.eps * r.eps)))
}

/// `Σ_t ‖∇f_t(x_t^*)‖²`.
pub fn optimal_gradient_energy(scenario: &CostScenario) -> Result<f64> {
    let optima = scenario.optima()?;
    let mut total = 0.0;
    for (i, opt) in optima.iter().enumerate() {
        total += scenario.gradient(i + 1, &opt.x)?.norm_squared();
    }
    Ok(total)
}

/// Data the two estimators of slot `t > τ` are built from: the master's
/// recovered `d̂_{t−τ}` for every worker, and each worker's row with its own
/// entry replaced by `d_{t−τ_l}`.
pub fn estimator_rows(
    scenario: &CostScenario,
    compression: &Compression,
    delays: &DelayConfig,
    t: usize,
) -> Result<(Vec<LocalData>, Vec<Vec<LocalData>>)> {
    let data_slot = t - delays.tau();
    let own_slot = t - delays.tau_l;
    let workers = scenario.num_workers();
    let stale = scenario.data(data_slot)?;
    let estimates = (0..workers)
        .map(|c| roundtrip(WorkerId(c), data_slot, &stale[c], compression))
        .collect::<Result<Vec<_>>>()?;
    let worker_rows = (0..workers)
        .map(|c| {
            let mut row = estimates.clone();
            row[c] = scenario.local_data(own_slot, WorkerId(c)).cloned()?;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((estimates, worker_rows))
}

/// Certified suprema over the feasible set of the data-estimation gradient
/// error at slot `t`; all zero during warmup (`t ≤ τ`).
pub fn certified_slot_error(
    scenario: &CostScenario,
    compression: &Compression,
    delays: &DelayConfig,
    t: usize,
) -> Result<ErrorComponents> {
    if t <= delays.tau() {
        scenario.data(t)?;
        return Ok(ErrorComponents::default());
    }
    let (estimates, worker_rows) = estimator_rows(scenario, compression, delays, t)?;
    let master_rows = vec![estimates; scenario.num_workers()];
    let model = scenario.model();
    let set = scenario.feasible();
    let sup = |rows: &[Vec<LocalData>], s: usize| -> Result<f64> {
        model.gradient_error_sup(scenario.data(s)?, rows, set)
    };
    Ok(ErrorComponents {
        master_now: sup(&master_rows, t)?,
        master_lag: sup(&master_rows, t - delays.tau())?,
        worker_now: sup(&worker_rows, t)?,
        worker_lag: sup(&worker_rows, t - delays.tau_l)?,
    })
}
