//! Per-slot run records and their cumulative columns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GlobalDecision;
use crate::network::FabricStats;

/// Certified suprema of the data-estimation error over the feasible set,
/// one per (estimator, reference slot) pair.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorComponents {
    /// Master estimator against `f_t`.
    pub master_now: f64,
    /// Master estimator against the slot its data came from.
    pub master_lag: f64,
    /// Worker estimator against `f_t`.
    pub worker_now: f64,
    /// Worker estimator against the slot of its own data.
    pub worker_lag: f64,
}

impl ErrorComponents {
    pub fn max(&self) -> f64 {
        self.master_now
            .max(self.master_lag)
            .max(self.worker_now)
            .max(self.worker_lag)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub t: usize,
    pub x: GlobalDecision,
    pub cost: f64,
    pub opt: GlobalDecision,
    pub opt_cost: f64,
    /// `ε_t`: the larger of the certified and realized errors.
    pub eps: f64,
    pub certified: ErrorComponents,
    /// Largest gradient error actually met at an iterate this slot.
    pub realized: f64,
    pub warmup: bool,
    /// Staleness stamps of the downlink the executed decision came from.
    pub data_slot: Option<usize>,
    pub decision_slot: Option<usize>,
}

impl SlotRecord {
    pub fn track_err(&self) -> f64 {
        self.x.distance(&self.opt)
    }
}

/// One CSV row; field order is the on-disk column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub cost: f64,
    pub opt_cost: f64,
    pub regret_cum: f64,
    pub path_cum: f64,
    pub path2_cum: f64,
    pub delta_cum: f64,
    pub delta2_cum: f64,
    pub track_err: f64,
}

pub const TRACE_COLUMNS: [&str; 9] = [
    "t",
    "cost",
    "opt_cost",
    "regret_cum",
    "path_cum",
    "path2_cum",
    "delta_cum",
    "delta2_cum",
    "track_err",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    horizon: usize,
    records: Vec<SlotRecord>,
    pub fabric: FabricStats,
}

impl RunTrace {
    pub fn new(horizon: usize) -> Self {
        Self {
            horizon,
            records: Vec::with_capacity(horizon),
            fabric: FabricStats::default(),
        }
    }

    pub fn push(&mut self, record: SlotRecord) -> Result<()> {
        let expected = self.records.len() + 1;
        if record.t != expected || expected > self.horizon {
            return Err(Error::Protocol(format!(
                "trace expected slot {expected}, got {}",
                record.t
            )));
        }
        self.records.push(record);
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn records(&self) -> &[SlotRecord] {
        &self.records
    }

    pub fn is_complete(&self) -> bool {
        self.records.len() == self.horizon
    }

    pub fn ensure_complete(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::IncompleteTrace {
                expected: self.horizon,
                found: self.records.len(),
            })
        }
    }

    /// Executed decisions in slot order.
    pub fn decisions(&self) -> impl Iterator<Item = &GlobalDecision> {
        self.records.iter().map(|r| &r.x)
    }

    /// Rows with prefix-summed columns. The first optimum displacement is
    /// zero (`x_0^* := x_1^*`).
    pub fn rows(&self) -> Vec<TraceRow> {
        let mut out = Vec::with_capacity(self.records.len());
        let (mut regret, mut path, mut path2, mut delta, mut delta2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (i, r) in self.records.iter().enumerate() {
            let hop = if i == 0 {
                0.0
            } else {
                r.opt.distance(&self.records[i - 1].opt)
            };
            regret += r.cost - r.opt_cost;
            path += hop;
            path2 += hop * hop;
            delta += r.eps;
            delta2 += r.eps * r.eps;
            out.push(TraceRow {
                t: r.t,
                cost: r.cost,
                opt_cost: r.opt_cost,
                regret_cum: regret,
                path_cum: path,
                path2_cum: path2,
                delta_cum: delta,
                delta2_cum: delta2,
                track_err: r.track_err(),
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DecisionBlock;
    use proptest::prelude::*;

    fn point(v: f64) -> GlobalDecision {
        GlobalDecision::new(vec![DecisionBlock::from_slice(&[v])])
    }

    fn record(t: usize, x: f64, opt: f64, cost: f64, opt_cost: f64, eps: f64) -> SlotRecord {
        SlotRecord {
            t,
            x: point(x),
            cost,
            opt: point(opt),
            opt_cost,
            eps,
            certified: ErrorComponents::default(),
            realized: 0.0,
            warmup: false,
            data_slot: None,
            decision_slot: None,
        }
    }

    #[test]
    fn rejects_out_of_order_slots() {
        let mut tr = RunTrace::new(2);
        assert!(tr.push(record(2, 0.0, 0.0, 0.0, 0.0, 0.0)).is_err());
        tr.push(record(1, 0.0, 0.0, 0.0, 0.0, 0.0)).unwrap();
        assert!(tr.ensure_complete().is_err());
        tr.push(record(2, 0.0, 0.0, 0.0, 0.0, 0.0)).unwrap();
        assert!(tr.push(record(3, 0.0, 0.0, 0.0, 0.0, 0.0)).is_err());
        assert!(tr.ensure_complete().is_ok());
    }

    proptest! {
        #[test]
        fn cumulative_columns_are_prefix_sums(
            slots in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0, 0.0f64..3.0, 0.0f64..1.0), 1..40)
        ) {
            let mut tr = RunTrace::new(slots.len());
            for (i, &(x, opt, gap, eps)) in slots.iter().enumerate() {
                tr.push(record(i + 1, x, opt, 1.0 + gap, 1.0, eps)).unwrap();
            }
            let rows = tr.rows();
            prop_assert_eq!(rows.len(), slots.len());
            let mut acc = (0.0, 0.0, 0.0, 0.0);
            for (i, row) in rows.iter().enumerate() {
                let hop = if i == 0 { 0.0 } else { (slots[i].1 - slots[i - 1].1).abs() };
                acc.0 += slots[i].2;
                acc.1 += hop;
                acc.2 += hop * hop;
                acc.3 += slots[i].3;
                prop_assert!((row.regret_cum - acc.0).abs() < 1e-9);
                prop_assert!((row.path_cum - acc.1).abs() < 1e-9);
                prop_assert!((row.path2_cum - acc.2).abs() < 1e-9);
                prop_assert!((row.delta_cum - acc.3).abs() < 1e-9);
                prop_assert!((row.track_err - (slots[i].0 - slots[i].1).abs()).abs() < 1e-12);
            }
        }
    }
}
