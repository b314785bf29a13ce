//! Comparator configurations expressed through the same engine.

use serde::{Deserialize, Serialize};

use crate::compress::Compression;
use crate::cost::CostScenario;
use crate::engine::{run_episode, HiocoParams, Mode};
use crate::error::Result;
use crate::network::DelayConfig;
use crate::trace::RunTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BaselineKind {
    /// All descent at the master (`J_l = 0`).
    MasterOnly { steps: usize },
    /// All descent at the workers (`J_r = 0`); the master only relays
    /// stale decisions and global information.
    WorkerOnly { steps: usize },
    /// `J_l = 1`, `J_r = 0`.
    SingleStep,
    /// One projected step on the delayed exact global gradient at the
    /// master, executed as is.
    DelayedCentralizedOgd,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        BaselineKind::MasterOnly { steps: 2 },
        BaselineKind::WorkerOnly { steps: 2 },
        BaselineKind::SingleStep,
        BaselineKind::DelayedCentralizedOgd,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::MasterOnly { .. } => "master-only",
            BaselineKind::WorkerOnly { .. } => "worker-only",
            BaselineKind::SingleStep => "single-step",
            BaselineKind::DelayedCentralizedOgd => "delayed-centralized-ogd",
        }
    }

    /// Engine parameters realizing this baseline from a base configuration.
    pub fn params(&self, base: &HiocoParams) -> HiocoParams {
        let (j_r, j_l, compression) = match *self {
            BaselineKind::MasterOnly { steps } => (steps, 0, base.compression),
            BaselineKind::WorkerOnly { steps } => (0, steps, base.compression),
            BaselineKind::SingleStep => (0, 1, base.compression),
            BaselineKind::DelayedCentralizedOgd => (1, 0, Compression::Identity),
        };
        HiocoParams {
            j_r,
            j_l,
            compression,
            ..*base
        }
    }
}

pub fn run_baseline(
    kind: BaselineKind,
    scenario: &CostScenario,
    base: &HiocoParams,
    delays: &DelayConfig,
) -> Result<RunTrace> {
    let mode = if delays.tau_l > 0 {
        Mode::LocalDelay
    } else {
        Mode::ZeroLocalDelay
    };
    run_episode(scenario, &kind.params(base), delays, mode)
}
