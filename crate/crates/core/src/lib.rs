//! Hierarchical online convex optimization over a delayed master-worker
//! network.
//!
//! Workers hold time-varying local data of a non-separable global cost.
//! Each slot the master, working from delayed and compressed uploads, takes
//! `J_r` estimated projected gradient steps and sends each worker an
//! intermediate block and aggregated global information; the worker refines
//! its block with `J_l` local steps on timely data and executes it.
//!
//! Besides the simulator ([`engine::run_episode`]) the crate evaluates the
//! dynamic regret of a run and the regret bounds it must satisfy
//! ([`metrics`]).

pub mod baselines;
pub mod compress;
pub mod cost;
pub mod engine;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod network;
pub mod seed;
pub mod trace;

pub use baselines::{run_baseline, BaselineKind};
pub use compress::Compression;
pub use cost::{CostModel, CostScenario, CoupledQuadratic, DriftKind, DriftModel, LocalData, ScenarioSpec};
pub use engine::{run_episode, HiocoParams, Mode};
pub use error::{Error, Result};
pub use model::{BlockSet, DecisionBlock, FeasibleSet, GlobalDecision, Vector, WorkerId};
pub use network::DelayConfig;
pub use trace::{RunTrace, SlotRecord, TraceRow};
