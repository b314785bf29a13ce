//! The hierarchical protocol: the master runs `J_r` estimated projected
//! gradient steps on stale, compressed data and sends each worker an
//! intermediate block plus global information; the worker runs `J_l`
//! further steps on its own timely data and executes the result.
//!
//! With a local acquisition delay `τ_l > 0` workers only hold `d_{t−τ_l}`,
//! the master works from `x_{t−τ}` and `d̂_{t−τ}`, and the protocol starts
//! after `τ = τ_l + τ_r` warmup slots.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::compress::{compress, recover, Compression};
use crate::cost::{CostModel, CostScenario, LocalData};
use crate::error::{Error, Result};
use crate::metrics::measures::certified_slot_error;
use crate::model::{gradient_step, DecisionBlock, FeasibleSet, GlobalDecision, Vector, WorkerId};
use crate::network::{DelayConfig, DownlinkPayload, Fabric, UplinkPayload};
use crate::seed;
use crate::trace::{RunTrace, SlotRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HiocoParams {
    pub alpha: f64,
    pub j_r: usize,
    pub j_l: usize,
    #[serde(default)]
    pub compression: Compression,
    #[serde(default)]
    pub init_seed: u64,
}

impl HiocoParams {
    pub fn new(alpha: f64, j_r: usize, j_l: usize) -> Self {
        Self {
            alpha,
            j_r,
            j_l,
            compression: Compression::Identity,
            init_seed: 0,
        }
    }

    pub fn with_compression(mut self, compression: Compression) -> Self {
        self.compression = compression;
        self
    }

    pub fn with_seed(mut self, init_seed: u64) -> Self {
        self.init_seed = init_seed;
        self
    }

    pub fn total_steps(&self) -> usize {
        self.j_l + self.j_r
    }

    pub fn validate(&self, smoothness: f64) -> Result<()> {
        if self.total_steps() == 0 {
            return Err(Error::InvalidParameter("J_l + J_r must be at least 1".into()));
        }
        if !(self.alpha.is_finite() && self.alpha >= smoothness) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {} must be at least L = {smoothness}",
                self.alpha
            )));
        }
        self.compression.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    ZeroLocalDelay,
    LocalDelay,
}

/// A random feasible block for slot `t` of the warmup phase.
pub fn warmup_decision(
    set: &FeasibleSet,
    c: WorkerId,
    t: usize,
    init_seed: u64,
) -> Result<DecisionBlock> {
    let mut rng = seed::stream(init_seed, &[c.0 as u64, t as u64]);
    Ok(DecisionBlock::new(set.block(c)?.sample_uniform(&mut rng)))
}

/// One gradient evaluation along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub point: GlobalDecision,
    pub gradient: Vector,
}

/// Master-side computation for one target slot.
#[derive(Debug, Clone)]
pub struct MasterRound {
    pub target: usize,
    pub downlinks: Vec<DownlinkPayload>,
    /// Jacobi steps `x̂^{j−1} → x̂^j` with the estimated gradient used.
    pub steps: Vec<Step>,
    pub estimates: Vec<LocalData>,
}

/// Master state: only what has arrived over the uplinks.
#[derive(Debug, Clone)]
pub struct MasterState {
    model: Arc<dyn CostModel>,
    set: FeasibleSet,
    delays: DelayConfig,
    horizon: usize,
    pending: BTreeMap<usize, Vec<Option<UplinkPayload>>>,
    /// Complete decision vectors by slot, pruned once no longer needed.
    history: BTreeMap<usize, Vec<DecisionBlock>>,
}

impl MasterState {
    pub fn new(
        model: Arc<dyn CostModel>,
        set: FeasibleSet,
        delays: DelayConfig,
        horizon: usize,
    ) -> Self {
        Self {
            model,
            set,
            delays,
            horizon,
            pending: BTreeMap::new(),
            history: BTreeMap::new(),
        }
    }

    fn workers(&self) -> usize {
        self.set.num_workers()
    }

    /// Absorbs the uplinks delivered at `t` and computes every target slot
    /// whose inputs are now complete.
    pub fn master_slot(
        &mut self,
        t: usize,
        params: &HiocoParams,
        delivered: Vec<UplinkPayload>,
    ) -> Result<Vec<MasterRound>> {
        let workers = self.workers();
        let mut arrived = Vec::new();
        for up in delivered {
            let c = up.worker.0;
            if c >= workers {
                return Err(Error::UnknownWorker { index: c, workers });
            }
            if up.slot + self.delays.tau_u != t {
                return Err(Error::Protocol(format!(
                    "uplink of slot {} from {} delivered at slot {t}",
                    up.slot, up.worker
                )));
            }
            let slot = up.slot;
            let entry = self.pending.entry(slot).or_insert_with(|| vec![None; workers]);
            if entry[c].replace(up).is_some() {
                return Err(Error::Protocol(format!("duplicate uplink for slot {slot}")));
            }
            if !arrived.contains(&slot) {
                arrived.push(slot);
            }
        }

        let mut rounds = Vec::new();
        for slot in arrived {
            let entry = self.pending.remove(&slot).expect("slot was just inserted");
            if entry.iter().any(Option::is_none) {
                let missing = entry.iter().filter(|u| u.is_none()).count();
                return Err(Error::Protocol(format!(
                    "{missing} uplink(s) missing for slot {slot} at master slot {t}"
                )));
            }
            let uplinks: Vec<UplinkPayload> = entry.into_iter().flatten().collect();
            self.history
                .insert(slot, uplinks.iter().map(|u| u.decision.clone()).collect());
            if let Some(round) = self.compute(slot, params, &uplinks)? {
                rounds.push(round);
            }
            // x_{slot−τ_l} is the oldest decision any future round reads
            let keep_from = (slot + 1).saturating_sub(self.delays.tau_l);
            self.history = self.history.split_off(&keep_from);
        }
        Ok(rounds)
    }

    fn compute(
        &self,
        slot: usize,
        params: &HiocoParams,
        uplinks: &[UplinkPayload],
    ) -> Result<Option<MasterRound>> {
        let target = slot + self.delays.tau_r();
        if target <= self.delays.tau() || target > self.horizon {
            return Ok(None);
        }
        let data_slot = target - self.delays.tau();
        let decision_slot = data_slot;
        let mut estimates = Vec::with_capacity(uplinks.len());
        for up in uplinks {
            match (&up.compressed, up.data_slot) {
                (Some(cd), Some(s)) if s == data_slot => estimates.push(recover(cd)),
                _ => {
                    return Err(Error::Protocol(format!(
                        "uplink from {} lacks data of slot {data_slot}",
                        up.worker
                    )))
                }
            }
        }
        let start = self.history.get(&decision_slot).ok_or_else(|| {
            Error::Protocol(format!("master has no decisions of slot {decision_slot}"))
        })?;
        let mut x = GlobalDecision::new(start.clone());
        let workers = self.workers();
        let mut steps = Vec::with_capacity(params.j_r);
        for _ in 0..params.j_r {
            let gradient = self.model.gradient(&estimates, &x)?;
            let mut next = Vec::with_capacity(workers);
            let mut offset = 0;
            for c in 0..workers {
                let xc = x.blocks()[c].as_vector();
                let g = gradient.rows(offset, xc.len()).into_owned();
                offset += xc.len();
                next.push(gradient_step(&self.set, WorkerId(c), &x.blocks()[c], &g, params.alpha)?);
            }
            steps.push(Step {
                point: x,
                gradient,
            });
            x = GlobalDecision::new(next);
        }
        let mut downlinks = Vec::with_capacity(workers);
        for c in 0..workers {
            let others: Vec<_> = (0..workers)
                .filter(|&l| l != c)
                .map(|l| (WorkerId(l), &estimates[l], x.blocks()[l].as_vector()))
                .collect();
            let ginfo = self.model.global_info(workers, WorkerId(c), &others)?;
            downlinks.push(DownlinkPayload {
                worker: WorkerId(c),
                target,
                intermediate: x.blocks()[c].clone(),
                ginfo,
                data_slot,
                decision_slot,
            });
        }
        Ok(Some(MasterRound {
            target,
            downlinks,
            steps,
            estimates,
        }))
    }
}

/// What a worker did in one slot.
#[derive(Debug, Clone)]
pub struct WorkerOutput {
    pub executed: DecisionBlock,
    pub uplink: UplinkPayload,
    /// Local steps: the block before each step and the gradient used.
    pub steps: Vec<(DecisionBlock, Vector)>,
    pub warmup: bool,
    pub data_slot: Option<usize>,
    pub decision_slot: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct WorkerState {
    id: WorkerId,
    model: Arc<dyn CostModel>,
    set: FeasibleSet,
    delays: DelayConfig,
}

impl WorkerState {
    pub fn new(id: WorkerId, model: Arc<dyn CostModel>, set: FeasibleSet, delays: DelayConfig) -> Self {
        Self {
            id,
            model,
            set,
            delays,
        }
    }

    /// `own` is the newest local data the worker holds at `t`, namely
    /// `d_{t−τ_l}`, or `None` while `t ≤ τ_l`.
    pub fn worker_slot(
        &self,
        t: usize,
        params: &HiocoParams,
        own: Option<&LocalData>,
        delivered: Vec<DownlinkPayload>,
    ) -> Result<WorkerOutput> {
        let own_slot = (t > self.delays.tau_l).then(|| t - self.delays.tau_l);
        if own.is_some() != own_slot.is_some() {
            return Err(Error::Protocol(format!(
                "{} data availability does not match slot {t}",
                self.id
            )));
        }
        let warmup = t <= self.delays.tau();
        let (executed, steps, data_slot, decision_slot) = if warmup {
            if !delivered.is_empty() {
                return Err(Error::Protocol(format!(
                    "{} got a downlink during warmup slot {t}",
                    self.id
                )));
            }
            (warmup_decision(&self.set, self.id, t, params.init_seed)?, Vec::new(), None, None)
        } else {
            let mut delivered = delivered.into_iter();
            let down = match (delivered.next(), delivered.next()) {
                (Some(d), None) => d,
                (None, _) => {
                    return Err(Error::Protocol(format!("{} missing downlink for slot {t}", self.id)))
                }
                (Some(_), Some(_)) => {
                    return Err(Error::Protocol(format!("{} got two downlinks for slot {t}", self.id)))
                }
            };
            if down.worker != self.id || down.target != t || down.data_slot + self.delays.tau() != t {
                return Err(Error::Protocol(format!(
                    "{} got a downlink for {} slot {} (data slot {}) at slot {t}",
                    self.id, down.worker, down.target, down.data_slot
                )));
            }
            let own = own.expect("checked above");
            let mut x = down.intermediate;
            let mut steps = Vec::with_capacity(params.j_l);
            for _ in 0..params.j_l {
                let g = self.model.local_gradient(own, x.as_vector(), &down.ginfo)?;
                let next = gradient_step(&self.set, self.id, &x, &g, params.alpha)?;
                steps.push((x, g));
                x = next;
            }
            (x, steps, Some(down.data_slot), Some(down.decision_slot))
        };
        let compressed = match (own, own_slot) {
            (Some(d), Some(s)) => Some(compress(self.id, s, d, &params.compression)?),
            _ => None,
        };
        Ok(WorkerOutput {
            uplink: UplinkPayload {
                worker: self.id,
                slot: t,
                decision: executed.clone(),
                compressed,
                data_slot: own_slot,
            },
            executed,
            steps,
            warmup,
            data_slot,
            decision_slot,
        })
    }
}

fn stack_blocks(blocks: &[&Vector]) -> Vector {
    let n = blocks.iter().map(|b| b.len()).sum();
    let mut out = Vector::zeros(n);
    let mut offset = 0;
    for b in blocks {
        out.rows_mut(offset, b.len()).copy_from(b);
        offset += b.len();
    }
    out
}

/// Runs the protocol over the whole horizon.
pub fn run_episode(
    scenario: &CostScenario,
    params: &HiocoParams,
    delays: &DelayConfig,
    mode: Mode,
) -> Result<RunTrace> {
    delays.validate()?;
    params.validate(scenario.constants().l)?;
    if mode == Mode::ZeroLocalDelay && delays.tau_l > 0 {
        return Err(Error::InvalidParameter(format!(
            "zero-local-delay mode needs tau_l = 0, got {}",
            delays.tau_l
        )));
    }
    let horizon = scenario.horizon();
    let workers = scenario.num_workers();
    let model = scenario.model_handle();
    let set = scenario.feasible().clone();
    let tau = delays.tau();
    let optima = scenario.optima()?;

    let mut fabric = Fabric::new(workers, delays);
    let mut master = MasterState::new(Arc::clone(&model), set.clone(), *delays, horizon);
    let agents: Vec<WorkerState> = (0..workers)
        .map(|c| WorkerState::new(WorkerId(c), Arc::clone(&model), set.clone(), *delays))
        .collect();
    let mut rounds: BTreeMap<usize, MasterRound> = BTreeMap::new();
    let mut trace = RunTrace::new(horizon);

    let mut master_phase = |t: usize,
                            fabric: &mut Fabric,
                            rounds: &mut BTreeMap<usize, MasterRound>|
     -> Result<()> {
        let delivered = fabric.deliver_up(t);
        if delivered.is_empty() {
            return Ok(());
        }
        for round in master.master_slot(t, params, delivered)? {
            for down in &round.downlinks {
                fabric.send_down(t, down.clone())?;
            }
            rounds.insert(round.target, round);
        }
        Ok(())
    };

    for t in 1..=horizon {
        master_phase(t, &mut fabric, &mut rounds)?;

        let mut outputs = Vec::with_capacity(workers);
        for agent in &agents {
            let c = agent.id;
            let own = if t > delays.tau_l {
                Some(scenario.local_data(t - delays.tau_l, c)?)
            } else {
                None
            };
            let delivered = fabric.deliver_down(t, c)?;
            let out = agent.worker_slot(t, params, own, delivered)?;
            fabric.send_up(t, out.uplink.clone())?;
            outputs.push(out);
        }

        master_phase(t, &mut fabric, &mut rounds)?;

        let x = GlobalDecision::new(outputs.iter().map(|o| o.executed.clone()).collect());
        let warmup = t <= tau;
        let (certified, realized) = if warmup {
            (Default::default(), 0.0)
        } else {
            let round = rounds
                .remove(&t)
                .ok_or_else(|| Error::Protocol(format!("no master round for slot {t}")))?;
            let certified = certified_slot_error(scenario, &params.compression, delays, t)?;
            let realized = realized_error(scenario, delays, t, &round, &outputs)?;
            (certified, realized)
        };
        let opt = &optima[t - 1];
        trace.push(SlotRecord {
            t,
            cost: scenario.eval_cost(t, &x)?,
            x,
            opt: opt.x.clone(),
            opt_cost: opt.value,
            eps: certified.max().max(realized),
            certified,
            realized,
            warmup,
            data_slot: outputs[0].data_slot,
            decision_slot: outputs[0].decision_slot,
        })?;
    }

    fabric.flush();
    let stats = fabric.stats();
    if stats.uplink_sent != stats.uplink_delivered || stats.downlink_sent != stats.downlink_delivered {
        return Err(Error::Protocol(format!("fabric lost messages: {stats:?}")));
    }
    trace.fabric = stats;
    Ok(trace)
}

/// Largest gradient error met at an actual iterate of slot `t`: master
/// steps against `f_t` and `f_{t−τ}`, worker steps against `f_t` and
/// `f_{t−τ_l}`.
fn realized_error(
    scenario: &CostScenario,
    delays: &DelayConfig,
    t: usize,
    round: &MasterRound,
    outputs: &[WorkerOutput],
) -> Result<f64> {
    let mut worst = 0.0f64;
    let lagged = t - delays.tau();
    for step in &round.steps {
        for s in [t, lagged] {
            let truth = scenario.gradient(s, &step.point)?;
            worst = worst.max((&step.gradient - truth).norm());
        }
    }
    let j_l = outputs.first().map_or(0, |o| o.steps.len());
    let dims = scenario.dims();
    for j in 0..j_l {
        let point = GlobalDecision::new(outputs.iter().map(|o| o.steps[j].0.clone()).collect());
        let grads: Vec<&Vector> = outputs.iter().map(|o| &o.steps[j].1).collect();
        let estimate = stack_blocks(&grads);
        debug_assert_eq!(estimate.len(), dims.iter().sum::<usize>());
        for s in [t, t - delays.tau_l] {
            let truth = scenario.gradient(s, &point)?;
            worst = worst.max((&estimate - truth).norm());
        }
    }
    Ok(worst)
}
