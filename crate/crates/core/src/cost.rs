//! Time-varying global cost functions.
//!
//! The built-in family is the coupled quadratic
//!
//! ```text
//! f_t(x) = ½‖Σ_c A_t^c x^c − Σ_c b_t^c‖² + (μ/2)‖x‖²
//! ```
//!
//! which is non-separable: the partial gradient of block `c` is
//! `h(d^c, x^c, g) = A^cᵀ(A^c x^c − b^c + g) + μx^c` where the global
//! information `g = Σ_{l≠c}(A^l x^l − b^l)` aggregates every other worker.
//! Other families plug in through [`CostModel`].

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{gram_top_eigenvalue, spectral_norm};
use crate::model::{BlockSet, DecisionBlock, FeasibleSet, GlobalDecision, Vector, WorkerId};
use crate::seed;

/// Relative tolerance of the power iteration behind `L`.
pub const SMOOTHNESS_REL_TOL: f64 = 1e-10;
/// Step-length tolerance of the iterative per-slot solver.
pub const OPTIMUM_TOL: f64 = 1e-12;
const OPTIMUM_MAX_ITERS: usize = 200_000;

/// One worker's data at one slot: coupling matrix `A` (m × n^c) and its
/// share `b` of the global target.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalData {
    pub a: DMatrix<f64>,
    pub b: Vector,
}

impl LocalData {
    pub fn new(a: DMatrix<f64>, b: Vector) -> Result<Self> {
        check_dim("local data target", a.nrows(), b.len())?;
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("local data must be finite".into()));
        }
        Ok(Self { a, b })
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }
}

/// Stacks the per-worker matrices into `Q = [A^1 … A^C]` and sums the targets.
pub fn stack(data: &[LocalData]) -> (DMatrix<f64>, Vector) {
    let m = data.first().map_or(0, LocalData::rows);
    let n: usize = data.iter().map(LocalData::cols).sum();
    let mut q = DMatrix::zeros(m, n);
    let mut b = Vector::zeros(m);
    let mut offset = 0;
    for d in data {
        q.columns_mut(offset, d.cols()).copy_from(&d.a);
        b += &d.b;
        offset += d.cols();
    }
    (q, b)
}

/// A global cost family with the `h`/`g` gradient decomposition.
///
/// `data` slices are indexed by worker and hold either true or estimated
/// local data; the model never knows which.
pub trait CostModel: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    /// Strong-convexity modulus.
    fn mu(&self) -> f64;

    /// Length of the global-information vector.
    fn info_dim(&self) -> usize;

    fn cost(&self, data: &[LocalData], x: &GlobalDecision) -> f64;

    /// `h_f^c(d^c, x^c, g)`.
    fn local_gradient(&self, own: &LocalData, xc: &Vector, ginfo: &Vector) -> Result<Vector>;

    /// The contribution of one worker `l ≠ c` to `g_f^c`.
    fn info_term(&self, data: &LocalData, xl: &Vector) -> Result<Vector>;

    /// Smoothness constant of the slot cost over the whole space.
    fn smoothness(&self, data: &[LocalData]) -> Result<f64>;

    /// Upper bound on `‖∇f(x)‖` over `set`.
    fn gradient_bound(&self, data: &[LocalData], set: &FeasibleSet) -> Result<f64>;

    /// Unconstrained minimizer in closed form, when the family admits one.
    fn unconstrained_optimum(&self, _data: &[LocalData]) -> Option<Vector> {
        None
    }

    /// Certified upper bound on `sup_{x∈X} ‖∇f̂(x) − ∇f(x)‖` where block row
    /// `c` of the estimate evaluates the model on `rows[c]` instead of `truth`.
    fn gradient_error_sup(
        &self,
        _truth: &[LocalData],
        _rows: &[Vec<LocalData>],
        _set: &FeasibleSet,
    ) -> Result<f64> {
        Err(Error::NotImplemented("closed-form gradient-error supremum"))
    }

    /// `g_f^c` from the blocks of every worker except `c`.
    fn global_info(
        &self,
        workers: usize,
        c: WorkerId,
        others: &[(WorkerId, &LocalData, &Vector)],
    ) -> Result<Vector> {
        if c.0 >= workers {
            return Err(Error::UnknownWorker {
                index: c.0,
                workers,
            });
        }
        let mut seen = vec![false; workers];
        let mut g = Vector::zeros(self.info_dim());
        for (l, d, xl) in others {
            if l.0 >= workers || *l == c || seen[l.0] {
                return Err(Error::InvalidParameter(format!(
                    "global information for {c} got an unexpected block from {l}"
                )));
            }
            seen[l.0] = true;
            g += self.info_term(d, xl)?;
        }
        let missing = seen
            .iter()
            .enumerate()
            .filter(|&(l, s)| l != c.0 && !s)
            .count();
        if missing > 0 {
            return Err(Error::InvalidParameter(format!(
                "global information for {c} is missing {missing} worker block(s)"
            )));
        }
        Ok(g)
    }

    /// Full gradient assembled block by block from `h` and `g`.
    fn gradient(&self, data: &[LocalData], x: &GlobalDecision) -> Result<Vector> {
        check_dim("decision blocks", data.len(), x.num_workers())?;
        let workers = data.len();
        let mut out = Vector::zeros(x.dim());
        let mut offset = 0;
        for (c, own) in data.iter().enumerate() {
            let others: Vec<_> = (0..workers)
                .filter(|&l| l != c)
                .map(|l| (WorkerId(l), &data[l], x.blocks()[l].as_vector()))
                .collect();
            let g = self.global_info(workers, WorkerId(c), &others)?;
            let block = self.local_gradient(own, x.blocks()[c].as_vector(), &g)?;
            out.rows_mut(offset, block.len()).copy_from(&block);
            offset += block.len();
        }
        Ok(out)
    }
}

/// `f(x) = ½‖Qx − b‖² + (μ/2)‖x‖²` with `Q`, `b` assembled from local data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledQuadratic {
    pub mu: f64,
    pub m: usize,
}

impl CoupledQuadratic {
    pub fn new(mu: f64, m: usize) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "strong-convexity modulus must be positive, got {mu}"
            )));
        }
        Ok(Self { mu, m })
    }

    /// Affine error `e(x) = Mx − v` of the row-wise estimated gradient.
    pub fn error_operator(
        &self,
        truth: &[LocalData],
        rows: &[Vec<LocalData>],
    ) -> Result<(DMatrix<f64>, Vector)> {
        check_dim("estimator rows", truth.len(), rows.len())?;
        let (q, b) = stack(truth);
        let n = q.ncols();
        let mut m_op = DMatrix::zeros(n, n);
        let mut v = Vector::zeros(n);
        let mut offset = 0;
        for (c, row) in rows.iter().enumerate() {
            check_dim("estimator row workers", truth.len(), row.len())?;
            let (q_hat, b_hat) = stack(row);
            let a_hat = &row[c].a;
            let a = &truth[c].a;
            let nc = a.ncols();
            let block = a_hat.tr_mul(&q_hat) - a.tr_mul(&q);
            m_op.rows_mut(offset, nc).copy_from(&block);
            let lin = a_hat.tr_mul(&b_hat) - a.tr_mul(&b);
            v.rows_mut(offset, nc).copy_from(&lin);
            offset += nc;
        }
        Ok((m_op, v))
    }
}

impl CostModel for CoupledQuadratic {
    fn name(&self) -> &'static str {
        "coupled-quadratic"
    }

    fn mu(&self) -> f64 {
        self.mu
    }

    fn info_dim(&self) -> usize {
        self.m
    }

    fn cost(&self, data: &[LocalData], x: &GlobalDecision) -> f64 {
        let mut r = Vector::zeros(self.m);
        for (d, xc) in data.iter().zip(x.blocks()) {
            r += &d.a * xc.as_vector() - &d.b;
        }
        let reg: f64 = x.blocks().iter().map(|b| b.norm_squared()).sum();
        0.5 * r.norm_squared() + 0.5 * self.mu * reg
    }

    fn local_gradient(&self, own: &LocalData, xc: &Vector, ginfo: &Vector) -> Result<Vector> {
        check_dim("local block", own.cols(), xc.len())?;
        check_dim("global information", self.m, ginfo.len())?;
        let r = &own.a * xc - &own.b + ginfo;
        Ok(own.a.tr_mul(&r) + xc * self.mu)
    }

    fn info_term(&self, data: &LocalData, xl: &Vector) -> Result<Vector> {
        check_dim("other block", data.cols(), xl.len())?;
        check_dim("global information", self.m, data.rows())?;
        Ok(&data.a * xl - &data.b)
    }

    fn smoothness(&self, data: &[LocalData]) -> Result<f64> {
        let (q, _) = stack(data);
        Ok(gram_top_eigenvalue(&q, SMOOTHNESS_REL_TOL)?.value + self.mu)
    }

    fn gradient_bound(&self, data: &[LocalData], set: &FeasibleSet) -> Result<f64> {
        let (q, b) = stack(data);
        let lambda = gram_top_eigenvalue(&q, SMOOTHNESS_REL_TOL)?.value;
        Ok((lambda + self.mu) * set.max_norm() + q.tr_mul(&b).norm())
    }

    fn unconstrained_optimum(&self, data: &[LocalData]) -> Option<Vector> {
        let (q, b) = stack(data);
        let n = q.ncols();
        let p = q.tr_mul(&q) + DMatrix::identity(n, n) * self.mu;
        p.cholesky().map(|ch| ch.solve(&q.tr_mul(&b)))
    }

    fn gradient_error_sup(
        &self,
        truth: &[LocalData],
        rows: &[Vec<LocalData>],
        set: &FeasibleSet,
    ) -> Result<f64> {
        let (m_op, v) = self.error_operator(truth, rows)?;
        let center = set.center().stacked();
        Ok((&m_op * center - v).norm() + spectral_norm(&m_op) * set.outer_radius())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftKind {
    Static,
    RandomWalk,
    DecayingWalk,
}

/// How the per-worker targets evolve: at slot `t ≥ 2` the global target
/// moves by a random vector of norm `σ·t^{−ρ}` (random walk: `ρ = 0`),
/// split unevenly across workers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftModel {
    pub kind: DriftKind,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub rho: f64,
}

impl DriftModel {
    pub fn fixed() -> Self {
        Self {
            kind: DriftKind::Static,
            sigma: 0.0,
            rho: 0.0,
        }
    }

    pub fn step_norm(&self, t: usize) -> f64 {
        match self.kind {
            DriftKind::Static => 0.0,
            DriftKind::RandomWalk => self.sigma,
            DriftKind::DecayingWalk => self.sigma * (t as f64).powf(-self.rho),
        }
    }
}

fn default_a_max() -> f64 {
    1.0
}

fn default_b_scale() -> f64 {
    1.0
}

/// Serializable scenario description; matrices are regenerated from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(rename = "C")]
    pub workers: usize,
    pub dims: Vec<usize>,
    pub m: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub mu: f64,
    #[serde(default = "default_a_max")]
    pub a_max: f64,
    #[serde(default = "default_b_scale")]
    pub b_scale: f64,
    pub drift: DriftModel,
    pub seed: u64,
    pub feasible: Vec<BlockSet>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.workers == 0 {
            return bad("at least one worker is required".into());
        }
        check_dim("worker dims", self.workers, self.dims.len())?;
        check_dim("worker feasible sets", self.workers, self.feasible.len())?;
        for (c, (&d, set)) in self.dims.iter().zip(&self.feasible).enumerate() {
            if d == 0 {
                return bad(format!("worker {c} has an empty decision block"));
            }
            check_dim("feasible set dimension", d, set.dim())?;
        }
        if self.m == 0 || self.horizon == 0 {
            return bad("m and T must be positive".into());
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        if !(self.a_max > 0.0 && self.a_max.is_finite()) {
            return bad(format!("a_max must be positive, got {}", self.a_max));
        }
        if !(self.b_scale >= 0.0 && self.b_scale.is_finite()) {
            return bad(format!("b_scale must be non-negative, got {}", self.b_scale));
        }
        if !(self.drift.sigma >= 0.0 && self.drift.rho >= 0.0) {
            return bad("drift sigma and rho must be non-negative".into());
        }
        Ok(())
    }
}

/// Problem constants shared by every slot of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub mu: f64,
    /// Smoothness, max over slots.
    pub l: f64,
    /// Gradient bound over the feasible set, max over slots.
    pub d: f64,
    /// Diameter of the feasible set.
    pub r: f64,
    /// `sup ‖x‖` over the feasible set.
    pub x_max: f64,
}

/// Per-slot minimizer over the feasible set.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOptimum {
    pub x: GlobalDecision,
    pub value: f64,
    /// The unconstrained closed-form minimizer was feasible.
    pub interior: bool,
    /// Iterations of the fallback solver (0 for the closed form).
    pub iterations: usize,
}

/// A fully generated problem instance: data for every slot, the feasible
/// set, the cost family and its constants. Immutable once built.
#[derive(Debug, Clone)]
pub struct CostScenario {
    spec: Option<ScenarioSpec>,
    model: Arc<dyn CostModel>,
    data: Vec<Vec<LocalData>>,
    feasible: FeasibleSet,
    constants: Constants,
    optima: OnceLock<Result<Vec<SlotOptimum>>>,
}

impl CostScenario {
    /// Generates the coupled-quadratic scenario described by `spec`.
    pub fn generate(spec: &ScenarioSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = seed::stream(spec.seed, &[0]);
        let mut current: Vec<LocalData> = Vec::with_capacity(spec.workers);
        for &nc in &spec.dims {
            let mut a = DMatrix::from_fn(spec.m, nc, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = spectral_norm(&a);
            let target = spec.a_max * rng.random_range(0.5..=1.0);
            if norm > 0.0 {
                a *= target / norm;
            }
            let b = Vector::from_fn(spec.m, |_, _| rng.sample::<f64, _>(StandardNormal))
                * (spec.b_scale / (spec.m as f64).sqrt());
            current.push(LocalData::new(a, b)?);
        }

        let mut drift_rng = seed::stream(spec.seed, &[1]);
        let mut data = Vec::with_capacity(spec.horizon);
        data.push(current.clone());
        for t in 2..=spec.horizon {
            let step = spec.drift.step_norm(t);
            if step > 0.0 {
                let pieces: Vec<Vector> = (0..spec.workers)
                    .map(|_| {
                        Vector::from_fn(spec.m, |_, _| drift_rng.sample::<f64, _>(StandardNormal))
                    })
                    .collect();
                let total = pieces.iter().fold(Vector::zeros(spec.m), |acc, p| acc + p);
                let scale = step / total.norm();
                for (d, p) in current.iter_mut().zip(&pieces) {
                    d.b += p * scale;
                }
            }
            data.push(current.clone());
        }

        let model = Arc::new(CoupledQuadratic::new(spec.mu, spec.m)?);
        let feasible = FeasibleSet::new(spec.feasible.clone())?;
        let mut scenario = Self::from_data(model, data, feasible)?;
        scenario.spec = Some(spec.clone());
        Ok(scenario)
    }

    /// Builds a scenario from explicit per-slot data (`data[t-1][c]`).
    pub fn from_data(
        model: Arc<dyn CostModel>,
        data: Vec<Vec<LocalData>>,
        feasible: FeasibleSet,
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidParameter("scenario needs at least one slot".into()));
        }
        let dims = feasible.dims();
        for slot in &data {
            check_dim("workers per slot", dims.len(), slot.len())?;
            for (d, &nc) in slot.iter().zip(&dims) {
                check_dim("local data columns", nc, d.cols())?;
                check_dim("local data rows", model.info_dim(), d.rows())?;
            }
        }
        let mut l = 0.0f64;
        let mut d = 0.0f64;
        let mut cached: Option<(&[LocalData], f64)> = None;
        for slot in &data {
            // targets alone do not change the smoothness constant
            let same_matrices = cached.is_some_and(|(prev, _)| {
                prev.iter().zip(slot.iter()).all(|(p, s)| p.a == s.a)
            });
            let slot_l = match cached {
                Some((_, v)) if same_matrices => v,
                _ => model.smoothness(slot)?,
            };
            cached = Some((slot, slot_l));
            l = l.max(slot_l);
            d = d.max(model.gradient_bound(slot, &feasible)?);
        }
        let constants = Constants {
            mu: model.mu(),
            l,
            d,
            r: feasible.diameter(),
            x_max: feasible.max_norm(),
        };
        Ok(Self {
            spec: None,
            model,
            data,
            feasible,
            constants,
            optima: OnceLock::new(),
        })
    }

    pub fn spec(&self) -> Option<&ScenarioSpec> {
        self.spec.as_ref()
    }

    pub fn model(&self) -> &dyn CostModel {
        self.model.as_ref()
    }

    pub fn model_handle(&self) -> Arc<dyn CostModel> {
        Arc::clone(&self.model)
    }

    pub fn horizon(&self) -> usize {
        self.data.len()
    }

    pub fn num_workers(&self) -> usize {
        self.feasible.num_workers()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.feasible.dims()
    }

    pub fn feasible(&self) -> &FeasibleSet {
        &self.feasible
    }

    pub fn constants(&self) -> &Constants {
        &self.constants
    }

    pub fn mu(&self) -> f64 {
        self.constants.mu
    }

    /// All workers' data at slot `t` (1-based).
    pub fn data(&self, t: usize) -> Result<&[LocalData]> {
        if t == 0 || t > self.data.len() {
            return Err(Error::SlotOutOfRange {
                t,
                horizon: self.data.len(),
            });
        }
        Ok(&self.data[t - 1])
    }

    pub fn local_data(&self, t: usize, c: WorkerId) -> Result<&LocalData> {
        self.data(t)?.get(c.0).ok_or(Error::UnknownWorker {
            index: c.0,
            workers: self.num_workers(),
        })
    }

    fn check_decision(&self, x: &GlobalDecision) -> Result<()> {
        check_dim("decision blocks", self.num_workers(), x.num_workers())?;
        for (b, nc) in x.blocks().iter().zip(self.dims()) {
            check_dim("decision block", nc, b.len())?;
        }
        Ok(())
    }

    pub fn eval_cost(&self, t: usize, x: &GlobalDecision) -> Result<f64> {
        let data = self.data(t)?;
        self.check_decision(x)?;
        Ok(self.model.cost(data, x))
    }

    pub fn gradient(&self, t: usize, x: &GlobalDecision) -> Result<Vector> {
        let data = self.data(t)?;
        self.check_decision(x)?;
        self.model.gradient(data, x)
    }

    pub fn local_gradient(
        &self,
        t: usize,
        c: WorkerId,
        xc: &DecisionBlock,
        ginfo: &Vector,
    ) -> Result<Vector> {
        self.model
            .local_gradient(self.local_data(t, c)?, xc.as_vector(), ginfo)
    }

    /// `g_f^c` at slot `t` from true data and the given blocks of all `l ≠ c`.
    pub fn global_info(
        &self,
        t: usize,
        c: WorkerId,
        other_blocks: &[(WorkerId, &DecisionBlock)],
    ) -> Result<Vector> {
        let data = self.data(t)?;
        let mut others = Vec::with_capacity(other_blocks.len());
        for (l, xl) in other_blocks {
            let d = data.get(l.0).ok_or(Error::UnknownWorker {
                index: l.0,
                workers: data.len(),
            })?;
            others.push((*l, d, xl.as_vector()));
        }
        self.model.global_info(data.len(), c, &others)
    }

    /// `x_t^*` and `f_t(x_t^*)`: closed form when it lands inside the
    /// feasible set, projected gradient descent otherwise.
    pub fn per_slot_optimum(&self, t: usize) -> Result<SlotOptimum> {
        let data = self.data(t)?;
        let dims = self.dims();
        if let Some(x) = self.model.unconstrained_optimum(data) {
            let x = GlobalDecision::from_stacked(&x, &dims)?;
            if self.feasible.contains(&x, 0.0) {
                let value = self.model.cost(data, &x);
                return Ok(SlotOptimum {
                    x,
                    value,
                    interior: true,
                    iterations: 0,
                });
            }
            return self.iterative_optimum_from(t, &x);
        }
        self.iterative_optimum_from(t, &self.feasible.center())
    }

    /// Per-slot optima for the whole horizon, computed once and shared.
    pub fn optima(&self) -> Result<&[SlotOptimum]> {
        self.optima
            .get_or_init(|| (1..=self.horizon()).map(|t| self.per_slot_optimum(t)).collect())
            .as_ref()
            .map(Vec::as_slice)
            .map_err(Clone::clone)
    }

    /// Projected-gradient solution of the slot problem, ignoring any closed form.
    pub fn iterative_optimum(&self, t: usize) -> Result<SlotOptimum> {
        self.iterative_optimum_from(t, &self.feasible.center())
    }

    fn iterative_optimum_from(&self, t: usize, start: &GlobalDecision) -> Result<SlotOptimum> {
        let data = self.data(t)?;
        let step = self.model.smoothness(data)?;
        let mut x = self.feasible.project_global(start)?;
        let dims = self.dims();
        let mut moved = f64::INFINITY;
        for it in 1..=OPTIMUM_MAX_ITERS {
            let g = self.model.gradient(data, &x)?;
            let trial = GlobalDecision::from_stacked(&(x.stacked() - g / step), &dims)?;
            let next = self.feasible.project_global(&trial)?;
            moved = next.distance(&x);
            x = next;
            if moved <= OPTIMUM_TOL {
                let value = self.model.cost(data, &x);
                return Ok(SlotOptimum {
                    x,
                    value,
                    interior: false,
                    iterations: it,
                });
            }
        }
        Err(Error::Convergence {
            solver: "per-slot projected gradient descent",
            iterations: OPTIMUM_MAX_ITERS,
            residual: moved,
            context: format!(" at slot {t}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(a: f64, b: f64) -> LocalData {
        LocalData::new(DMatrix::from_element(1, 1, a), Vector::from_element(1, b)).unwrap()
    }

    fn one_d(data: Vec<Vec<LocalData>>, mu: f64, lo: f64, hi: f64) -> CostScenario {
        let workers = data[0].len();
        let sets = (0..workers)
            .map(|_| BlockSet::boxed(Vector::from_element(1, lo), Vector::from_element(1, hi)).unwrap())
            .collect();
        CostScenario::from_data(
            Arc::new(CoupledQuadratic::new(mu, 1).unwrap()),
            data,
            FeasibleSet::new(sets).unwrap(),
        )
        .unwrap()
    }

    fn x1(v: &[f64]) -> GlobalDecision {
        GlobalDecision::new(v.iter().map(|&x| DecisionBlock::from_slice(&[x])).collect())
    }

    pub(crate) fn small_spec(seed: u64, drift: DriftModel) -> ScenarioSpec {
        ScenarioSpec {
            workers: 3,
            dims: vec![2, 3, 2],
            m: 4,
            horizon: 20,
            mu: 0.7,
            a_max: 1.2,
            b_scale: 1.0,
            drift,
            seed,
            feasible: vec![
                BlockSet::centered_ball(2, 2.0).unwrap(),
                BlockSet::boxed(Vector::from_element(3, -1.5), Vector::from_element(3, 1.0)).unwrap(),
                BlockSet::centered_ball(2, 1.0).unwrap(),
            ],
        }
    }

    fn naive_cost(data: &[LocalData], x: &GlobalDecision, mu: f64) -> f64 {
        let m = data[0].rows();
        let mut total = 0.0;
        for i in 0..m {
            let mut r = 0.0;
            for (d, xc) in data.iter().zip(x.blocks()) {
                for j in 0..d.cols() {
                    r += d.a[(i, j)] * xc[j];
                }
                r -= d.b[i];
            }
            total += 0.5 * r * r;
        }
        for b in x.blocks() {
            for v in b.iter() {
                total += 0.5 * mu * v * v;
            }
        }
        total
    }

    #[test]
    fn eval_cost_hand_values() {
        let s = one_d(vec![vec![scalar(1.0, 0.0)]], 1.0, -10.0, 10.0);
        assert_relative_eq!(s.eval_cost(1, &x1(&[2.0])).unwrap(), 4.0);
        assert_eq!(s.eval_cost(1, &x1(&[0.0])).unwrap(), 0.0);

        let s = one_d(vec![vec![scalar(1.0, 0.4), scalar(1.0, 0.6)]], 0.5, -10.0, 10.0);
        assert_relative_eq!(s.eval_cost(1, &x1(&[0.25, 0.25])).unwrap(), 0.15625, epsilon = 1e-15);
        assert!(matches!(s.eval_cost(2, &x1(&[0.0, 0.0])), Err(Error::SlotOutOfRange { .. })));
        assert!(matches!(s.eval_cost(0, &x1(&[0.0, 0.0])), Err(Error::SlotOutOfRange { .. })));
    }

    #[test]
    fn eval_cost_matches_naive_summation() {
        let s = CostScenario::generate(&small_spec(5, DriftModel { kind: DriftKind::RandomWalk, sigma: 0.3, rho: 0.0 })).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in 1..=s.horizon() {
            let x = s.feasible().sample_uniform(&mut rng);
            let fast = s.eval_cost(t, &x).unwrap();
            let slow = naive_cost(s.data(t).unwrap(), &x, s.mu());
            assert_relative_eq!(fast, slow, max_relative = 1e-12);
        }
    }

    #[test]
    fn local_gradient_examples() {
        let s = one_d(vec![vec![scalar(1.0, 1.0)]], 1.0, -10.0, 10.0);
        let g = s
            .local_gradient(1, WorkerId(0), &DecisionBlock::from_slice(&[0.0]), &Vector::zeros(1))
            .unwrap();
        assert_eq!(g[0], -1.0);
        assert!(matches!(
            s.local_gradient(1, WorkerId(0), &DecisionBlock::from_slice(&[0.0]), &Vector::zeros(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn global_info_examples() {
        let s = one_d(vec![vec![scalar(1.0, 0.0)]], 1.0, -1.0, 1.0);
        assert_eq!(s.global_info(1, WorkerId(0), &[]).unwrap(), Vector::zeros(1));

        let s = one_d(vec![vec![scalar(1.0, 0.0), scalar(2.0, 0.3)]], 1.0, -1.0, 1.0);
        let x2 = DecisionBlock::from_slice(&[0.5]);
        let g = s.global_info(1, WorkerId(0), &[(WorkerId(1), &x2)]).unwrap();
        assert_relative_eq!(g[0], 0.7, epsilon = 1e-15);

        // missing and extra blocks
        assert!(s.global_info(1, WorkerId(0), &[]).is_err());
        assert!(s.global_info(1, WorkerId(0), &[(WorkerId(0), &x2)]).is_err());
        assert!(s
            .global_info(1, WorkerId(0), &[(WorkerId(1), &x2), (WorkerId(1), &x2)])
            .is_err());
    }

    #[test]
    fn decomposed_gradient_matches_full_gradient_and_finite_differences() {
        let s = CostScenario::generate(&small_spec(9, DriftModel::fixed())).unwrap();
        let data = s.data(1).unwrap();
        let (q, b) = stack(data);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let x = s.feasible().sample_uniform(&mut rng);
            let xs = x.stacked();
            let oracle = q.tr_mul(&(&q * &xs - &b)) + &xs * s.mu();
            let g = s.gradient(1, &x).unwrap();
            assert!((&g - &oracle).norm() <= 1e-12 * (1.0 + oracle.norm()));

            let h = 1e-6;
            for i in 0..xs.len() {
                let mut up = xs.clone();
                up[i] += h;
                let mut dn = xs.clone();
                dn[i] -= h;
                let fd = (s.eval_cost(1, &GlobalDecision::from_stacked(&up, &s.dims()).unwrap()).unwrap()
                    - s.eval_cost(1, &GlobalDecision::from_stacked(&dn, &s.dims()).unwrap()).unwrap())
                    / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-6, "component {i}: fd {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn stationarity_at_unconstrained_optimum() {
        let s = CostScenario::generate(&small_spec(2, DriftModel::fixed())).unwrap();
        let x = s.model().unconstrained_optimum(s.data(1).unwrap()).unwrap();
        let x = GlobalDecision::from_stacked(&x, &s.dims()).unwrap();
        assert!(s.gradient(1, &x).unwrap().norm() < 1e-10);
    }

    #[test]
    fn per_slot_optimum_examples() {
        let s = one_d(vec![vec![scalar(1.0, 0.0)]], 1.0, -1.0, 1.0);
        let opt = s.per_slot_optimum(1).unwrap();
        assert_eq!(opt.x.stacked()[0], 0.0);
        assert_eq!(opt.value, 0.0);
        assert!(opt.interior);

        let s = one_d(vec![vec![scalar(1.0, 1.0)]], 1.0, -10.0, 10.0);
        let opt = s.per_slot_optimum(1).unwrap();
        assert_relative_eq!(opt.x.stacked()[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(opt.value, 0.25, epsilon = 1e-15);

        // boundary optimum: minimizer 0.5 clipped to 0.2
        let s = one_d(vec![vec![scalar(1.0, 1.0)]], 1.0, -1.0, 0.2);
        let opt = s.per_slot_optimum(1).unwrap();
        assert!(!opt.interior);
        assert_relative_eq!(opt.x.stacked()[0], 0.2, epsilon = 1e-12);
    }

    #[test]
    fn iterative_optimum_matches_closed_form() {
        for seed in 0..25 {
            let mut spec = small_spec(100 + seed, DriftModel::fixed());
            spec.feasible = vec![
                BlockSet::centered_ball(2, 50.0).unwrap(),
                BlockSet::centered_ball(3, 50.0).unwrap(),
                BlockSet::centered_ball(2, 50.0).unwrap(),
            ];
            spec.horizon = 1;
            let s = CostScenario::generate(&spec).unwrap();
            let closed = s.per_slot_optimum(1).unwrap();
            assert!(closed.interior);
            let iter = s.iterative_optimum(1).unwrap();
            assert!(closed.x.distance(&iter.x) < 1e-8);
        }
    }

    #[test]
    fn generated_data_respects_a_max_and_drift() {
        let drift = DriftModel { kind: DriftKind::DecayingWalk, sigma: 0.5, rho: 0.6 };
        let s = CostScenario::generate(&small_spec(7, drift)).unwrap();
        for t in 1..=s.horizon() {
            for d in s.data(t).unwrap() {
                assert!(spectral_norm(&d.a) <= 1.2 + 1e-12);
            }
        }
        for t in 2..=s.horizon() {
            let (_, b_prev) = stack(s.data(t - 1).unwrap());
            let (_, b) = stack(s.data(t).unwrap());
            assert_relative_eq!((b - b_prev).norm(), 0.5 * (t as f64).powf(-0.6), max_relative = 1e-10);
        }
        let fixed = CostScenario::generate(&small_spec(7, DriftModel::fixed())).unwrap();
        assert!((2..=fixed.horizon()).all(|t| fixed.data(t).unwrap() == fixed.data(1).unwrap()));
        // same seed, same scenario
        let again = CostScenario::generate(&small_spec(7, drift)).unwrap();
        assert_eq!(again.data(20).unwrap(), s.data(20).unwrap());
    }

    #[test]
    fn spec_validation() {
        let mut spec = small_spec(1, DriftModel::fixed());
        spec.mu = 0.0;
        assert!(CostScenario::generate(&spec).is_err());
        let mut spec = small_spec(1, DriftModel::fixed());
        spec.dims = vec![2, 2, 2];
        assert!(matches!(CostScenario::generate(&spec), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn scenario_spec_json_shape() {
        let spec = small_spec(3, DriftModel { kind: DriftKind::DecayingWalk, sigma: 0.5, rho: 0.6 });
        let json = serde_json::to_value(&spec).unwrap();
        for key in ["C", "dims", "m", "T", "mu", "drift", "seed", "feasible"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["drift"]["kind"], "decaying-walk");
        let back: ScenarioSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn constants_certificates() {
        let drift = DriftModel { kind: DriftKind::RandomWalk, sigma: 0.2, rho: 0.0 };
        let s = CostScenario::generate(&small_spec(21, drift)).unwrap();
        let k = *s.constants();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for i in 0..10_000 {
            let t = 1 + i % s.horizon();
            let x = s.feasible().sample_uniform(&mut rng);
            let y = s.feasible().sample_uniform(&mut rng);
            let (fx, fy) = (s.eval_cost(t, &x).unwrap(), s.eval_cost(t, &y).unwrap());
            let g = s.gradient(t, &x).unwrap();
            let diff = y.stacked() - x.stacked();
            let lin = fx + g.dot(&diff);
            assert!(fy >= lin + 0.5 * k.mu * diff.norm_squared() - 1e-9);
            assert!(fy <= lin + 0.5 * k.l * diff.norm_squared() + 1e-9);
            assert!(g.norm() <= k.d);
        }
    }
}
