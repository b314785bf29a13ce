//! Decision vectors, per-worker feasible sets, Euclidean projection and the
//! projected gradient step shared by the master and worker subproblems.
//!
//! Every feasible set is a product of per-worker balls or boxes so that the
//! projection, and therefore every subproblem solution, is exact.

use std::fmt;
use std::ops::Deref;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

pub type Vector = DVector<f64>;

/// Dense worker index in `0..C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WorkerId(pub usize);

impl WorkerId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for WorkerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "worker-{}", self.0)
    }
}

/// One worker's local decision vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionBlock(Vector);

impl DecisionBlock {
    pub fn new(values: Vector) -> Self {
        Self(values)
    }

    pub fn from_slice(values: &[f64]) -> Self {
        Self(Vector::from_column_slice(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(Vector::zeros(dim))
    }

    pub fn as_vector(&self) -> &Vector {
        &self.0
    }

    pub fn into_inner(self) -> Vector {
        self.0
    }
}

impl Deref for DecisionBlock {
    type Target = Vector;

    fn deref(&self) -> &Vector {
        &self.0
    }
}

/// Concatenation `[x^1; ...; x^C]` of the per-worker blocks, ordered by worker id.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalDecision {
    blocks: Vec<DecisionBlock>,
}

impl GlobalDecision {
    pub fn new(blocks: Vec<DecisionBlock>) -> Self {
        Self { blocks }
    }

    /// Splits a stacked vector according to `dims`.
    pub fn from_stacked(stacked: &Vector, dims: &[usize]) -> Result<Self> {
        check_dim("stacked decision", dims.iter().sum(), stacked.len())?;
        let mut offset = 0;
        let blocks = dims
            .iter()
            .map(|&d| {
                let block = DecisionBlock::new(stacked.rows(offset, d).into_owned());
                offset += d;
                block
            })
            .collect();
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[DecisionBlock] {
        &self.blocks
    }

    pub fn block(&self, c: WorkerId) -> &DecisionBlock {
        &self.blocks[c.0]
    }

    pub fn num_workers(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).sum()
    }

    pub fn stacked(&self) -> Vector {
        let mut out = Vector::zeros(self.dim());
        let mut offset = 0;
        for b in &self.blocks {
            out.rows_mut(offset, b.len()).copy_from(b.as_vector());
            offset += b.len();
        }
        out
    }

    pub fn distance(&self, other: &GlobalDecision) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a.as_vector() - b.as_vector()).norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

/// Serializable descriptor of a per-worker set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SetSpec {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

/// A per-worker convex set with a closed-form projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetSpec", into = "SetSpec")]
pub enum BlockSet {
    Ball { center: Vector, radius: f64 },
    Box { lower: Vector, upper: Vector },
}

impl TryFrom<SetSpec> for BlockSet {
    type Error = Error;

    fn try_from(spec: SetSpec) -> Result<Self> {
        match spec {
            SetSpec::Ball { center, radius } => BlockSet::ball(Vector::from_vec(center), radius),
            SetSpec::Box { lower, upper } => {
                BlockSet::boxed(Vector::from_vec(lower), Vector::from_vec(upper))
            }
        }
    }
}

impl From<BlockSet> for SetSpec {
    fn from(set: BlockSet) -> Self {
        match set {
            BlockSet::Ball { center, radius } => SetSpec::Ball {
                center: center.as_slice().to_vec(),
                radius,
            },
            BlockSet::Box { lower, upper } => SetSpec::Box {
                lower: lower.as_slice().to_vec(),
                upper: upper.as_slice().to_vec(),
            },
        }
    }
}

impl BlockSet {
    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidSet(format!("ball radius must be positive, got {radius}")));
        }
        if center.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSet("ball center must be finite".into()));
        }
        Ok(BlockSet::Ball { center, radius })
    }

    pub fn centered_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::ball(Vector::zeros(dim), radius)
    }

    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self> {
        check_dim("box bounds", lower.len(), upper.len())?;
        if lower
            .iter()
            .zip(upper.iter())
            .any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u))
        {
            return Err(Error::InvalidSet("box requires finite lower <= upper".into()));
        }
        Ok(BlockSet::Box { lower, upper })
    }

    pub fn dim(&self) -> usize {
        match self {
            BlockSet::Ball { center, .. } => center.len(),
            BlockSet::Box { lower, .. } => lower.len(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            BlockSet::Ball { radius, .. } => 2.0 * radius,
            BlockSet::Box { lower, upper } => (upper - lower).norm(),
        }
    }

    pub fn center(&self) -> Vector {
        match self {
            BlockSet::Ball { center, .. } => center.clone(),
            BlockSet::Box { lower, upper } => (lower + upper) * 0.5,
        }
    }

    /// Largest distance from [`BlockSet::center`] to a point of the set.
    pub fn outer_radius(&self) -> f64 {
        match self {
            BlockSet::Ball { radius, .. } => *radius,
            BlockSet::Box { lower, upper } => 0.5 * (upper - lower).norm(),
        }
    }

    /// `sup ‖x‖` over the set.
    pub fn max_norm(&self) -> f64 {
        match self {
            BlockSet::Ball { center, radius } => center.norm() + radius,
            BlockSet::Box { lower, upper } => lower
                .iter()
                .zip(upper.iter())
                .map(|(l, u)| l.abs().max(u.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    pub fn project(&self, point: &Vector) -> Vector {
        match self {
            BlockSet::Ball { center, radius } => {
                let offset = point - center;
                let dist = offset.norm();
                if dist <= *radius {
                    point.clone()
                } else {
                    center + offset * (*radius / dist)
                }
            }
            BlockSet::Box { lower, upper } => Vector::from_iterator(
                point.len(),
                point
                    .iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|(p, (l, u))| p.clamp(*l, *u)),
            ),
        }
    }

    pub fn contains(&self, point: &Vector, tol: f64) -> bool {
        match self {
            BlockSet::Ball { center, radius } => (point - center).norm() <= radius + tol,
            BlockSet::Box { lower, upper } => point
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .all(|(p, (l, u))| *p >= l - tol && *p <= u + tol),
        }
    }

    /// Uniform sample: radius-scaled normalized Gaussian for balls,
    /// per-coordinate uniform for boxes.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        match self {
            BlockSet::Ball { center, radius } => {
                let n = center.len();
                let dir = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                let norm = dir.norm();
                let u: f64 = rng.random();
                let r = radius * u.powf(1.0 / n as f64);
                if norm == 0.0 {
                    center.clone()
                } else {
                    center + dir * (r / norm)
                }
            }
            BlockSet::Box { lower, upper } => Vector::from_fn(lower.len(), |i, _| {
                let u: f64 = rng.random();
                lower[i] + u * (upper[i] - lower[i])
            }),
        }
    }
}

/// Cartesian product of the per-worker sets, with its exact diameter `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleSet {
    blocks: Vec<BlockSet>,
    diameter: f64,
}

impl FeasibleSet {
    pub fn new(blocks: Vec<BlockSet>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidSet("at least one worker set is required".into()));
        }
        let diameter = blocks
            .iter()
            .map(|b| b.diameter().powi(2))
            .sum::<f64>()
            .sqrt();
        Ok(Self { blocks, diameter })
    }

    pub fn blocks(&self) -> &[BlockSet] {
        &self.blocks
    }

    pub fn num_workers(&self) -> usize {
        self.blocks.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(BlockSet::dim).collect()
    }

    pub fn block(&self, c: WorkerId) -> Result<&BlockSet> {
        self.blocks.get(c.0).ok_or(Error::UnknownWorker {
            index: c.0,
            workers: self.blocks.len(),
        })
    }

    /// Exact diameter of the product set.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// `sup ‖x‖` over the product set.
    pub fn max_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.max_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn center(&self) -> GlobalDecision {
        GlobalDecision::new(
            self.blocks
                .iter()
                .map(|b| DecisionBlock::new(b.center()))
                .collect(),
        )
    }

    /// Largest distance from [`FeasibleSet::center`] to a feasible point.
    pub fn outer_radius(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.outer_radius().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &GlobalDecision, tol: f64) -> bool {
        x.num_workers() == self.blocks.len()
            && self
                .blocks
                .iter()
                .zip(x.blocks())
                .all(|(set, b)| b.len() == set.dim() && set.contains(b, tol))
    }

    pub fn project_global(&self, x: &GlobalDecision) -> Result<GlobalDecision> {
        check_dim("global decision", self.blocks.len(), x.num_workers())?;
        x.blocks()
            .iter()
            .enumerate()
            .map(|(c, b)| project(self, WorkerId(c), b))
            .collect::<Result<Vec<_>>>()
            .map(GlobalDecision::new)
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> GlobalDecision {
        GlobalDecision::new(
            self.blocks
                .iter()
                .map(|b| DecisionBlock::new(b.sample_uniform(rng)))
                .collect(),
        )
    }
}

/// Euclidean projection of `point` onto worker `worker`'s set.
pub fn project(set: &FeasibleSet, worker: WorkerId, point: &Vector) -> Result<DecisionBlock> {
    let block = set.block(worker)?;
    check_dim("projection point", block.dim(), point.len())?;
    Ok(DecisionBlock::new(block.project(point)))
}

/// Exact minimizer of `⟨g, x − y⟩ + (α/2)‖x − y‖²` over the worker's set,
/// i.e. `project(y − g/α)`.
pub fn gradient_step(
    set: &FeasibleSet,
    worker: WorkerId,
    y: &DecisionBlock,
    g: &Vector,
    alpha: f64,
) -> Result<DecisionBlock> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step parameter alpha must be positive, got {alpha}"
        )));
    }
    check_dim("gradient", y.len(), g.len())?;
    project(set, worker, &(y.as_vector() - g / alpha))
}
