//! Dynamic-regret bounds and the per-slot inequalities behind them.

use serde::{Deserialize, Serialize};

use super::contraction::{step_constants, StepConstants};
use super::measures::{
    dynamic_regret, gradient_error_measures, optimal_gradient_energy, path_length,
    squared_path_length,
};
use crate::cost::CostScenario;
use crate::engine::{HiocoParams, Mode};
use crate::error::{Error, Result};
use crate::network::DelayConfig;
use crate::trace::RunTrace;

/// A bound that is only defined under a validity condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Bound {
    Valid { value: f64 },
    ConditionViolated { condition: String },
}

impl Bound {
    pub fn value(&self) -> Option<f64> {
        match self {
            Bound::Valid { value } => Some(*value),
            Bound::ConditionViolated { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measures {
    pub horizon: usize,
    /// `Π_T^*`
    pub path: f64,
    /// `Π_{2,T}^*`
    pub path2: f64,
    /// `Δ_T`
    pub delta: f64,
    /// `Δ_{2,T}`
    pub delta2: f64,
    /// `Σ_t ‖∇f_t(x_t^*)‖²`
    pub opt_grad_energy: f64,
}

/// Everything the bound formulas read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub mu: f64,
    pub l: f64,
    pub d: f64,
    pub r: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub tau_r: usize,
    pub tau: usize,
    pub j_l: usize,
    pub j_r: usize,
    pub measures: Measures,
}

impl BoundInputs {
    pub fn step_constants(&self) -> Result<StepConstants> {
        step_constants(self.mu, self.alpha, self.gamma)
    }

    fn total_steps(&self) -> i32 {
        (self.j_l + self.j_r) as i32
    }
}

/// `ξ` minimizing `S/(2ξ) + (L+ξ)K/2`; `L` when `S = 0`.
pub fn optimal_xi(s: f64, k: f64, l: f64) -> f64 {
    if s > 0.0 && k > 0.0 {
        (s / k).sqrt()
    } else {
        l
    }
}

fn bound_i_with(inputs: &BoundInputs, delay: usize) -> Result<f64> {
    let k = inputs.step_constants()?;
    let m = &inputs.measures;
    let tau = delay as f64;
    let root_j = k.eta.powi(inputs.total_steps()).sqrt();
    let inner = tau * inputs.r + tau * m.path + k.beta.sqrt() / (1.0 - k.eta.sqrt()) * m.delta;
    Ok(tau * inputs.d * inputs.r + inputs.d / (1.0 - root_j) * inner)
}

/// First bound: linear in `Π_T^*` and `Δ_T`.
pub fn first_bound(inputs: &BoundInputs) -> Result<f64> {
    bound_i_with(inputs, inputs.tau_r)
}

/// First bound with `τ` in place of `τ_r`.
pub fn local_first_bound(inputs: &BoundInputs) -> Result<f64> {
    bound_i_with(inputs, inputs.tau)
}

/// First bound with the sharper constants of the per-slot recursion:
/// `√η^J` on the warmup term, `√η^{J_l}` on the path term and
/// `(1−√η^J)/(1−√η)` on the error term.
pub fn first_bound_sharp(inputs: &BoundInputs) -> Result<f64> {
    let k = inputs.step_constants()?;
    let m = &inputs.measures;
    let tau = inputs.tau_r as f64;
    let root = k.eta.sqrt();
    let root_j = root.powi(inputs.total_steps());
    let root_jl = root.powi(inputs.j_l as i32);
    let inner = root_j * tau * inputs.r
        + root_jl * tau * m.path
        + (1.0 - root_j) / (1.0 - root) * k.beta.sqrt() * m.delta;
    Ok(tau * inputs.d * inputs.r + inputs.d / (1.0 - root_j) * inner)
}

struct SquaredForm {
    factor: f64,
    path_coef: f64,
    delta_coef: f64,
    delay: usize,
}

fn squared_bound(inputs: &BoundInputs, form: SquaredForm) -> Result<(Bound, f64)> {
    let k = inputs.step_constants()?;
    let m = &inputs.measures;
    let eta_j = k.eta.powi(inputs.total_steps());
    let gap = 1.0 - form.factor * eta_j;
    if gap <= 0.0 {
        return Ok((
            Bound::ConditionViolated {
                condition: format!("{}·η^J = {} is not below 1", form.factor, form.factor * eta_j),
            },
            f64::NAN,
        ));
    }
    let tau = form.delay as f64;
    let r2 = inputs.r * inputs.r;
    let bracket = tau * r2
        + form.path_coef * tau * tau * m.path2
        + form.delta_coef * k.beta / (1.0 - k.eta) * m.delta2;
    let kk = tau * r2 + bracket / gap;
    let xi = optimal_xi(m.opt_grad_energy, kk, inputs.l);
    let first = if m.opt_grad_energy > 0.0 {
        m.opt_grad_energy / (2.0 * xi)
    } else {
        0.0
    };
    let value = first + 0.5 * (inputs.l + xi) * kk;
    Ok((Bound::Valid { value }, xi))
}

/// Second bound (squared measures), valid when `2η^J < 1`; also returns `ξ`.
pub fn second_bound(inputs: &BoundInputs) -> Result<(Bound, f64)> {
    squared_bound(
        inputs,
        SquaredForm {
            factor: 2.0,
            path_coef: 2.0,
            delta_coef: 2.0,
            delay: inputs.tau_r,
        },
    )
}

/// Local-delay counterpart of the second bound, valid when `4η^J < 1`.
pub fn local_second_bound(inputs: &BoundInputs) -> Result<(Bound, f64)> {
    squared_bound(
        inputs,
        SquaredForm {
            factor: 4.0,
            path_coef: 6.0,
            delta_coef: 4.0,
            delay: inputs.tau,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportConstants {
    pub mu: f64,
    pub l: f64,
    pub d: f64,
    pub r: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub xi: f64,
    pub xi_local: f64,
    pub eta: f64,
    pub beta: f64,
    pub tau_r: usize,
    pub tau: usize,
    pub j_l: usize,
    pub j_r: usize,
}

pub const CONVENTIONS: &str = "x_0^* := x_1^* (first optimum displacement is zero); \
warmup slots t <= tau play seeded uniform feasible decisions and count toward regret; \
epsilon_t = max(certified data-error sup over X, largest gradient error met at an iterate)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub constants: ReportConstants,
    pub measures: Measures,
    pub regret: f64,
    pub bound_i: f64,
    /// Diagnostic: the first bound with the recursion's own constants.
    pub bound_i_sharp: f64,
    pub bound_ii: Bound,
    pub bound_local_i: f64,
    pub bound_local: Bound,
    pub conventions: String,
}

/// One enabled inequality `regret ≤ bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub bound: f64,
    pub holds: bool,
}

impl BoundReport {
    pub fn evaluate(inputs: &BoundInputs, regret: f64) -> Result<Self> {
        let k = inputs.step_constants()?;
        let (bound_ii, xi) = second_bound(inputs)?;
        let (bound_local, xi_local) = local_second_bound(inputs)?;
        Ok(Self {
            constants: ReportConstants {
                mu: inputs.mu,
                l: inputs.l,
                d: inputs.d,
                r: inputs.r,
                alpha: inputs.alpha,
                gamma: inputs.gamma,
                xi,
                xi_local,
                eta: k.eta,
                beta: k.beta,
                tau_r: inputs.tau_r,
                tau: inputs.tau,
                j_l: inputs.j_l,
                j_r: inputs.j_r,
            },
            measures: inputs.measures,
            regret,
            bound_i: first_bound(inputs)?,
            bound_i_sharp: first_bound_sharp(inputs)?,
            bound_ii,
            bound_local_i: local_first_bound(inputs)?,
            bound_local,
            conventions: CONVENTIONS.to_string(),
        })
    }

    /// The bounds that apply to a run in `mode`, skipping invalid ones.
    pub fn checks(&self, mode: Mode) -> Vec<BoundCheck> {
        let candidates: [(&'static str, Option<f64>); 2] = match mode {
            Mode::ZeroLocalDelay => [("bound_i", Some(self.bound_i)), ("bound_ii", self.bound_ii.value())],
            Mode::LocalDelay => [
                ("bound_local_i", Some(self.bound_local_i)),
                ("bound_local", self.bound_local.value()),
            ],
        };
        candidates
            .into_iter()
            .filter_map(|(name, b)| {
                b.map(|bound| BoundCheck {
                    name,
                    bound,
                    holds: self.regret <= bound,
                })
            })
            .collect()
    }

    /// Smallest applicable bound.
    pub fn tightest(&self, mode: Mode) -> f64 {
        self.checks(mode)
            .iter()
            .map(|c| c.bound)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Measures and bounds for a finished run.
pub fn report_for_run(
    scenario: &CostScenario,
    params: &HiocoParams,
    delays: &DelayConfig,
    gamma: f64,
    trace: &RunTrace,
) -> Result<BoundReport> {
    let (delta, delta2) = gradient_error_measures(trace)?;
    let k = scenario.constants();
    let inputs = BoundInputs {
        mu: k.mu,
        l: k.l,
        d: k.d,
        r: k.r,
        alpha: params.alpha,
        gamma,
        tau_r: delays.tau_r(),
        tau: delays.tau(),
        j_l: params.j_l,
        j_r: params.j_r,
        measures: Measures {
            horizon: trace.horizon(),
            path: path_length(trace)?,
            path2: squared_path_length(trace)?,
            delta,
            delta2,
            opt_grad_energy: optimal_gradient_energy(scenario)?,
        },
    };
    BoundReport::evaluate(&inputs, dynamic_regret(trace)?)
}

/// The per-slot recursion summed over the horizon:
/// `(1−√η^J)Σ_{t>τ}e_t − √η^J Σ_{t≤τ}e_t ≤ √η^{J_l}·τ·Π_T^* + c·√β·Δ_T`
/// with `c = (1−√η^J)/(1−√η)` and `e_t = ‖x_t − x_t^*‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecursionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

pub fn recursion_check(
    trace: &RunTrace,
    k: StepConstants,
    j_l: usize,
    j_r: usize,
    lag: usize,
) -> Result<RecursionCheck> {
    trace.ensure_complete()?;
    if lag == 0 {
        return Err(Error::InvalidParameter("recursion lag must be positive".into()));
    }
    let root = k.eta.sqrt();
    let root_j = root.powi((j_l + j_r) as i32);
    let root_jl = root.powi(j_l as i32);
    let (mut head, mut tail) = (0.0, 0.0);
    for r in trace.records() {
        if r.t <= lag {
            head += r.track_err();
        } else {
            tail += r.track_err();
        }
    }
    let (delta, _) = gradient_error_measures(trace)?;
    let lhs = (1.0 - root_j) * tail - root_j * head;
    let rhs = root_jl * lag as f64 * path_length(trace)?
        + (1.0 - root_j) / (1.0 - root) * k.beta.sqrt() * delta;
    Ok(RecursionCheck {
        lhs,
        rhs,
        slack: rhs - lhs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    /// Smallest `rhs − lhs` over slots `t > lag`.
    pub worst_slack: f64,
    pub worst_slot: usize,
}

/// Per-slot form: for every `t > lag`,
/// `e_t ≤ √η^{J_l}(√η^{J_r}e_{t−lag} + ‖x_t^* − x_{t−lag}^*‖ + c_r√β ε_t) + c_l√β ε_t`
/// with `c_j = (1−√η^{J_j})/(1−√η)`.
pub fn chain_check(
    trace: &RunTrace,
    k: StepConstants,
    j_l: usize,
    j_r: usize,
    lag: usize,
) -> Result<ChainCheck> {
    trace.ensure_complete()?;
    let root = k.eta.sqrt();
    let (rl, rr) = (root.powi(j_l as i32), root.powi(j_r as i32));
    let c = |r: f64| (1.0 - r) / (1.0 - root) * k.beta.sqrt();
    let recs = trace.records();
    let mut worst = ChainCheck {
        worst_slack: f64::INFINITY,
        worst_slot: 0,
    };
    for (i, r) in recs.iter().enumerate().skip(lag) {
        let back = &recs[i - lag];
        let rhs = rl * (rr * back.track_err() + r.opt.distance(&back.opt) + c(rr) * r.eps)
            + c(rl) * r.eps;
        let slack = rhs - r.track_err();
        if slack < worst.worst_slack {
            worst = ChainCheck {
                worst_slack: slack,
                worst_slot: r.t,
            };
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inputs(path: f64, path2: f64, delta: f64, delta2: f64, s: f64, tau_r: usize) -> BoundInputs {
        BoundInputs {
            mu: 1.0,
            l: 3.0,
            d: 10.0,
            r: 4.0,
            alpha: 3.0,
            gamma: 1.0,
            tau_r,
            tau: tau_r,
            j_l: 2,
            j_r: 2,
            measures: Measures {
                horizon: 100,
                path,
                path2,
                delta,
                delta2,
                opt_grad_energy: s,
            },
        }
    }

    #[test]
    fn zero_variation_collapse() {
        let inp = inputs(0.0, 0.0, 0.0, 0.0, 0.0, 2);
        let (b, xi) = second_bound(&inp).unwrap();
        assert_eq!(xi, inp.l);
        let eta: f64 = 2.0 / 3.0;
        let tr2 = 2.0 * 16.0;
        let expected = (inp.l + xi) / 2.0 * tr2 + (inp.l + xi) / (2.0 * (1.0 - 2.0 * eta.powi(4))) * tr2;
        assert!((b.value().unwrap() - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn delay_scaling() {
        let at = |tau: usize| inputs(1.5, 0.7, 0.3, 0.05, 0.0, tau);
        let b1: Vec<f64> = (1..=4).map(|t| first_bound(&at(t)).unwrap()).collect();
        // affine in τ_r: equal first differences
        let d = b1[1] - b1[0];
        for w in b1.windows(2) {
            assert!(((w[1] - w[0]) - d).abs() < 1e-9 * d);
        }
        // with S = 0 the second bound is L·K with K quadratic in τ_r via 2τ²Π₂
        let b2: Vec<f64> = (1..=3)
            .map(|t| second_bound(&at(t)).unwrap().0.value().unwrap())
            .collect();
        let eta: f64 = 2.0 / 3.0;
        let second = b2[2] - 2.0 * b2[1] + b2[0];
        let expected = 3.0 * 2.0 * (2.0 * 0.7) / (1.0 - 2.0 * eta.powi(4));
        assert!((second - expected).abs() < 1e-9 * expected, "{second} vs {expected}");
    }

    #[test]
    fn conditions_are_strict() {
        // η = 0.5 with J = 2 gives 4η² = 1 exactly
        let mut inp = inputs(0.0, 0.0, 0.0, 0.0, 0.0, 1);
        inp.alpha = 2.0;
        inp.j_l = 1;
        inp.j_r = 1;
        assert!(matches!(local_second_bound(&inp).unwrap().0, Bound::ConditionViolated { .. }));
        assert!(second_bound(&inp).unwrap().0.value().is_some());
        inp.j_l = 0;
        // 2·0.5 = 1
        assert!(matches!(second_bound(&inp).unwrap().0, Bound::ConditionViolated { .. }));
    }

    #[test]
    fn xi_minimizes_the_bound() {
        let inp = inputs(3.0, 0.5, 2.0, 0.3, 7.0, 1);
        let (b, xi) = second_bound(&inp).unwrap();
        let best = b.value().unwrap();
        let m = inp.measures;
        let eval = |xi: f64| {
            let k = inp.step_constants().unwrap();
            let gap = 1.0 - 2.0 * k.eta.powi(4);
            let bracket = 16.0 + 2.0 * m.path2 + 2.0 * k.beta / (1.0 - k.eta) * m.delta2;
            m.opt_grad_energy / (2.0 * xi) + (inp.l + xi) / 2.0 * (16.0 + bracket / gap)
        };
        assert!((eval(xi) - best).abs() < 1e-9 * best);
        for f in [0.5, 0.9, 1.1, 2.0] {
            assert!(eval(xi * f) >= best);
        }
    }

    #[test]
    fn sharp_form_never_exceeds_statement_form() {
        for &(p, d) in &[(0.0, 0.0), (5.0, 1.0), (40.0, 9.0)] {
            let inp = inputs(p, 0.0, d, 0.0, 0.0, 3);
            assert!(first_bound_sharp(&inp).unwrap() <= first_bound(&inp).unwrap());
        }
    }

    #[test]
    fn local_bound_dominates_second_bound_when_tau_l_is_zero() {
        let mut inp = inputs(2.0, 0.4, 1.0, 0.2, 0.0, 2);
        inp.j_l = 3;
        inp.j_r = 3;
        let b1 = second_bound(&inp).unwrap().0.value().unwrap();
        let b2 = local_second_bound(&inp).unwrap().0.value().unwrap();
        assert!(b2 >= b1);
    }

    #[test]
    fn report_json_shape() {
        let r = BoundReport::evaluate(&inputs(1.0, 0.1, 0.0, 0.0, 0.0, 1), 2.5).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["bound_ii"]["status"], "valid");
        for key in ["mu", "l", "d", "r", "alpha", "gamma", "xi", "eta", "beta", "tau_r", "tau", "j_l", "j_r"] {
            assert!(v["constants"].get(key).is_some(), "missing {key}");
        }
        let again = BoundReport::evaluate(&inputs(1.0, 0.1, 0.0, 0.0, 0.0, 1), 2.5).unwrap();
        assert_eq!(serde_json::to_string(&r).unwrap(), serde_json::to_string(&again).unwrap());
    }

    proptest! {
        #[test]
        fn bound_i_is_monotone(
            p in 0.0f64..50.0, dp in 0.0f64..5.0,
            d in 0.0f64..20.0, dd in 0.0f64..5.0,
            tau in 1usize..6,
        ) {
            let base = first_bound(&inputs(p, 0.0, d, 0.0, 0.0, tau)).unwrap();
            prop_assert!(first_bound(&inputs(p + dp, 0.0, d, 0.0, 0.0, tau)).unwrap() >= base);
            prop_assert!(first_bound(&inputs(p, 0.0, d + dd, 0.0, 0.0, tau)).unwrap() >= base);
            prop_assert!(first_bound(&inputs(p, 0.0, d, 0.0, 0.0, tau + 1)).unwrap() >= base);
            let (b, _) = second_bound(&inputs(p, dp, d, dd, 1.0, tau)).unwrap();
            prop_assert!(b.value().unwrap().is_finite() && b.value().unwrap() >= 0.0);
        }
    }
}
