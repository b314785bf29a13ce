//! One projected step with a perturbed gradient contracts toward the
//! minimizer: `‖z − x*‖² ≤ η‖y − x*‖² + β‖∇f̂(y) − ∇f(y)‖²`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::minimize_quadratic;
use crate::model::{FeasibleSet, GlobalDecision, Vector};

/// Contraction factor and error gain of one estimated projected step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConstants {
    pub eta: f64,
    pub beta: f64,
}

/// `η = (α−μ)/(α+μ−γ)`, `β = 1/(γ(α+μ−γ))` for `α ≥ μ > 0`, `0 < γ < 2μ`.
pub fn step_constants(mu: f64, alpha: f64, gamma: f64) -> Result<StepConstants> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    if !(alpha >= mu && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha} must be at least mu = {mu}"
        )));
    }
    if !(gamma > 0.0 && gamma < 2.0 * mu) {
        return Err(Error::InvalidParameter(format!(
            "gamma = {gamma} must lie in (0, 2 mu) = (0, {})",
            2.0 * mu
        )));
    }
    let denom = alpha + mu - gamma;
    Ok(StepConstants {
        eta: (alpha - mu) / denom,
        beta: 1.0 / (gamma * denom),
    })
}

/// `f(x) = ½xᵀPx − qᵀx` restricted to a product set.
#[derive(Debug, Clone)]
pub struct QuadraticInstance {
    pub p: DMatrix<f64>,
    pub q: Vector,
    pub set: FeasibleSet,
    pub mu: f64,
    pub l: f64,
}

impl QuadraticInstance {
    pub fn gradient(&self, x: &Vector) -> Vector {
        &self.p * x - &self.q
    }

    /// Exact minimizer when the unconstrained one is feasible, otherwise
    /// projected gradient descent to a step length of `1e−14`.
    pub fn minimizer(&self) -> Result<Vector> {
        let dims = self.set.dims();
        if let Some(ch) = self.p.clone().cholesky() {
            let x = ch.solve(&self.q);
            if self.set.contains(&GlobalDecision::from_stacked(&x, &dims)?, 0.0) {
                return Ok(x);
            }
        }
        let start = self.set.center().stacked();
        Ok(minimize_quadratic(&self.p, &self.q, &self.set, self.l, &start, 1e-14, 2_000_000)?.x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionVerdict {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub slack: f64,
    pub eta: f64,
    pub beta: f64,
}

/// Takes `z = P_X(y − (∇f(y) + e)/α)` and evaluates both sides.
pub fn contraction_check(
    instance: &QuadraticInstance,
    y: &Vector,
    gamma: f64,
    alpha: f64,
    error: &Vector,
) -> Result<ContractionVerdict> {
    if alpha < instance.l {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha} is below L = {}",
            instance.l
        )));
    }
    let k = step_constants(instance.mu, alpha, gamma)?;
    let x_star = instance.minimizer()?;
    contraction_check_at(instance, &x_star, y, k, alpha, error)
}

/// As [`contraction_check`] with a precomputed minimizer.
pub fn contraction_check_at(
    instance: &QuadraticInstance,
    x_star: &Vector,
    y: &Vector,
    k: StepConstants,
    alpha: f64,
    error: &Vector,
) -> Result<ContractionVerdict> {
    let dims = instance.set.dims();
    let estimated = instance.gradient(y) + error;
    let trial = GlobalDecision::from_stacked(&(y - estimated / alpha), &dims)?;
    let z = instance.set.project_global(&trial)?.stacked();
    let lhs = (&z - x_star).norm_squared();
    let rhs = k.eta * (y - x_star).norm_squared() + k.beta * error.norm_squared();
    Ok(ContractionVerdict {
        lhs,
        rhs,
        slack: rhs - lhs,
        eta: k.eta,
        beta: k.beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BlockSet;
    use proptest::prelude::*;

    #[test]
    fn constants_example() {
        let k = step_constants(1.0, 2.0, 1.0).unwrap();
        assert_eq!((k.eta, k.beta), (0.5, 0.5));
    }

    #[test]
    fn domain_violations() {
        assert!(step_constants(1.0, 0.5, 1.0).is_err());
        assert!(step_constants(1.0, 2.0, 2.0).is_err());
        assert!(step_constants(1.0, 2.0, 0.0).is_err());
        assert!(step_constants(0.0, 2.0, 0.5).is_err());
    }

    fn instance(diag: &[f64], q: &[f64], radius: f64) -> QuadraticInstance {
        let p = DMatrix::from_diagonal(&Vector::from_row_slice(diag));
        let mu = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        let l = diag.iter().cloned().fold(0.0, f64::max);
        QuadraticInstance {
            p,
            q: Vector::from_row_slice(q),
            set: FeasibleSet::new(vec![BlockSet::centered_ball(diag.len(), radius).unwrap()]).unwrap(),
            mu,
            l,
        }
    }

    #[test]
    fn exact_gradient_at_minimizer_is_fixed() {
        let inst = instance(&[1.0, 3.0], &[0.5, -0.3], 5.0);
        let x_star = inst.minimizer().unwrap();
        let v = contraction_check(&inst, &x_star, 1.0, 3.0, &Vector::zeros(2)).unwrap();
        assert!(v.lhs < 1e-28 && v.rhs < 1e-28);
    }

    #[test]
    fn boundary_minimizer() {
        let inst = instance(&[1.0, 1.0], &[4.0, 0.0], 1.0);
        let x = inst.minimizer().unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && x[1].abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn contraction_holds(
            d0 in 0.5f64..2.0, ratio in 1.0f64..10.0,
            q in proptest::collection::vec(-4.0f64..4.0, 2),
            y in proptest::collection::vec(-1.0f64..1.0, 2),
            e in proptest::collection::vec(-2.0f64..2.0, 2),
            a in 1.0f64..2.0, g in 0.1f64..1.9,
        ) {
            let inst = instance(&[d0, d0 * ratio], &q, 1.5);
            let yv = Vector::from_row_slice(&y);
            let v = contraction_check(&inst, &yv, g * d0, a * d0 * ratio, &Vector::from_row_slice(&e)).unwrap();
            prop_assert!(v.slack >= -1e-9, "slack {}", v.slack);
        }
    }
}
