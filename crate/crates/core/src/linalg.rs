//! Small dense linear-algebra helpers: power iteration for the top eigenvalue
//! of a Gram matrix, operator norms, and a projected solver for convex
//! quadratics over a product feasible set.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{FeasibleSet, GlobalDecision, Vector};

/// Result of [`gram_top_eigenvalue`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopEigen {
    /// Rayleigh quotient at the final iterate.
    pub value: f64,
    /// `‖QᵀQv − λv‖` at the final iterate.
    pub residual: f64,
    pub iterations: usize,
}

const POWER_MAX_ITERS: usize = 200_000;

/// Largest eigenvalue of `QᵀQ` by power iteration, stopped once the
/// Rayleigh quotient changes by less than `rel_tol` (relative).
///
/// The estimate is accepted only if the eigen-residual of the final iterate
/// is small relative to the eigenvalue.
pub fn gram_top_eigenvalue(q: &DMatrix<f64>, rel_tol: f64) -> Result<TopEigen> {
    let n = q.ncols();
    if n == 0 || q.nrows() == 0 {
        return Ok(TopEigen {
            value: 0.0,
            residual: 0.0,
            iterations: 0,
        });
    }
    // deterministic start with no symmetry that could be orthogonal to the top vector
    let mut v = Vector::from_fn(n, |i, _| 1.0 + 0.1 * ((i * 7919 % 97) as f64 / 97.0));
    v /= v.norm();
    let mut lambda = 0.0;
    for it in 1..=POWER_MAX_ITERS {
        let w = q.tr_mul(&(q * &v));
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(TopEigen {
                value: 0.0,
                residual: 0.0,
                iterations: it,
            });
        }
        v = w / norm;
        if (next - lambda).abs() <= rel_tol * next.abs() {
            let av = q.tr_mul(&(q * &v));
            let value = v.dot(&av);
            let residual = (av - &v * value).norm();
            // the converged Rayleigh quotient must be an eigenvalue to working accuracy
            if residual > 1e-4 * value.max(f64::MIN_POSITIVE) {
                return Err(Error::Convergence {
                    solver: "power iteration",
                    iterations: it,
                    residual,
                    context: format!(" (Rayleigh quotient {value})"),
                });
            }
            return Ok(TopEigen {
                value,
                residual,
                iterations: it,
            });
        }
        lambda = next;
    }
    Err(Error::Convergence {
        solver: "power iteration",
        iterations: POWER_MAX_ITERS,
        residual: f64::NAN,
        context: String::new(),
    })
}

/// Spectral norm (largest singular value) of a general matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Outcome of [`minimize_quadratic`].
#[derive(Debug, Clone)]
pub struct QuadraticSolution {
    pub x: Vector,
    pub iterations: usize,
    pub step_norm: f64,
}

/// Minimizes `½xᵀPx − qᵀx` over `set` (blocks stacked in worker order) by
/// projected gradient descent with step `1/smoothness`, stopping once the
/// step length drops below `tol`.
pub fn minimize_quadratic(
    p: &DMatrix<f64>,
    q: &Vector,
    set: &FeasibleSet,
    smoothness: f64,
    start: &Vector,
    tol: f64,
    max_iters: usize,
) -> Result<QuadraticSolution> {
    let dims = set.dims();
    let project = |v: &Vector| -> Result<Vector> {
        Ok(set
            .project_global(&GlobalDecision::from_stacked(v, &dims)?)?
            .stacked())
    };
    let mut x = project(start)?;
    let mut step_norm = f64::INFINITY;
    for it in 1..=max_iters {
        let grad = p * &x - q;
        let next = project(&(&x - grad / smoothness))?;
        step_norm = (&next - &x).norm();
        x = next;
        if step_norm <= tol {
            return Ok(QuadraticSolution {
                x,
                iterations: it,
                step_norm,
            });
        }
    }
    Err(Error::Convergence {
        solver: "projected gradient descent",
        iterations: max_iters,
        residual: step_norm,
        context: String::new(),
    })
}
