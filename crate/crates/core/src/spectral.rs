//! Principal eigenpair of the linearized dispersal-growth operator.
//!
//! The matrix `r0 * K` has strictly positive entries, so its spectral radius
//! is a simple eigenvalue with a strictly positive eigenvector. Power
//! iteration with sup-norm normalization converges to that pair; we accept
//! only when the eigenvalue drift and the residual are both below tolerance,
//! and positivity of the iterate is asserted at every step.

use crate::discretize::{sup_norm, DiscreteOperator};
use crate::error::{Error, Result};
use serde::Serialize;

/// Principal eigenvalue and eigenfunction (node values, normalized to
/// sup-norm one) plus convergence diagnostics.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda0: f64,
    pub phi0: Vec<f64>,
    /// Sup-norm of `r0 * K * phi0 - lambda0 * phi0` at acceptance.
    pub residual: f64,
    pub iterations: usize,
}

/// Power iteration on `r0 * K`, starting from the constant vector.
///
/// Accepts once the eigenvalue moves by less than `tol * lambda` between
/// steps *and* the residual drops below `tol`. If the top of the spectrum is
/// numerically tied the residual plateaus above `tol` and the routine reports
/// `NoConvergence` instead of silently picking a direction.
pub fn principal_eigen(
    op: &DiscreteOperator,
    r0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<EigenPair> {
    if !r0.is_finite() || r0 <= 0.0 {
        return Err(Error::InvalidGrowth(format!(
            "low-density growth r0 must be positive, got {r0}"
        )));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::PreconditionUnmet(format!(
            "eigen tolerance must be positive, got {tol}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::PreconditionUnmet(
            "max_iter must be at least 1".into(),
        ));
    }

    let n = op.len();
    let mut v = vec![1.0; n];
    let mut prev_lambda: Option<f64> = None;
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for iteration in 1..=max_iter {
        let y = op.apply_linearized(r0, &v)?;
        for (index, value) in y.iter().enumerate() {
            if !value.is_finite() || *value <= 0.0 {
                return Err(Error::NonPositiveIterate {
                    iteration,
                    index,
                    value: *value,
                });
            }
        }
        lambda = sup_norm(&y);
        residual = y
            .iter()
            .zip(&v)
            .fold(0.0f64, |acc, (yi, vi)| acc.max((yi - lambda * vi).abs()));
        let drift_ok = prev_lambda.is_some_and(|p| (lambda - p).abs() < tol * lambda);
        if drift_ok && residual < tol {
            return Ok(EigenPair {
                lambda0: lambda,
                phi0: v,
                residual,
                iterations: iteration,
            });
        }
        prev_lambda = Some(lambda);
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = yi / lambda;
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        last_estimate: lambda,
        residual,
    })
}

/// Outcome of comparing the principal eigenvalue against the closed-form
/// lower bound `r0 * delta * |domain|`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub lambda0: f64,
    pub lower_bound: f64,
    /// `lambda0 - lower_bound`; negative means the declared bound is refuted.
    pub margin: f64,
    pub passed: bool,
}

/// Check `lambda0 >= r0 * delta * |domain| - tol` using the kernel's
/// *declared* lower bound. A failure here with a sampled-valid kernel would
/// indicate an assembly defect; with an over-declared `delta` it simply
/// refutes the declaration.
pub fn check_spectral_lower_bound(
    op: &DiscreteOperator,
    pair: &EigenPair,
    r0: f64,
    tol: f64,
) -> BoundReport {
    let lower_bound = r0 * op.kernel().delta() * op.grid().partition().domain_length();
    let margin = pair.lambda0 - lower_bound;
    BoundReport {
        lambda0: pair.lambda0,
        lower_bound,
        margin,
        passed: margin >= -tol,
    }
}

/// Outcome of the eigenfunction positivity floor check.
#[derive(Debug, Clone, Serialize)]
pub struct FloorReport {
    pub floor: f64,
    pub min_phi0: f64,
    pub margin: f64,
    pub passed: bool,
}

/// Check the pointwise floor `phi0 >= (r0 * delta / lambda0) * integral phi0`:
/// the eigenfunction cannot dip below what the kernel's lower bound pumps in
/// from its own total mass.
pub fn check_positivity_floor(
    op: &DiscreteOperator,
    pair: &EigenPair,
    r0: f64,
    tol: f64,
) -> FloorReport {
    let integral = op.grid().integral(&pair.phi0);
    let floor = r0 * op.kernel().delta() / pair.lambda0 * integral;
    let min_phi0 = pair.phi0.iter().copied().fold(f64::INFINITY, f64::min);
    let margin = min_phi0 - floor;
    FloorReport {
        floor,
        min_phi0,
        margin,
        passed: margin >= -tol,
    }
}

/// Outcome of the sub-replacement (mortality) bound check.
#[derive(Debug, Clone, Serialize)]
pub struct MortalityReport {
    /// True when every row mass is at most one and `r0 <= 1`; only then does
    /// the bound apply.
    pub applicable: bool,
    pub max_row_mass: f64,
    pub r0: f64,
    pub lambda0: f64,
    pub passed: bool,
}

/// When the kernel redistributes without amplifying (`integral k <= 1`
/// row-wise, up to quadrature noise) and growth is sub-replacement
/// (`r0 <= 1`), the principal eigenvalue cannot exceed one. Not applicable
/// scenarios pass vacuously.
pub fn check_mortality_bound(
    op: &DiscreteOperator,
    pair: &EigenPair,
    r0: f64,
    tol: f64,
) -> MortalityReport {
    let max_row_mass = (0..op.len()).fold(0.0f64, |acc, i| acc.max(op.row_mass(i)));
    let applicable = max_row_mass <= 1.0 + 1e-12 && r0 <= 1.0;
    let passed = !applicable || pair.lambda0 <= 1.0 + tol;
    MortalityReport {
        applicable,
        max_row_mass,
        r0,
        lambda0: pair.lambda0,
        passed,
    }
}
