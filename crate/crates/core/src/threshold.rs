//! Threshold location: the critical low-density growth factor and
//! extinction/persistence sweeps over scenario parameters.
//!
//! Because the linearized operator is `r0 * K`, its principal eigenvalue is
//! exactly linear in `r0`, and the persistence threshold in `r0` is the
//! reciprocal of the eigenvalue at `r0 = 1`. Sweeps over other parameters
//! sample the eigenvalue on an even lattice and bisect each extinction /
//! persistence transition down to a millionth of the sweep range.

use crate::discretize::DiscreteOperator;
use crate::dynamics::{classify_regime, Regime};
use crate::error::{Error, Result};
use crate::landscape::{validate_assumptions, GrowthFunction, KernelForm, KernelSpec};
use crate::spectral::principal_eigen;
use serde::{Deserialize, Serialize};

/// Relative bracket width at which bisection stops.
pub const BISECTION_REFINEMENT: f64 = 1e-6;
/// Allowed backwards drift before a sweep expected to be monotone is
/// declared broken.
pub const MONOTONE_SLACK: f64 = 1e-10;
/// Lattice size per axis for sweep endpoint hypothesis checks.
const ENDPOINT_SAMPLES: usize = 16;

/// Which scenario parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Low-density growth factor.
    R0,
    /// Domain half-length, keeping interfaces fixed.
    DomainHalfLength,
    /// Kernel block coefficient `c`, set to the swept value on the
    /// designated blocks.
    KernelCoefficient,
    /// Kernel block decay rate `b` (exponential blocks only).
    KernelDecay,
}

impl std::fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            SweepParameter::R0 => "r0",
            SweepParameter::DomainHalfLength => "domain_half_length",
            SweepParameter::KernelCoefficient => "kernel_coefficient",
            SweepParameter::KernelDecay => "kernel_decay",
        };
        f.write_str(name)
    }
}

/// A sweep: which parameter, over which range, at how many lattice points.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    /// Kernel blocks touched by coefficient/decay sweeps; `None` means all
    /// blocks. Ignored for the other parameters.
    pub pairs: Option<Vec<(usize, usize)>>,
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
}

/// Base scenario a sweep perturbs, plus eigensolver settings.
#[derive(Debug, Clone, Copy)]
pub struct SweepContext<'a> {
    pub kernel: &'a KernelSpec,
    pub growth: &'a GrowthFunction,
    pub panels_per_patch: usize,
    pub gauss_order: usize,
    pub eigen_tol: f64,
    pub max_eigen_iterations: usize,
}

/// One sampled point of the phase diagram.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseRow {
    pub value: f64,
    pub lambda0: f64,
    pub regime: Regime,
}

/// One refined extinction/persistence transition.
#[derive(Debug, Clone, Serialize)]
pub struct Crossing {
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    /// Bracket midpoint after refinement.
    pub critical: f64,
    pub lambda0_at_critical: f64,
}

/// Sweep result: the sampled rows and every refined crossing.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseTable {
    pub parameter: SweepParameter,
    pub rows: Vec<PhaseRow>,
    pub crossings: Vec<Crossing>,
}

/// The growth factor at which the principal eigenvalue equals one, via
/// linearity: `critical_r0 = 1 / lambda0(1)`.
///
/// A post-check re-solves the eigenproblem at the reported threshold and
/// requires `|lambda0 - 1| <= tol`; internal eigensolves run at
/// `min(tol, 1e-12)`.
pub fn critical_r0(op: &DiscreteOperator, tol: f64, max_iter: usize) -> Result<f64> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::PreconditionUnmet(format!(
            "threshold tolerance must be positive, got {tol}"
        )));
    }
    let eigen_tol = tol.min(1e-12);
    let unit = principal_eigen(op, 1.0, eigen_tol, max_iter)?;
    let r_star = 1.0 / unit.lambda0;
    let check = principal_eigen(op, r_star, eigen_tol, max_iter)?;
    if (check.lambda0 - 1.0).abs() > tol {
        return Err(Error::PreconditionUnmet(format!(
            "threshold post-check failed: lambda0({r_star}) = {} is not within {tol} of 1",
            check.lambda0
        )));
    }
    Ok(r_star)
}

/// Indices `i` such that the persistence predicate `lambda0 > 1` flips
/// between rows `i` and `i + 1`.
pub(crate) fn transition_indices(lambdas: &[f64]) -> Vec<usize> {
    lambdas
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0] > 1.0) != (w[1] > 1.0))
        .map(|(i, _)| i)
        .collect()
}

/// First adjacent pair where the eigenvalue drops by more than the slack,
/// as `(parameter value, lambda, previous lambda)`.
pub(crate) fn first_monotone_violation(
    values: &[f64],
    lambdas: &[f64],
    slack: f64,
) -> Option<(f64, f64, f64)> {
    for i in 1..lambdas.len() {
        if lambdas[i] < lambdas[i - 1] - slack {
            return Some((values[i], lambdas[i], lambdas[i - 1]));
        }
    }
    None
}

fn scenario_at(
    ctx: &SweepContext<'_>,
    spec: &SweepSpec,
    value: f64,
) -> Result<(KernelSpec, GrowthFunction)> {
    match spec.parameter {
        SweepParameter::R0 => Ok((
            ctx.kernel.clone(),
            ctx.growth.with_low_density_growth(value)?,
        )),
        SweepParameter::DomainHalfLength => {
            Ok((ctx.kernel.with_half_length(value)?, ctx.growth.clone()))
        }
        SweepParameter::KernelCoefficient | SweepParameter::KernelDecay => {
            let patch_count = ctx.kernel.partition().patch_count();
            let targets: Vec<(usize, usize)> = match &spec.pairs {
                Some(pairs) => pairs.clone(),
                None => (0..patch_count)
                    .flat_map(|i| (0..patch_count).map(move |j| (i, j)))
                    .collect(),
            };
            let mut replacements = Vec::with_capacity(targets.len());
            for (i, j) in targets {
                if i >= patch_count || j >= patch_count {
                    return Err(Error::InvalidKernel(format!(
                        "sweep block ({i}, {j}) is out of range for {patch_count} patches"
                    )));
                }
                let form = match (spec.parameter, ctx.kernel.block(i, j)) {
                    (SweepParameter::KernelCoefficient, KernelForm::Constant { .. }) => {
                        KernelForm::Constant { c: value }
                    }
                    (SweepParameter::KernelCoefficient, KernelForm::Exponential { b, .. }) => {
                        KernelForm::Exponential { c: value, b }
                    }
                    (SweepParameter::KernelDecay, KernelForm::Exponential { c, .. }) => {
                        KernelForm::Exponential { c, b: value }
                    }
                    (SweepParameter::KernelDecay, KernelForm::Constant { .. }) => {
                        return Err(Error::InvalidKernel(format!(
                            "decay sweep targets the constant block ({i}, {j})"
                        )));
                    }
                    _ => unreachable!("outer match restricts the parameter"),
                };
                replacements.push((i, j, form));
            }
            Ok((ctx.kernel.with_blocks(&replacements)?, ctx.growth.clone()))
        }
    }
}

fn eigen_at(ctx: &SweepContext<'_>, spec: &SweepSpec, value: f64) -> Result<(f64, Regime)> {
    let (kernel, growth) = scenario_at(ctx, spec, value)?;
    let r0 = growth.low_density_growth();
    let op = DiscreteOperator::from_kernel(kernel, ctx.panels_per_patch, ctx.gauss_order)?;
    let pair = principal_eigen(&op, r0, ctx.eigen_tol, ctx.max_eigen_iterations)?;
    Ok((pair.lambda0, classify_regime(&growth, pair.lambda0)))
}

/// Sample the phase diagram along one parameter and refine every
/// extinction/persistence transition by bisection.
///
/// Both endpoints must produce scenarios whose sampled hypothesis checks
/// pass, so every point of the sweep is a well-posed problem. For parameter
/// families where the eigenvalue is provably nondecreasing (growth factor,
/// block coefficients, and domain length over all-constant kernels) the
/// sampled values are checked against that shape; more than one transition
/// is reported as `NonMonotoneCrossing` with every bracket listed.
pub fn sweep(ctx: &SweepContext<'_>, spec: &SweepSpec) -> Result<PhaseTable> {
    if !(spec.lo.is_finite() && spec.hi.is_finite()) || spec.lo >= spec.hi {
        return Err(Error::PreconditionUnmet(format!(
            "sweep range [{}, {}] must be a nonempty interval",
            spec.lo, spec.hi
        )));
    }
    if spec.samples < 2 {
        return Err(Error::PreconditionUnmet(format!(
            "sweep needs at least 2 samples, got {}",
            spec.samples
        )));
    }
    for endpoint in [spec.lo, spec.hi] {
        let (kernel, growth) = scenario_at(ctx, spec, endpoint)?;
        let report = validate_assumptions(&kernel, &growth, ENDPOINT_SAMPLES)?;
        if !report.passed {
            let failing: Vec<&str> = report
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.as_str())
                .collect();
            return Err(Error::PreconditionUnmet(format!(
                "sweep endpoint {endpoint} fails hypothesis checks: {}",
                failing.join(", ")
            )));
        }
    }

    let step = (spec.hi - spec.lo) / (spec.samples - 1) as f64;
    let mut rows = Vec::with_capacity(spec.samples);
    for i in 0..spec.samples {
        let value = if i + 1 == spec.samples {
            spec.hi
        } else {
            spec.lo + step * i as f64
        };
        let (lambda0, regime) = eigen_at(ctx, spec, value)?;
        rows.push(PhaseRow {
            value,
            lambda0,
            regime,
        });
    }

    let all_constant_blocks = {
        let n = ctx.kernel.partition().patch_count();
        (0..n).all(|i| {
            (0..n).all(|j| matches!(ctx.kernel.block(i, j), KernelForm::Constant { .. }))
        })
    };
    let expect_monotone = matches!(
        spec.parameter,
        SweepParameter::R0 | SweepParameter::KernelCoefficient
    ) || (spec.parameter == SweepParameter::DomainHalfLength && all_constant_blocks);
    if expect_monotone {
        let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
        let lambdas: Vec<f64> = rows.iter().map(|r| r.lambda0).collect();
        if let Some((parameter_value, lambda0, previous)) =
            first_monotone_violation(&values, &lambdas, MONOTONE_SLACK)
        {
            return Err(Error::MonotonicityViolated {
                parameter_value,
                lambda0,
                previous,
            });
        }
    }

    let lambdas: Vec<f64> = rows.iter().map(|r| r.lambda0).collect();
    let transitions = transition_indices(&lambdas);
    if transitions.len() > 1 {
        return Err(Error::NonMonotoneCrossing {
            brackets: transitions
                .iter()
                .map(|&i| (rows[i].value, rows[i + 1].value))
                .collect(),
        });
    }

    let mut crossings = Vec::new();
    if let Some(&i) = transitions.first() {
        let width = (spec.hi - spec.lo) * BISECTION_REFINEMENT;
        let mut lo_v = rows[i].value;
        let mut hi_v = rows[i + 1].value;
        let p_lo = rows[i].lambda0 > 1.0;
        while hi_v - lo_v >= width {
            let mid = 0.5 * (lo_v + hi_v);
            let (lambda_mid, _) = eigen_at(ctx, spec, mid)?;
            if (lambda_mid > 1.0) == p_lo {
                lo_v = mid;
            } else {
                hi_v = mid;
            }
        }
        let critical = 0.5 * (lo_v + hi_v);
        let (lambda0_at_critical, _) = eigen_at(ctx, spec, critical)?;
        crossings.push(Crossing {
            bracket_lo: lo_v,
            bracket_hi: hi_v,
            critical,
            lambda0_at_critical,
        });
    }

    Ok(PhaseTable {
        parameter: spec.parameter,
        rows,
        crossings,
    })
}
