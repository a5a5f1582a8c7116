//! Forward dynamics of the dispersal-growth map and the monotone
//! bracketing scheme for stationary states.
//!
//! The map `T(u) = K F(u)` is order-preserving, so iterating it from a
//! super-solution (`T(N) <= N`) produces a nonincreasing chain and iterating
//! from a sub-solution (`T(v) >= v`) a nondecreasing one. Running both in
//! lockstep brackets every stationary state between them; when the two limits
//! agree the stationary state in that order interval is unique. Entrywise
//! ordering is asserted every generation with a small floating-point slack:
//! in exact arithmetic the inequalities cannot fail, so any violation beyond
//! rounding noise indicates corrupted inputs.

use crate::discretize::{sup_norm, DiscreteOperator};
use crate::error::{Error, Result};
use crate::landscape::{GrowthFunction, PatchPartition, PiecewiseProfile};
use crate::spectral::EigenPair;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Allowed floating-point slack for entrywise ordering between chains.
pub const ORDERING_SLACK: f64 = 1e-13;
/// Slack for the comparison-premise checks, which receive near-stationary
/// inputs carrying iteration residuals well above pure rounding noise.
pub const COMPARISON_SLACK: f64 = 1e-9;
/// Half-width of the eigenvalue band around 1 flagged as critically slow.
pub const CRITICAL_SLOWDOWN_BAND: f64 = 1e-3;
/// The downward and upward limits may differ by at most this multiple of the
/// stationary tolerance before the run is declared inconsistent.
pub const BRACKET_GAP_FACTOR: f64 = 10.0;
const MAX_HALVINGS: usize = 60;

/// Long-run fate of the population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Extinction,
    Persistence,
    PersistenceWithInflux,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Regime::Extinction => "extinction",
            Regime::Persistence => "persistence",
            Regime::PersistenceWithInflux => "persistence_with_influx",
        };
        f.write_str(name)
    }
}

/// Classify by the growth function and the principal eigenvalue.
///
/// Any influx (`F(0) > 0`) forces a positive stationary state regardless of
/// the eigenvalue. Otherwise the eigenvalue decides, with the boundary case
/// `lambda0 = 1` classified as extinction: without amplification above 1 the
/// only nonnegative stationary state is zero.
pub fn classify_regime(growth: &GrowthFunction, lambda0: f64) -> Regime {
    if growth.value_at_zero() > 0.0 {
        Regime::PersistenceWithInflux
    } else if lambda0 <= 1.0 {
        Regime::Extinction
    } else {
        Regime::Persistence
    }
}

/// Why an iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ToleranceMet,
    MaxGenerations,
}

/// Record of a forward run `u_{ n+1} = T(u_n)`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub final_state: Vec<f64>,
    /// State one generation before the final one (absent when no step ran).
    pub previous: Option<Vec<f64>>,
    pub generations: usize,
    /// Sup-norm movement per generation.
    pub sup_diffs: Vec<f64>,
    /// Quadrature-weighted L2 movement per generation.
    pub l2_diffs: Vec<f64>,
    pub terminated_by: Termination,
    /// All iterates including the start, kept only on request.
    pub iterates: Option<Vec<Vec<f64>>>,
}

/// Iterate the population map until the per-generation movement drops below
/// `tol` in sup norm or the generation budget is exhausted.
///
/// Each step checks the norm consistency `l2 <= sqrt(|domain|) * sup` (up to
/// rounding), which ties the two recorded histories together.
pub fn iterate(
    op: &DiscreteOperator,
    growth: &GrowthFunction,
    u0: &[f64],
    tol: f64,
    max_generations: usize,
    record_history: bool,
) -> Result<Trajectory> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::PreconditionUnmet(format!(
            "iteration tolerance must be positive, got {tol}"
        )));
    }
    let domain_root = op.grid().partition().domain_length().sqrt();
    let mut current = u0.to_vec();
    let mut previous: Option<Vec<f64>> = None;
    let mut sup_diffs = Vec::new();
    let mut l2_diffs = Vec::new();
    let mut iterates = record_history.then(|| vec![current.clone()]);
    let mut terminated_by = Termination::MaxGenerations;
    let mut generations = 0;
    for _ in 1..=max_generations {
        let next = op.next_generation(growth, &current)?;
        let diff: Vec<f64> = next.iter().zip(&current).map(|(a, b)| a - b).collect();
        let sup = sup_norm(&diff);
        let l2 = op.grid().weighted_l2_norm(&diff);
        assert!(
            l2 <= domain_root * sup * (1.0 + 1e-12),
            "norm consistency violated: l2 = {l2}, sup = {sup}"
        );
        sup_diffs.push(sup);
        l2_diffs.push(l2);
        if let Some(list) = iterates.as_mut() {
            list.push(next.clone());
        }
        previous = Some(std::mem::replace(&mut current, next));
        generations += 1;
        if sup < tol {
            terminated_by = Termination::ToleranceMet;
            break;
        }
    }
    Ok(Trajectory {
        final_state: current,
        previous,
        generations,
        sup_diffs,
        l2_diffs,
        terminated_by,
        iterates,
    })
}

/// The constant `N = 2 * |domain| * Lambda * M`: twice the largest value one
/// dispersal-growth step can produce, hence a strict super-solution level.
pub fn super_solution_value(op: &DiscreteOperator, growth: &GrowthFunction) -> f64 {
    2.0 * op.grid().partition().domain_length()
        * op.kernel().lambda_bound()
        * growth.upper_bound()
}

/// Constant super-solution profile at level [`super_solution_value`].
pub fn super_solution_start(op: &DiscreteOperator, growth: &GrowthFunction) -> Vec<f64> {
    vec![super_solution_value(op, growth); op.len()]
}

/// Scale the principal eigenfunction down until it becomes a sub-solution.
///
/// With `h = sqrt(min(r0, lambda0)) - 1 > 0`, a scale `eps` is accepted as
/// soon as `T(eps * phi0) >= (lambda0 / (1 + h)) * eps * phi0` entrywise;
/// halving from 1 terminates because the per-capita ratio rises toward `r0`
/// as the density shrinks. Returns the accepted scale and the profile.
pub fn sub_solution_start(
    op: &DiscreteOperator,
    growth: &GrowthFunction,
    pair: &EigenPair,
) -> Result<(f64, Vec<f64>)> {
    let r0 = growth.low_density_growth();
    let lambda0 = pair.lambda0;
    if !(r0 > 1.0 && lambda0 > 1.0) {
        return Err(Error::PreconditionUnmet(format!(
            "sub-solution construction needs r0 > 1 and lambda0 > 1, got r0 = {r0}, lambda0 = {lambda0}"
        )));
    }
    if pair.phi0.len() != op.len() {
        return Err(Error::DimensionMismatch {
            expected: op.len(),
            got: pair.phi0.len(),
        });
    }
    let h = r0.min(lambda0).sqrt() - 1.0;
    let factor = lambda0 / (1.0 + h);
    let mut eps = 1.0;
    for _ in 0..MAX_HALVINGS {
        let candidate: Vec<f64> = pair.phi0.iter().map(|v| eps * v).collect();
        let image = op.next_generation(growth, &candidate)?;
        if image
            .iter()
            .zip(&candidate)
            .all(|(t, c)| *t >= factor * c)
        {
            return Ok((eps, candidate));
        }
        eps *= 0.5;
    }
    Err(Error::EpsilonSearchFailed {
        halvings: MAX_HALVINGS,
    })
}

/// The pair of starting profiles used by [`solve_stationary`], kept for
/// reporting.
#[derive(Debug, Clone)]
pub struct Bracket {
    /// Accepted eigenfunction scale; zero when the lower chain starts from
    /// the zero profile.
    pub epsilon: f64,
    /// The acceptance margin parameter, present only when a sub-solution was
    /// constructed.
    pub h: Option<f64>,
    /// Super-solution level `N`.
    pub n_value: f64,
    pub lower_start: Vec<f64>,
    pub upper_start: Vec<f64>,
}

/// Knobs for [`solve_stationary`].
#[derive(Debug, Clone, Copy)]
pub struct SolveSettings {
    /// Per-generation sup-norm movement below which a chain is converged.
    pub stationary_tol: f64,
    /// Sup level below which the population is declared extinct.
    pub extinction_threshold: f64,
    pub max_generations: usize,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            stationary_tol: 1e-10,
            extinction_threshold: 1e-12,
            max_generations: 100_000,
        }
    }
}

/// Outcome of the bracketing run.
#[derive(Debug, Clone)]
pub struct RegimeReport {
    pub regime: Regime,
    pub lambda0: f64,
    /// True when `lambda0` sits within [`CRITICAL_SLOWDOWN_BAND`] of 1, where
    /// convergence slows to a crawl.
    pub critical_slowdown: bool,
    pub stationary: Vec<f64>,
    pub stationary_min: f64,
    pub stationary_max: f64,
    pub generations: usize,
    pub bracket: Bracket,
    /// Final sup distance between the downward and upward chains.
    pub bracket_gap: f64,
    /// Downward-chain movement per generation, sup norm.
    pub sup_diffs: Vec<f64>,
    /// Downward-chain movement per generation, weighted L2 norm.
    pub l2_diffs: Vec<f64>,
    /// `sup |T(w) - w|` at the reported stationary profile.
    pub final_sup_residual: f64,
    pub final_l2_residual: f64,
}

/// Run the monotone bracketing scheme to a stationary profile.
///
/// The upper chain always starts at the constant super-solution `N`. The
/// lower chain starts at zero (extinction and influx regimes) or at the
/// scaled eigenfunction sub-solution (persistence). Both chains advance in
/// lockstep; monotonicity of each chain and the ordering between them are
/// asserted entrywise every generation with [`ORDERING_SLACK`].
///
/// Extinction is declared when the upper chain's sup level falls below the
/// extinction threshold; the zero profile is then reported verbatim. In the
/// other regimes both chains must settle to per-generation movement below the
/// stationary tolerance, and their limits must agree within
/// [`BRACKET_GAP_FACTOR`] times that tolerance.
pub fn solve_stationary(
    op: &DiscreteOperator,
    growth: &GrowthFunction,
    pair: &EigenPair,
    settings: &SolveSettings,
) -> Result<RegimeReport> {
    let tol = settings.stationary_tol;
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::PreconditionUnmet(format!(
            "stationary tolerance must be positive, got {tol}"
        )));
    }
    if !settings.extinction_threshold.is_finite() || settings.extinction_threshold <= 0.0 {
        return Err(Error::PreconditionUnmet(format!(
            "extinction threshold must be positive, got {}",
            settings.extinction_threshold
        )));
    }
    if settings.max_generations == 0 {
        return Err(Error::PreconditionUnmet(
            "max_generations must be at least 1".into(),
        ));
    }
    if pair.phi0.len() != op.len() {
        return Err(Error::DimensionMismatch {
            expected: op.len(),
            got: pair.phi0.len(),
        });
    }

    let regime = classify_regime(growth, pair.lambda0);
    let critical_slowdown = (pair.lambda0 - 1.0).abs() <= CRITICAL_SLOWDOWN_BAND;
    let n_value = super_solution_value(op, growth);
    let mut upper = super_solution_start(op, growth);
    let (epsilon, h, mut lower) = match regime {
        Regime::Persistence => {
            let (eps, start) = sub_solution_start(op, growth, pair)?;
            let r0 = growth.low_density_growth();
            (eps, Some(r0.min(pair.lambda0).sqrt() - 1.0), start)
        }
        Regime::Extinction | Regime::PersistenceWithInflux => (0.0, None, vec![0.0; op.len()]),
    };
    let bracket = Bracket {
        epsilon,
        h,
        n_value,
        lower_start: lower.clone(),
        upper_start: upper.clone(),
    };

    let mut sup_diffs = Vec::new();
    let mut l2_diffs = Vec::new();
    let mut last_up_sup = f64::INFINITY;
    for generation in 1..=settings.max_generations {
        let next_up = op.next_generation(growth, &upper)?;
        let next_low = op.next_generation(growth, &lower)?;

        let mut violation = 0.0f64;
        for (next, prev) in next_up.iter().zip(&upper) {
            violation = violation.max(next - prev);
        }
        for (prev, next) in lower.iter().zip(&next_low) {
            violation = violation.max(prev - next);
        }
        for (low, up) in next_low.iter().zip(&next_up) {
            violation = violation.max(low - up);
        }
        if violation > ORDERING_SLACK {
            return Err(Error::BracketOrderViolated {
                generation,
                violation,
            });
        }

        let up_diff: Vec<f64> = next_up.iter().zip(&upper).map(|(a, b)| a - b).collect();
        let up_sup = sup_norm(&up_diff);
        sup_diffs.push(up_sup);
        l2_diffs.push(op.grid().weighted_l2_norm(&up_diff));
        let low_sup = {
            let mut acc = 0.0f64;
            for (a, b) in next_low.iter().zip(&lower) {
                acc = acc.max((a - b).abs());
            }
            acc
        };
        last_up_sup = up_sup;
        upper = next_up;
        lower = next_low;

        if regime == Regime::Extinction {
            if sup_norm(&upper) < settings.extinction_threshold {
                let stationary = vec![0.0; op.len()];
                let image = op.next_generation(growth, &stationary)?;
                let final_sup_residual = sup_norm(&image);
                let final_l2_residual = op.grid().weighted_l2_norm(&image);
                let bracket_gap = {
                    let mut acc = 0.0f64;
                    for (u, l) in upper.iter().zip(&lower) {
                        acc = acc.max(u - l);
                    }
                    acc.max(0.0)
                };
                return Ok(RegimeReport {
                    regime,
                    lambda0: pair.lambda0,
                    critical_slowdown,
                    stationary,
                    stationary_min: 0.0,
                    stationary_max: 0.0,
                    generations: generation,
                    bracket,
                    bracket_gap,
                    sup_diffs,
                    l2_diffs,
                    final_sup_residual,
                    final_l2_residual,
                });
            }
        } else if up_sup < tol && low_sup < tol {
            let mut bracket_gap = 0.0f64;
            for (u, l) in upper.iter().zip(&lower) {
                bracket_gap = bracket_gap.max(u - l);
            }
            let bracket_gap = bracket_gap.max(0.0);
            let allowance = BRACKET_GAP_FACTOR * tol;
            if bracket_gap > allowance {
                return Err(Error::BracketMismatch {
                    gap: bracket_gap,
                    allowance,
                });
            }
            let stationary = upper.clone();
            let image = op.next_generation(growth, &stationary)?;
            let residual: Vec<f64> = image.iter().zip(&stationary).map(|(a, b)| a - b).collect();
            let stationary_min = stationary.iter().copied().fold(f64::INFINITY, f64::min);
            let stationary_max = stationary.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            return Ok(RegimeReport {
                regime,
                lambda0: pair.lambda0,
                critical_slowdown,
                stationary,
                stationary_min,
                stationary_max,
                generations: generation,
                bracket,
                bracket_gap,
                sup_diffs,
                l2_diffs,
                final_sup_residual: sup_norm(&residual),
                final_l2_residual: op.grid().weighted_l2_norm(&residual),
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: settings.max_generations,
        last_estimate: sup_norm(&upper),
        residual: last_up_sup,
    })
}

/// Margins from one comparison step.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    /// `min(u - T(u))`: how strictly `u` dominates its own image.
    pub super_margin: f64,
    /// `min(T(v) - v)`: how strictly `v` is dominated by its image.
    pub sub_margin: f64,
    /// `min(u - v)`.
    pub ordering_margin: f64,
    /// `min(T(u) - T(v))`: the conclusion to be preserved.
    pub preserved_margin: f64,
    pub passed: bool,
}

/// Verify that the order-preservation step holds on concrete data: given a
/// super-solution `u`, a sub-solution `v`, and `u >= v`, one application of
/// the map must keep the ordering.
///
/// The premises are verified with [`COMPARISON_SLACK`], since callers
/// typically feed near-stationary iterates whose inequalities hold only up to
/// iteration residuals; a premise failing beyond that slack is reported as
/// `PreconditionUnmet`. The conclusion uses the strict [`ORDERING_SLACK`].
pub fn comparison_check(
    op: &DiscreteOperator,
    growth: &GrowthFunction,
    u: &[f64],
    v: &[f64],
) -> Result<ComparisonReport> {
    let image_u = op.next_generation(growth, u)?;
    let image_v = op.next_generation(growth, v)?;
    let entry_min = |pairs: &mut dyn Iterator<Item = (f64, f64)>| {
        pairs.fold(f64::INFINITY, |acc, (a, b)| acc.min(a - b))
    };
    let super_margin = entry_min(&mut u.iter().copied().zip(image_u.iter().copied()));
    let sub_margin = entry_min(&mut image_v.iter().copied().zip(v.iter().copied()));
    let ordering_margin = entry_min(&mut u.iter().copied().zip(v.iter().copied()));
    if super_margin < -COMPARISON_SLACK {
        return Err(Error::PreconditionUnmet(format!(
            "u is not a super-solution: min(u - T(u)) = {super_margin}"
        )));
    }
    if sub_margin < -COMPARISON_SLACK {
        return Err(Error::PreconditionUnmet(format!(
            "v is not a sub-solution: min(T(v) - v) = {sub_margin}"
        )));
    }
    if ordering_margin < -COMPARISON_SLACK {
        return Err(Error::PreconditionUnmet(format!(
            "u does not dominate v: min(u - v) = {ordering_margin}"
        )));
    }
    let preserved_margin = entry_min(&mut image_u.iter().copied().zip(image_v.iter().copied()));
    Ok(ComparisonReport {
        super_margin,
        sub_margin,
        ordering_margin,
        preserved_margin,
        passed: preserved_margin >= -ORDERING_SLACK,
    })
}

/// Outcome of the multi-start uniqueness probe.
#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub seeds: usize,
    pub rng_seed: u64,
    pub tol: f64,
    /// Largest sup distance between any two limits.
    pub max_pairwise_gap: f64,
    /// Generations each start needed to converge.
    pub generations: Vec<usize>,
    /// Sup level of each limit, in seed order.
    pub limits_sup: Vec<f64>,
}

/// Random piecewise-constant starting profile: the patch interfaces plus up
/// to three extra breakpoints, with values drawn from `(0, max_value]`.
///
/// Draw order is fixed, so a given RNG state always produces the same
/// profile.
pub fn random_start_profile(
    partition: &PatchPartition,
    max_value: f64,
    rng: &mut impl Rng,
) -> PiecewiseProfile {
    let a = partition.half_length();
    let extra_count = rng.random_range(0..=3usize);
    let mut breakpoints = partition.interfaces().to_vec();
    let mut drawn = 0;
    while drawn < extra_count {
        let x = -a + rng.random::<f64>() * partition.domain_length();
        if x > -a && x < a && !breakpoints.contains(&x) {
            breakpoints.push(x);
            drawn += 1;
        }
    }
    breakpoints.sort_by(|p, q| p.partial_cmp(q).expect("finite breakpoints"));
    let values: Vec<f64> = (0..=breakpoints.len())
        .map(|_| max_value * (1.0 - rng.random::<f64>()))
        .collect();
    PiecewiseProfile::new(a, breakpoints, values)
        .expect("generated breakpoints are interior, sorted, and values positive")
}

/// Iterate from several seeded random starts and require all limits to agree.
///
/// Meaningful in the persistence and influx regimes, where the iteration has
/// a unique positive attractor on the order interval; in an extinction
/// scenario every start collapses to zero and the probe passes trivially.
pub fn uniqueness_probe(
    op: &DiscreteOperator,
    growth: &GrowthFunction,
    seeds: usize,
    tol: f64,
    max_generations: usize,
    rng_seed: u64,
) -> Result<UniquenessReport> {
    if seeds < 2 {
        return Err(Error::PreconditionUnmet(format!(
            "uniqueness probe needs at least 2 seeds, got {seeds}"
        )));
    }
    let n_value = super_solution_value(op, growth);
    let mut limits: Vec<Vec<f64>> = Vec::with_capacity(seeds);
    let mut generations = Vec::with_capacity(seeds);
    for seed_index in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(
            rng_seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(seed_index as u64)),
        );
        let profile = random_start_profile(op.grid().partition(), n_value, &mut rng);
        let start = op.grid().sample_profile(&profile)?;
        let traj = iterate(op, growth, &start, tol, max_generations, false)?;
        if traj.terminated_by != Termination::ToleranceMet {
            return Err(Error::NoConvergence {
                iterations: traj.generations,
                last_estimate: sup_norm(&traj.final_state),
                residual: traj.sup_diffs.last().copied().unwrap_or(f64::INFINITY),
            });
        }
        generations.push(traj.generations);
        limits.push(traj.final_state);
    }
    let mut max_pairwise_gap = 0.0f64;
    for a in 0..limits.len() {
        for b in (a + 1)..limits.len() {
            let gap = limits[a]
                .iter()
                .zip(&limits[b])
                .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
            if gap > tol {
                return Err(Error::Disagreement {
                    seed_a: a,
                    seed_b: b,
                    gap,
                    tol,
                });
            }
            max_pairwise_gap = max_pairwise_gap.max(gap);
        }
    }
    let limits_sup = limits.iter().map(|l| sup_norm(l)).collect();
    Ok(UniquenessReport {
        seeds,
        rng_seed,
        tol,
        max_pairwise_gap,
        generations,
        limits_sup,
    })
}
