//! Command-line front end: argument parsing, the four subcommand flows, and
//! exit-code policy.
//!
//! Exit codes: 0 success, 2 configuration/usage/IO problems, 3 numerical
//! failures (non-convergence, violated iteration invariants), 4 a `verify`
//! run whose checks did not all pass.

pub mod config;
pub mod report;

use crate::discretize::DiscreteOperator;
use crate::dynamics::{
    classify_regime, comparison_check, solve_stationary, uniqueness_probe, Regime, RegimeReport,
    SolveSettings,
};
use crate::error::Error;
use crate::landscape::validate_assumptions;
use crate::spectral::{
    check_mortality_bound, check_positivity_floor, check_spectral_lower_bound, principal_eigen,
    EigenPair,
};
use crate::threshold::{critical_r0, sweep, SweepContext, SweepSpec};
use clap::{Args, Parser, Subcommand};
use config::{load_config, LoadedConfig, OutputFormat};
use report::{
    CrossingSummary, EigenSummary, RegimeSummary, Summary, ThresholdSummary, VerifyCheck,
    VerifySummary,
};
use std::path::{Path, PathBuf};
use thiserror::Error as ThisError;

/// Tolerance for the eigenvalue bound reports emitted by the CLI.
const REPORT_BOUND_TOL: f64 = 1e-9;
/// Sample count per axis for the hypothesis checks run by `verify`.
const VERIFY_SAMPLES: usize = 32;
/// The uniqueness probe accepts limits within this multiple of the
/// stationary tolerance.
const PROBE_TOL_FACTOR: f64 = 100.0;
/// Random starts used by the `verify` uniqueness probe.
const PROBE_SEEDS: usize = 3;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("configuration error:\n  {}", problems.join("\n  "))]
    Config { problems: Vec<String> },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Numerical(#[from] Error),
    #[error("verification failed: {failed} of {total} checks did not pass")]
    VerifyFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::VerifyFailed { .. } => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "patchpop",
    version,
    about = "Stationary states and persistence thresholds for patchy-landscape populations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the bracketing solver and write the stationary profile.
    Simulate(CommonArgs),
    /// Compute the principal eigenpair and its bound checks.
    Eigen(CommonArgs),
    /// Locate the critical growth factor and run the configured sweep.
    Threshold(CommonArgs),
    /// Run every validation layer and report each check as pass or fail.
    Verify(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Path to the scenario TOML file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides the scenario's `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Suppress the stdout summary; files are still written.
    #[arg(long)]
    pub quiet: bool,
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Simulate(a) | Command::Eigen(a) | Command::Threshold(a) | Command::Verify(a) => a,
        }
    }
}

/// Parse-free entry point used by both the binary and the tests.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let args = cli.command.args();
    let loaded = load_config(&args.config)?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| loaded.scenario.output.directory.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let (summary, lines, verdict) = match &cli.command {
        Command::Simulate(_) => run_simulate(&loaded, &out_dir)?,
        Command::Eigen(_) => run_eigen(&loaded, &out_dir)?,
        Command::Threshold(_) => run_threshold(&loaded, &out_dir)?,
        Command::Verify(_) => run_verify(&loaded, &out_dir)?,
    };
    if loaded.scenario.output.wants(OutputFormat::Json) {
        report::write_summary(&out_dir, &summary)?;
    }
    if !args.quiet {
        for line in &lines {
            println!("{line}");
        }
        let mut written: Vec<String> = summary.outputs.clone();
        if loaded.scenario.output.wants(OutputFormat::Json) {
            written.insert(0, report::SUMMARY_FILE.to_string());
        }
        if !written.is_empty() {
            println!(
                "wrote {}",
                written
                    .iter()
                    .map(|name| out_dir.join(name).display().to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            );
        }
    }
    verdict
}

fn build_operator(loaded: &LoadedConfig) -> Result<DiscreteOperator, CliError> {
    Ok(DiscreteOperator::from_kernel(
        loaded.kernel.clone(),
        loaded.scenario.discretization.panels_per_patch,
        loaded.scenario.discretization.gauss_order,
    )?)
}

fn solve_eigen(loaded: &LoadedConfig, op: &DiscreteOperator) -> Result<EigenPair, CliError> {
    let t = &loaded.scenario.tolerances;
    Ok(principal_eigen(
        op,
        loaded.growth.low_density_growth(),
        t.eigen_tol,
        t.max_eigen_iterations,
    )?)
}

fn eigen_summary(op: &DiscreteOperator, pair: &EigenPair) -> EigenSummary {
    let phi0_min = pair.phi0.iter().copied().fold(f64::INFINITY, f64::min);
    EigenSummary {
        lambda0: pair.lambda0,
        residual: pair.residual,
        iterations: pair.iterations,
        phi0_min,
        phi0_integral: op.grid().integral(&pair.phi0),
    }
}

fn regime_summary(report: &RegimeReport) -> RegimeSummary {
    RegimeSummary {
        regime: report.regime,
        lambda0: report.lambda0,
        critical_slowdown: report.critical_slowdown,
        generations: report.generations,
        epsilon: report.bracket.epsilon,
        contraction_h: report.bracket.h,
        n_value: report.bracket.n_value,
        bracket_gap: report.bracket_gap,
        final_sup_residual: report.final_sup_residual,
        final_l2_residual: report.final_l2_residual,
        stationary_min: report.stationary_min,
        stationary_max: report.stationary_max,
    }
}

fn solve_settings(loaded: &LoadedConfig) -> SolveSettings {
    let t = &loaded.scenario.tolerances;
    SolveSettings {
        stationary_tol: t.stationary_tol,
        extinction_threshold: t.extinction_threshold,
        max_generations: t.max_generations,
    }
}

type CommandOutcome = (Summary, Vec<String>, Result<(), CliError>);

pub fn run_simulate(loaded: &LoadedConfig, out_dir: &Path) -> Result<CommandOutcome, CliError> {
    let op = build_operator(loaded)?;
    let pair = solve_eigen(loaded, &op)?;
    let regime_report = solve_stationary(&op, &loaded.growth, &pair, &solve_settings(loaded))?;
    let mut summary = Summary::new("simulate", &loaded.config_hash, &loaded.scenario);
    summary.eigen = Some(eigen_summary(&op, &pair));
    summary.regime = Some(regime_summary(&regime_report));
    if loaded.scenario.output.wants(OutputFormat::Csv) {
        report::write_profile_csv(
            out_dir,
            report::STATIONARY_FILE,
            op.grid(),
            "w",
            &regime_report.stationary,
        )?;
        summary.outputs.push(report::STATIONARY_FILE.to_string());
        report::write_norm_history_csv(out_dir, &regime_report.sup_diffs, &regime_report.l2_diffs)?;
        summary.outputs.push(report::NORM_HISTORY_FILE.to_string());
        if loaded.scenario.output.full_history {
            let iterates = replay_downward_chain(&op, loaded, &regime_report)?;
            report::write_trajectory_csv(out_dir, op.grid(), &iterates)?;
            summary.outputs.push(report::TRAJECTORY_FILE.to_string());
        }
    }
    let lines = vec![
        format!("lambda0 = {} ({})", regime_report.lambda0, regime_report.regime),
        format!(
            "stationary in [{}, {}] after {} generations (bracket gap {})",
            regime_report.stationary_min,
            regime_report.stationary_max,
            regime_report.generations,
            regime_report.bracket_gap
        ),
    ];
    Ok((summary, lines, Ok(())))
}

/// Re-run the downward chain for the trajectory file; the chain is
/// deterministic, so the replay reproduces the solver's iterates exactly.
fn replay_downward_chain(
    op: &DiscreteOperator,
    loaded: &LoadedConfig,
    regime_report: &RegimeReport,
) -> Result<Vec<Vec<f64>>, CliError> {
    let mut state = regime_report.bracket.upper_start.clone();
    let mut iterates = Vec::with_capacity(regime_report.generations + 1);
    iterates.push(state.clone());
    for _ in 0..regime_report.generations {
        state = op.next_generation(&loaded.growth, &state)?;
        iterates.push(state.clone());
    }
    Ok(iterates)
}

pub fn run_eigen(loaded: &LoadedConfig, out_dir: &Path) -> Result<CommandOutcome, CliError> {
    let op = build_operator(loaded)?;
    let pair = solve_eigen(loaded, &op)?;
    let r0 = loaded.growth.low_density_growth();
    let bound = check_spectral_lower_bound(&op, &pair, r0, REPORT_BOUND_TOL);
    let floor = check_positivity_floor(&op, &pair, r0, REPORT_BOUND_TOL);
    let mortality = check_mortality_bound(&op, &pair, r0, REPORT_BOUND_TOL);
    let mut summary = Summary::new("eigen", &loaded.config_hash, &loaded.scenario);
    summary.eigen = Some(eigen_summary(&op, &pair));
    let lines = vec![
        format!(
            "lambda0 = {} after {} iterations (residual {})",
            pair.lambda0, pair.iterations, pair.residual
        ),
        format!(
            "spectral lower bound {} ({})",
            bound.lower_bound,
            if bound.passed { "holds" } else { "violated" }
        ),
        format!(
            "eigenfunction minimum {} above floor {} ({})",
            floor.min_phi0,
            floor.floor,
            if floor.passed { "holds" } else { "violated" }
        ),
    ];
    summary.spectral_bound = Some(bound);
    summary.positivity_floor = Some(floor);
    summary.mortality = Some(mortality);
    if loaded.scenario.output.wants(OutputFormat::Csv) {
        report::write_profile_csv(
            out_dir,
            report::EIGENFUNCTION_FILE,
            op.grid(),
            "phi0",
            &pair.phi0,
        )?;
        summary.outputs.push(report::EIGENFUNCTION_FILE.to_string());
    }
    Ok((summary, lines, Ok(())))
}

pub fn run_threshold(loaded: &LoadedConfig, out_dir: &Path) -> Result<CommandOutcome, CliError> {
    let Some(sweep_section) = &loaded.scenario.sweep else {
        return Err(CliError::Config {
            problems: vec!["the threshold command requires a [sweep] section".into()],
        });
    };
    let op = build_operator(loaded)?;
    let pair = solve_eigen(loaded, &op)?;
    let t = &loaded.scenario.tolerances;
    let critical = critical_r0(&op, REPORT_BOUND_TOL, t.max_eigen_iterations)?;
    let ctx = SweepContext {
        kernel: &loaded.kernel,
        growth: &loaded.growth,
        panels_per_patch: loaded.scenario.discretization.panels_per_patch,
        gauss_order: loaded.scenario.discretization.gauss_order,
        eigen_tol: t.eigen_tol,
        max_eigen_iterations: t.max_eigen_iterations,
    };
    let spec = SweepSpec {
        parameter: sweep_section.parameter,
        pairs: sweep_section
            .pairs
            .as_ref()
            .map(|pairs| pairs.iter().map(|p| (p[0], p[1])).collect()),
        lo: sweep_section.lo,
        hi: sweep_section.hi,
        samples: sweep_section.samples,
    };
    let table = sweep(&ctx, &spec)?;
    let mut summary = Summary::new("threshold", &loaded.config_hash, &loaded.scenario);
    summary.eigen = Some(eigen_summary(&op, &pair));
    let mut lines = vec![format!(
        "critical r0 = {critical} (current r0 = {}, lambda0 = {})",
        loaded.growth.low_density_growth(),
        pair.lambda0
    )];
    for c in &table.crossings {
        lines.push(format!(
            "{} crossing at {} (bracket [{}, {}], lambda0 there {})",
            table.parameter, c.critical, c.bracket_lo, c.bracket_hi, c.lambda0_at_critical
        ));
    }
    if table.crossings.is_empty() {
        lines.push(format!(
            "no regime crossing of {} inside [{}, {}]",
            table.parameter, spec.lo, spec.hi
        ));
    }
    summary.threshold = Some(ThresholdSummary {
        parameter: table.parameter.to_string(),
        critical_r0: critical,
        rows: table.rows.len(),
        crossings: table
            .crossings
            .iter()
            .map(|c| CrossingSummary {
                bracket_lo: c.bracket_lo,
                bracket_hi: c.bracket_hi,
                critical: c.critical,
                lambda0_at_critical: c.lambda0_at_critical,
            })
            .collect(),
    });
    if loaded.scenario.output.wants(OutputFormat::Csv) {
        report::write_phase_table_csv(out_dir, &table)?;
        summary.outputs.push(report::PHASE_TABLE_FILE.to_string());
    }
    Ok((summary, lines, Ok(())))
}

pub fn run_verify(loaded: &LoadedConfig, _out_dir: &Path) -> Result<CommandOutcome, CliError> {
    let mut checks: Vec<VerifyCheck> = Vec::new();
    let assumptions = validate_assumptions(&loaded.kernel, &loaded.growth, VERIFY_SAMPLES)?;
    for check in &assumptions.checks {
        checks.push(VerifyCheck {
            name: format!("hypothesis:{}", check.name),
            passed: check.passed,
            detail: check.detail.clone(),
        });
    }
    checks.push(VerifyCheck {
        name: "low_density_growth".into(),
        passed: true,
        detail: format!(
            "r0 = {} ({} replacement level)",
            loaded.growth.low_density_growth(),
            if assumptions.low_density_growth_above_one {
                "above"
            } else {
                "at or below"
            }
        ),
    });

    let op = build_operator(loaded)?;
    let pair = solve_eigen(loaded, &op)?;
    checks.push(VerifyCheck {
        name: "eigen_converged".into(),
        passed: true,
        detail: format!(
            "lambda0 = {} in {} iterations, residual {}",
            pair.lambda0, pair.iterations, pair.residual
        ),
    });
    let r0 = loaded.growth.low_density_growth();
    let bound = check_spectral_lower_bound(&op, &pair, r0, REPORT_BOUND_TOL);
    checks.push(VerifyCheck {
        name: "spectral_lower_bound".into(),
        passed: bound.passed,
        detail: format!("lambda0 = {} vs bound {}", bound.lambda0, bound.lower_bound),
    });
    let floor = check_positivity_floor(&op, &pair, r0, REPORT_BOUND_TOL);
    checks.push(VerifyCheck {
        name: "positivity_floor".into(),
        passed: floor.passed,
        detail: format!("min phi0 = {} vs floor {}", floor.min_phi0, floor.floor),
    });
    let mortality = check_mortality_bound(&op, &pair, r0, REPORT_BOUND_TOL);
    checks.push(VerifyCheck {
        name: "mortality_bound".into(),
        passed: mortality.passed,
        detail: if mortality.applicable {
            format!(
                "row masses at most {} and r0 = {} keep lambda0 = {} at or below 1",
                mortality.max_row_mass, mortality.r0, mortality.lambda0
            )
        } else {
            format!(
                "not applicable: max row mass {} / r0 = {}",
                mortality.max_row_mass, mortality.r0
            )
        },
    });

    let regime = classify_regime(&loaded.growth, pair.lambda0);
    let solve_result = solve_stationary(&op, &loaded.growth, &pair, &solve_settings(loaded));
    let regime_report = match solve_result {
        Ok(report) => {
            checks.push(VerifyCheck {
                name: "bracketing".into(),
                passed: true,
                detail: format!(
                    "{}: chains met within gap {} after {} generations",
                    report.regime, report.bracket_gap, report.generations
                ),
            });
            Some(report)
        }
        Err(
            err @ (Error::BracketMismatch { .. }
            | Error::BracketOrderViolated { .. }
            | Error::EpsilonSearchFailed { .. }
            | Error::PreconditionUnmet(_)),
        ) => {
            checks.push(VerifyCheck {
                name: "bracketing".into(),
                passed: false,
                detail: err.to_string(),
            });
            None
        }
        Err(err) => return Err(err.into()),
    };

    if let Some(report) = &regime_report {
        let steps = 3;
        let mut upper = report.bracket.upper_start.clone();
        let mut lower = report.bracket.lower_start.clone();
        for _ in 0..steps {
            upper = op.next_generation(&loaded.growth, &upper)?;
            lower = op.next_generation(&loaded.growth, &lower)?;
        }
        match comparison_check(&op, &loaded.growth, &upper, &lower) {
            Ok(cmp) => checks.push(VerifyCheck {
                name: "comparison_preserved".into(),
                passed: cmp.passed,
                detail: format!(
                    "margins: super {}, sub {}, ordering {}, preserved {}",
                    cmp.super_margin, cmp.sub_margin, cmp.ordering_margin, cmp.preserved_margin
                ),
            }),
            Err(Error::PreconditionUnmet(msg)) => checks.push(VerifyCheck {
                name: "comparison_preserved".into(),
                passed: false,
                detail: msg,
            }),
            Err(err) => return Err(err.into()),
        }
    }

    if regime_report.is_some() && regime != Regime::Extinction {
        let t = &loaded.scenario.tolerances;
        match uniqueness_probe(
            &op,
            &loaded.growth,
            PROBE_SEEDS,
            PROBE_TOL_FACTOR * t.stationary_tol,
            t.max_generations,
            loaded.scenario.seed,
        ) {
            Ok(probe) => checks.push(VerifyCheck {
                name: "uniqueness_probe".into(),
                passed: true,
                detail: format!(
                    "{} random starts agree within {} (max gap {})",
                    probe.seeds, probe.tol, probe.max_pairwise_gap
                ),
            }),
            Err(Error::Disagreement {
                seed_a,
                seed_b,
                gap,
                tol,
            }) => checks.push(VerifyCheck {
                name: "uniqueness_probe".into(),
                passed: false,
                detail: format!(
                    "starts {seed_a} and {seed_b} settled {gap} apart (tolerance {tol})"
                ),
            }),
            Err(err) => return Err(err.into()),
        }
    } else {
        checks.push(VerifyCheck {
            name: "uniqueness_probe".into(),
            passed: true,
            detail: if regime == Regime::Extinction {
                "skipped: every start collapses to zero in the extinction regime".into()
            } else {
                "skipped: no stationary profile to compare against".into()
            },
        });
    }

    let total = checks.len();
    let failed = checks.iter().filter(|c| !c.passed).count();
    let lines: Vec<String> = checks
        .iter()
        .map(|c| {
            format!(
                "[{}] {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )
        })
        .chain(std::iter::once(format!(
            "verification {}: {}/{} checks passed",
            if failed == 0 { "passed" } else { "failed" },
            total - failed,
            total
        )))
        .collect();
    let mut summary = Summary::new("verify", &loaded.config_hash, &loaded.scenario);
    summary.eigen = Some(eigen_summary(&op, &pair));
    if let Some(report) = &regime_report {
        summary.regime = Some(regime_summary(report));
    }
    summary.verify = Some(VerifySummary {
        checks,
        passed: failed == 0,
    });
    let verdict = if failed == 0 {
        Ok(())
    } else {
        Err(CliError::VerifyFailed { failed, total })
    };
    Ok((summary, lines, verdict))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes_partition_the_failure_kinds() {
        assert_eq!(
            CliError::Config {
                problems: vec!["x".into()]
            }
            .exit_code(),
            2
        );
        assert_eq!(CliError::Io("x".into()).exit_code(), 2);
        assert_eq!(
            CliError::Numerical(Error::PreconditionUnmet("x".into())).exit_code(),
            3
        );
        assert_eq!(CliError::VerifyFailed { failed: 1, total: 9 }.exit_code(), 4);
    }

    #[test]
    fn config_error_lists_every_problem_in_the_message() {
        let err = CliError::Config {
            problems: vec!["first problem".into(), "second problem".into()],
        };
        let text = err.to_string();
        assert!(text.contains("first problem"));
        assert!(text.contains("second problem"));
    }
}
