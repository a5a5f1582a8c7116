//! Report emission: one JSON summary per run plus CSV tables.
//!
//! Output bytes are part of the deterministic contract: floats are written
//! with Rust's shortest round-trip formatting, lines end with LF, and JSON
//! field order follows struct declaration order.

use crate::cli::config::ScenarioConfig;
use crate::discretize::Grid;
use crate::dynamics::Regime;
use crate::spectral::{BoundReport, FloorReport, MortalityReport};
use crate::threshold::PhaseTable;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

pub const SUMMARY_FILE: &str = "summary.json";
pub const STATIONARY_FILE: &str = "stationary_profile.csv";
pub const EIGENFUNCTION_FILE: &str = "eigenfunction.csv";
pub const NORM_HISTORY_FILE: &str = "norm_history.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const PHASE_TABLE_FILE: &str = "phase_table.csv";

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for ToolInfo {
    fn default() -> Self {
        Self {
            name: "patchpop",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenSummary {
    pub lambda0: f64,
    pub residual: f64,
    pub iterations: usize,
    pub phi0_min: f64,
    pub phi0_integral: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeSummary {
    pub regime: Regime,
    pub lambda0: f64,
    /// Set when `lambda0` is so close to 1 that convergence slows critically.
    pub critical_slowdown: bool,
    pub generations: usize,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contraction_h: Option<f64>,
    pub n_value: f64,
    pub bracket_gap: f64,
    pub final_sup_residual: f64,
    pub final_l2_residual: f64,
    pub stationary_min: f64,
    pub stationary_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossingSummary {
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub critical: f64,
    pub lambda0_at_critical: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdSummary {
    pub parameter: String,
    pub critical_r0: f64,
    pub rows: usize,
    pub crossings: Vec<CrossingSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub checks: Vec<VerifyCheck>,
    pub passed: bool,
}

/// Everything a run reports, written as `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub tool: ToolInfo,
    pub command: String,
    pub config_hash: String,
    pub scenario: ScenarioConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigen: Option<EigenSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral_bound: Option<BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positivity_floor: Option<FloorReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mortality: Option<MortalityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySummary>,
    /// File names written beside this summary, in write order.
    pub outputs: Vec<String>,
}

impl Summary {
    pub fn new(command: &str, config_hash: &str, scenario: &ScenarioConfig) -> Self {
        Self {
            tool: ToolInfo::default(),
            command: command.to_string(),
            config_hash: config_hash.to_string(),
            scenario: scenario.clone(),
            eigen: None,
            spectral_bound: None,
            positivity_floor: None,
            mortality: None,
            regime: None,
            threshold: None,
            verify: None,
            outputs: Vec::new(),
        }
    }
}

fn write_file(path: &Path, bytes: &str) -> Result<(), crate::cli::CliError> {
    std::fs::write(path, bytes)
        .map_err(|e| crate::cli::CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn write_summary(dir: &Path, summary: &Summary) -> Result<(), crate::cli::CliError> {
    let mut text = serde_json::to_string_pretty(summary)
        .map_err(|e| crate::cli::CliError::Io(format!("cannot serialize summary: {e}")))?;
    text.push('\n');
    write_file(&dir.join(SUMMARY_FILE), &text)
}

/// Node-indexed profile: `x,<value_column>,patch_index`.
pub fn profile_csv(grid: &Grid, value_column: &str, values: &[f64]) -> String {
    assert_eq!(grid.len(), values.len());
    let mut out = String::new();
    let _ = writeln!(out, "x,{value_column},patch_index");
    for (i, value) in values.iter().enumerate() {
        let _ = writeln!(out, "{},{value},{}", grid.nodes()[i], grid.node_patch(i));
    }
    out
}

pub fn write_profile_csv(
    dir: &Path,
    file: &str,
    grid: &Grid,
    value_column: &str,
    values: &[f64],
) -> Result<(), crate::cli::CliError> {
    write_file(&dir.join(file), &profile_csv(grid, value_column, values))
}

/// Per-generation norms of the downward chain's steps: `n,sup_diff,l2_diff`.
pub fn norm_history_csv(sup_diffs: &[f64], l2_diffs: &[f64]) -> String {
    assert_eq!(sup_diffs.len(), l2_diffs.len());
    let mut out = String::from("n,sup_diff,l2_diff\n");
    for (n, (s, l)) in sup_diffs.iter().zip(l2_diffs).enumerate() {
        let _ = writeln!(out, "{},{s},{l}", n + 1);
    }
    out
}

pub fn write_norm_history_csv(
    dir: &Path,
    sup_diffs: &[f64],
    l2_diffs: &[f64],
) -> Result<(), crate::cli::CliError> {
    write_file(&dir.join(NORM_HISTORY_FILE), &norm_history_csv(sup_diffs, l2_diffs))
}

/// Full downward chain: `generation,node_index,x,value`.
pub fn trajectory_csv(grid: &Grid, iterates: &[Vec<f64>]) -> String {
    let mut out = String::from("generation,node_index,x,value\n");
    for (n, state) in iterates.iter().enumerate() {
        assert_eq!(state.len(), grid.len());
        for (i, v) in state.iter().enumerate() {
            let _ = writeln!(out, "{n},{i},{},{v}", grid.nodes()[i]);
        }
    }
    out
}

pub fn write_trajectory_csv(
    dir: &Path,
    grid: &Grid,
    iterates: &[Vec<f64>],
) -> Result<(), crate::cli::CliError> {
    write_file(&dir.join(TRAJECTORY_FILE), &trajectory_csv(grid, iterates))
}

/// Sweep rows plus one trailing comment line per located crossing.
pub fn phase_table_csv(table: &PhaseTable) -> String {
    let mut out = String::from("parameter,lambda0,regime\n");
    for row in &table.rows {
        let _ = writeln!(out, "{},{},{}", row.value, row.lambda0, row.regime);
    }
    for c in &table.crossings {
        let _ = writeln!(
            out,
            "# crossing: critical={} bracket_lo={} bracket_hi={} lambda0={}",
            c.critical, c.bracket_lo, c.bracket_hi, c.lambda0_at_critical
        );
    }
    out
}

pub fn write_phase_table_csv(dir: &Path, table: &PhaseTable) -> Result<(), crate::cli::CliError> {
    write_file(&dir.join(PHASE_TABLE_FILE), &phase_table_csv(table))
}
