//! Scenario configuration: TOML schema, validation, and conversion into the
//! library types.
//!
//! Unknown keys are hard errors (a typo must never silently fall back to a
//! default), and validation reports every problem at once rather than one
//! per run.

use crate::cli::CliError;
use crate::landscape::{
    GrowthFunction, KernelForm, KernelPiece, KernelSpec, PatchPartition,
};
use crate::threshold::SweepParameter;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const DEFAULT_PANELS_PER_PATCH: usize = 4;
pub const DEFAULT_GAUSS_ORDER: usize = 4;
pub const DEFAULT_EIGEN_TOL: f64 = 1e-12;
pub const DEFAULT_STATIONARY_TOL: f64 = 1e-10;
pub const DEFAULT_EXTINCTION_THRESHOLD: f64 = 1e-12;
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

/// Complete scenario description as read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Seed for the randomized uniqueness probe.
    #[serde(default)]
    pub seed: u64,
    pub domain: DomainSection,
    pub kernel: KernelSection,
    pub growth: GrowthSection,
    #[serde(default)]
    pub discretization: DiscretizationSection,
    #[serde(default)]
    pub tolerances: TolerancesSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Required by the `threshold` command, ignored by the others.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub half_length: f64,
    #[serde(default)]
    pub interfaces: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub delta: f64,
    pub lambda_bound: f64,
    pub pieces: Vec<PieceSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceForm {
    Constant,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSection {
    /// Patch of the source point `y`.
    pub from_patch: usize,
    /// Patch of the destination point `x`.
    pub to_patch: usize,
    pub form: PieceForm,
    pub c: f64,
    /// Decay rate; required for exponential pieces, forbidden otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthVariant {
    BevertonHolt,
    BevertonHoltWithInflux,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSection {
    pub variant: GrowthVariant,
    pub r0: f64,
    pub b: f64,
    /// Influx level; required for the influx variant, forbidden otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationSection {
    pub panels_per_patch: usize,
    pub gauss_order: usize,
}

impl Default for DiscretizationSection {
    fn default() -> Self {
        Self {
            panels_per_patch: DEFAULT_PANELS_PER_PATCH,
            gauss_order: DEFAULT_GAUSS_ORDER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TolerancesSection {
    pub eigen_tol: f64,
    pub max_eigen_iterations: usize,
    pub stationary_tol: f64,
    pub extinction_threshold: f64,
    pub max_generations: usize,
}

impl Default for TolerancesSection {
    fn default() -> Self {
        Self {
            eigen_tol: DEFAULT_EIGEN_TOL,
            max_eigen_iterations: DEFAULT_MAX_ITERATIONS,
            stationary_tol: DEFAULT_STATIONARY_TOL,
            extinction_threshold: DEFAULT_EXTINCTION_THRESHOLD,
            max_generations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Default output directory; the `--out` flag overrides it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    pub formats: Vec<OutputFormat>,
    /// Write every iterate of the downward chain, not just the limit.
    pub full_history: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: None,
            formats: vec![OutputFormat::Json, OutputFormat::Csv],
            full_history: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
    /// `[to_patch, from_patch]` kernel blocks for coefficient/decay sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[usize; 2]>>,
}

impl OutputSection {
    pub fn wants(&self, format: OutputFormat) -> bool {
        self.formats.contains(&format)
    }
}

/// A parsed, validated scenario plus its derived library objects.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub scenario: ScenarioConfig,
    /// SHA-256 of the raw configuration text, lowercase hex.
    pub config_hash: String,
    pub kernel: KernelSpec,
    pub growth: GrowthFunction,
}

/// Read and parse a scenario file.
pub fn load_config(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Parse a scenario from TOML text, collect every validation problem, and
/// build the library objects.
pub fn parse_config(text: &str) -> Result<LoadedConfig, CliError> {
    let scenario: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::Config {
        problems: vec![e.to_string().trim_end().to_string()],
    })?;
    let problems = validate(&scenario);
    if !problems.is_empty() {
        return Err(CliError::Config { problems });
    }
    let (kernel, growth) = build_landscape(&scenario).map_err(|e| CliError::Config {
        problems: vec![e.to_string()],
    })?;
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut config_hash = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write;
        write!(config_hash, "{byte:02x}").expect("writing to a String cannot fail");
    }
    Ok(LoadedConfig {
        scenario,
        config_hash,
        kernel,
        growth,
    })
}

/// Every problem with the scenario, in schema order. Empty means valid.
pub fn validate(cfg: &ScenarioConfig) -> Vec<String> {
    let mut problems = Vec::new();
    let a = cfg.domain.half_length;
    if !a.is_finite() || a <= 0.0 {
        problems.push(format!(
            "domain.half_length must be positive and finite, got {a}"
        ));
    }
    for &p in &cfg.domain.interfaces {
        if !p.is_finite() || (a.is_finite() && a > 0.0 && (p <= -a || p >= a)) {
            problems.push(format!(
                "domain interface {p} must lie strictly inside (-{a}, {a})"
            ));
        }
    }
    if cfg.domain.interfaces.windows(2).any(|w| w[0] >= w[1]) {
        problems.push("domain.interfaces must be strictly increasing".into());
    }

    let delta = cfg.kernel.delta;
    let lambda = cfg.kernel.lambda_bound;
    if !delta.is_finite() || delta <= 0.0 {
        problems.push(format!("kernel.delta must be positive, got {delta}"));
    }
    if !lambda.is_finite() || lambda <= delta {
        problems.push(format!(
            "kernel.lambda_bound = {lambda} must exceed kernel.delta = {delta}"
        ));
    }
    let patch_count = cfg.domain.interfaces.len() + 1;
    let mut seen = vec![false; patch_count * patch_count];
    for (idx, piece) in cfg.kernel.pieces.iter().enumerate() {
        if piece.to_patch >= patch_count || piece.from_patch >= patch_count {
            problems.push(format!(
                "kernel piece #{idx} addresses patch pair ({}, {}) outside {patch_count} patches",
                piece.to_patch, piece.from_patch
            ));
            continue;
        }
        let slot = piece.to_patch * patch_count + piece.from_patch;
        if seen[slot] {
            problems.push(format!(
                "kernel piece for patch pair ({}, {}) is specified twice",
                piece.to_patch, piece.from_patch
            ));
        }
        seen[slot] = true;
        if !piece.c.is_finite() || piece.c <= 0.0 {
            problems.push(format!(
                "kernel piece ({}, {}): c must be positive, got {}",
                piece.to_patch, piece.from_patch, piece.c
            ));
        }
        match (piece.form, piece.b) {
            (PieceForm::Exponential, None) => problems.push(format!(
                "kernel piece ({}, {}): exponential form requires b",
                piece.to_patch, piece.from_patch
            )),
            (PieceForm::Exponential, Some(b)) if !b.is_finite() || b < 0.0 => {
                problems.push(format!(
                    "kernel piece ({}, {}): b must be nonnegative, got {b}",
                    piece.to_patch, piece.from_patch
                ))
            }
            (PieceForm::Constant, Some(_)) => problems.push(format!(
                "kernel piece ({}, {}): constant form must not set b",
                piece.to_patch, piece.from_patch
            )),
            _ => {}
        }
    }
    for (slot, covered) in seen.iter().enumerate() {
        if !covered {
            problems.push(format!(
                "kernel piece for patch pair ({}, {}) is missing",
                slot / patch_count,
                slot % patch_count
            ));
        }
    }

    if !cfg.growth.r0.is_finite() || cfg.growth.r0 <= 0.0 {
        problems.push(format!("growth.r0 must be positive, got {}", cfg.growth.r0));
    }
    if !cfg.growth.b.is_finite() || cfg.growth.b <= 0.0 {
        problems.push(format!("growth.b must be positive, got {}", cfg.growth.b));
    }
    match (cfg.growth.variant, cfg.growth.c) {
        (GrowthVariant::BevertonHoltWithInflux, None) => {
            problems.push("growth.c is required for the influx variant".into())
        }
        (GrowthVariant::BevertonHoltWithInflux, Some(c)) if !c.is_finite() || c <= 0.0 => {
            problems.push(format!("growth.c must be positive, got {c}"))
        }
        (GrowthVariant::BevertonHolt, Some(_)) => {
            problems.push("growth.c is only valid for the influx variant".into())
        }
        _ => {}
    }

    if cfg.discretization.panels_per_patch == 0 {
        problems.push("discretization.panels_per_patch must be at least 1".into());
    }
    if cfg.discretization.gauss_order == 0 || cfg.discretization.gauss_order > 16 {
        problems.push(format!(
            "discretization.gauss_order must be between 1 and 16, got {}",
            cfg.discretization.gauss_order
        ));
    }

    let t = &cfg.tolerances;
    for (name, value) in [
        ("eigen_tol", t.eigen_tol),
        ("stationary_tol", t.stationary_tol),
        ("extinction_threshold", t.extinction_threshold),
    ] {
        if !value.is_finite() || value <= 0.0 {
            problems.push(format!("tolerances.{name} must be positive, got {value}"));
        }
    }
    if t.max_eigen_iterations == 0 {
        problems.push("tolerances.max_eigen_iterations must be at least 1".into());
    }
    if t.max_generations == 0 {
        problems.push("tolerances.max_generations must be at least 1".into());
    }

    if cfg.output.formats.is_empty() {
        problems.push("output.formats must name at least one format".into());
    }

    if let Some(sweep) = &cfg.sweep {
        if !(sweep.lo.is_finite() && sweep.hi.is_finite()) || sweep.lo >= sweep.hi {
            problems.push(format!(
                "sweep range [{}, {}] must be a nonempty interval",
                sweep.lo, sweep.hi
            ));
        }
        if sweep.samples < 2 {
            problems.push(format!(
                "sweep.samples must be at least 2, got {}",
                sweep.samples
            ));
        }
        if let Some(pairs) = &sweep.pairs {
            for pair in pairs {
                if pair[0] >= patch_count || pair[1] >= patch_count {
                    problems.push(format!(
                        "sweep pair [{}, {}] is outside {patch_count} patches",
                        pair[0], pair[1]
                    ));
                }
            }
        }
    }
    problems
}

/// Convert a validated scenario into library objects.
pub fn build_landscape(
    cfg: &ScenarioConfig,
) -> crate::error::Result<(KernelSpec, GrowthFunction)> {
    let partition = PatchPartition::new(cfg.domain.half_length, cfg.domain.interfaces.clone())?;
    let pieces: Vec<KernelPiece> = cfg
        .kernel
        .pieces
        .iter()
        .map(|p| KernelPiece {
            to_patch: p.to_patch,
            from_patch: p.from_patch,
            form: match p.form {
                PieceForm::Constant => KernelForm::Constant { c: p.c },
                PieceForm::Exponential => KernelForm::Exponential {
                    c: p.c,
                    b: p.b.expect("validated: exponential pieces carry b"),
                },
            },
        })
        .collect();
    let kernel = KernelSpec::from_pieces(partition, cfg.kernel.delta, cfg.kernel.lambda_bound, &pieces)?;
    let growth = match cfg.growth.variant {
        GrowthVariant::BevertonHolt => GrowthFunction::beverton_holt(cfg.growth.r0, cfg.growth.b)?,
        GrowthVariant::BevertonHoltWithInflux => GrowthFunction::beverton_holt_with_influx(
            cfg.growth.c.expect("validated: influx variant carries c"),
            cfg.growth.r0,
            cfg.growth.b,
        )?,
    };
    Ok((kernel, growth))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_PATCH: &str = r#"
seed = 7

[domain]
half_length = 1.0
interfaces = [0.0]

[kernel]
delta = 0.19
lambda_bound = 0.6

[[kernel.pieces]]
from_patch = 0
to_patch = 0
form = "constant"
c = 0.6

[[kernel.pieces]]
from_patch = 1
to_patch = 0
form = "constant"
c = 0.2

[[kernel.pieces]]
from_patch = 0
to_patch = 1
form = "constant"
c = 0.2

[[kernel.pieces]]
from_patch = 1
to_patch = 1
form = "constant"
c = 0.6

[growth]
variant = "beverton_holt"
r0 = 2.0
b = 1.0
"#;

    #[test]
    fn minimal_scenario_parses_with_defaults() {
        let loaded = parse_config(TWO_PATCH).unwrap();
        assert_eq!(loaded.scenario.seed, 7);
        assert_eq!(loaded.scenario.discretization.panels_per_patch, 4);
        assert_eq!(loaded.scenario.discretization.gauss_order, 4);
        assert_eq!(loaded.scenario.tolerances.eigen_tol, 1e-12);
        assert_eq!(loaded.scenario.tolerances.max_generations, 100_000);
        assert_eq!(
            loaded.scenario.output.formats,
            vec![OutputFormat::Json, OutputFormat::Csv]
        );
        assert!(!loaded.scenario.output.full_history);
        assert_eq!(loaded.kernel.partition().patch_count(), 2);
        assert_eq!(loaded.growth.low_density_growth(), 2.0);
        assert_eq!(loaded.config_hash.len(), 64);
        assert!(loaded.config_hash.chars().all(|c| c.is_ascii_hexdigit()));
    }

    #[test]
    fn hash_tracks_the_raw_text() {
        let a = parse_config(TWO_PATCH).unwrap();
        let b = parse_config(TWO_PATCH).unwrap();
        assert_eq!(a.config_hash, b.config_hash);
        let altered = TWO_PATCH.replace("r0 = 2.0", "r0 = 2.5");
        let c = parse_config(&altered).unwrap();
        assert_ne!(a.config_hash, c.config_hash);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = TWO_PATCH.replace("seed = 7", "seed = 7\ntypo_key = 1");
        let err = parse_config(&text).unwrap_err();
        let CliError::Config { problems } = err else {
            panic!("expected a config error");
        };
        assert!(problems[0].contains("typo_key"), "{problems:?}");
    }

    #[test]
    fn all_validation_problems_are_listed_at_once() {
        let text = TWO_PATCH
            .replace("delta = 0.19", "delta = -1.0")
            .replace("r0 = 2.0", "r0 = 0.0")
            .replace(
                "[growth]",
                "[discretization]\npanels_per_patch = 0\n\n[growth]",
            );
        let err = parse_config(&text).unwrap_err();
        let CliError::Config { problems } = err else {
            panic!("expected a config error");
        };
        assert!(problems.len() >= 3, "{problems:?}");
        assert!(problems.iter().any(|p| p.contains("kernel.delta")));
        assert!(problems.iter().any(|p| p.contains("growth.r0")));
        assert!(problems.iter().any(|p| p.contains("panels_per_patch")));
    }

    #[test]
    fn missing_and_duplicate_pieces_are_reported() {
        let missing = TWO_PATCH.replace(
            "[[kernel.pieces]]\nfrom_patch = 1\nto_patch = 1\nform = \"constant\"\nc = 0.6",
            "",
        );
        let err = parse_config(&missing).unwrap_err();
        let CliError::Config { problems } = err else {
            panic!("expected a config error");
        };
        assert!(problems.iter().any(|p| p.contains("(1, 1)") && p.contains("missing")));
    }

    #[test]
    fn influx_variant_requires_its_constant() {
        let text = TWO_PATCH.replace(
            "variant = \"beverton_holt\"",
            "variant = \"beverton_holt_with_influx\"",
        );
        let err = parse_config(&text).unwrap_err();
        let CliError::Config { problems } = err else {
            panic!("expected a config error");
        };
        assert!(problems.iter().any(|p| p.contains("growth.c")));

        let text = TWO_PATCH.replace("r0 = 2.0", "r0 = 2.0\nc = 0.1");
        let err = parse_config(&text).unwrap_err();
        let CliError::Config { problems } = err else {
            panic!("expected a config error");
        };
        assert!(problems.iter().any(|p| p.contains("influx variant")));
    }

    #[test]
    fn exponential_pieces_require_decay() {
        let text = TWO_PATCH.replace(
            "from_patch = 0\nto_patch = 0\nform = \"constant\"\nc = 0.6",
            "from_patch = 0\nto_patch = 0\nform = \"exponential\"\nc = 0.6",
        );
        let err = parse_config(&text).unwrap_err();
        let CliError::Config { problems } = err else {
            panic!("expected a config error");
        };
        assert!(problems.iter().any(|p| p.contains("requires b")));
    }

    #[test]
    fn effective_config_round_trips_through_toml() {
        let loaded = parse_config(TWO_PATCH).unwrap();
        let echoed = toml::to_string(&loaded.scenario).unwrap();
        let reloaded = parse_config(&echoed).unwrap();
        assert_eq!(loaded.scenario, reloaded.scenario);
    }

    #[test]
    fn sweep_section_is_parsed_and_validated() {
        let text = format!(
            "{TWO_PATCH}\n[sweep]\nparameter = \"r0\"\nlo = 0.5\nhi = 2.0\nsamples = 7\n"
        );
        let loaded = parse_config(&text).unwrap();
        let sweep = loaded.scenario.sweep.unwrap();
        assert_eq!(sweep.parameter, SweepParameter::R0);
        assert_eq!(sweep.samples, 7);

        let bad = format!(
            "{TWO_PATCH}\n[sweep]\nparameter = \"r0\"\nlo = 2.0\nhi = 0.5\nsamples = 7\n"
        );
        assert!(parse_config(&bad).is_err());
    }
}
