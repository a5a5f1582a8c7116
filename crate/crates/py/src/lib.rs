//! Python bindings for the patchy-landscape population model.
//!
//! The module mirrors the CLI's scenario format: build a [`Scenario`] from a
//! TOML file or string, then query eigenpairs, stationary profiles, regime
//! classifications, and thresholds. All numerics run in the core crate, so
//! results agree bit-for-bit with the `patchpop` binary.

use patchpop_core::cli::config::{load_config, parse_config, LoadedConfig};
use patchpop_core::cli::CliError;
use patchpop_core::discretize::DiscreteOperator;
use patchpop_core::dynamics::{classify_regime, solve_stationary, uniqueness_probe, SolveSettings};
use patchpop_core::landscape::validate_assumptions;
use patchpop_core::spectral::{
    check_mortality_bound, check_positivity_floor, check_spectral_lower_bound, principal_eigen,
    EigenPair,
};
use patchpop_core::threshold;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use std::path::PathBuf;

fn core_err(err: patchpop_core::Error) -> PyErr {
    use patchpop_core::Error as E;
    match err {
        E::InvalidPartition(_)
        | E::InvalidKernel(_)
        | E::InvalidGrowth(_)
        | E::InvalidProfile(_)
        | E::InvalidResolution(_)
        | E::InvalidSampleCount { .. }
        | E::PointOutsideDomain { .. }
        | E::PointOnInterface { .. }
        | E::DimensionMismatch { .. }
        | E::PreconditionUnmet(_) => PyValueError::new_err(err.to_string()),
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

fn cli_err(err: CliError) -> PyErr {
    match err {
        CliError::Config { .. } | CliError::Io(_) => PyValueError::new_err(err.to_string()),
        CliError::Numerical(inner) => core_err(inner),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Principal eigenpair of the linearized generation operator.
#[pyclass(frozen)]
struct Eigen {
    #[pyo3(get)]
    lambda0: f64,
    #[pyo3(get)]
    residual: f64,
    #[pyo3(get)]
    iterations: usize,
    phi0: Vec<f64>,
}

#[pymethods]
impl Eigen {
    /// Eigenfunction samples at the quadrature nodes, sup-normalized to 1.
    #[getter]
    fn phi0(&self) -> Vec<f64> {
        self.phi0.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "Eigen(lambda0={}, iterations={}, residual={})",
            self.lambda0, self.iterations, self.residual
        )
    }
}

/// Stationary profile produced by the monotone bracketing solver.
#[pyclass(frozen)]
struct Solution {
    #[pyo3(get)]
    regime: String,
    #[pyo3(get)]
    lambda0: f64,
    #[pyo3(get)]
    generations: usize,
    #[pyo3(get)]
    bracket_gap: f64,
    stationary: Vec<f64>,
}

#[pymethods]
impl Solution {
    /// Stationary profile values at the quadrature nodes.
    #[getter]
    fn stationary(&self) -> Vec<f64> {
        self.stationary.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(regime='{}', lambda0={}, generations={})",
            self.regime, self.lambda0, self.generations
        )
    }
}

/// A fully specified model run: landscape, growth map, discretization, and
/// tolerances, as read from the same TOML format the CLI uses.
#[pyclass]
struct Scenario {
    loaded: LoadedConfig,
    op: DiscreteOperator,
}

impl Scenario {
    fn from_loaded(loaded: LoadedConfig) -> PyResult<Self> {
        let op = DiscreteOperator::from_kernel(
            loaded.kernel.clone(),
            loaded.scenario.discretization.panels_per_patch,
            loaded.scenario.discretization.gauss_order,
        )
        .map_err(core_err)?;
        Ok(Self { loaded, op })
    }

    fn eigen_pair(&self) -> PyResult<EigenPair> {
        let t = &self.loaded.scenario.tolerances;
        principal_eigen(
            &self.op,
            self.loaded.growth.low_density_growth(),
            t.eigen_tol,
            t.max_eigen_iterations,
        )
        .map_err(core_err)
    }
}

#[pymethods]
impl Scenario {
    /// Load a scenario from a TOML file on disk.
    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Self::from_loaded(load_config(&path).map_err(cli_err)?)
    }

    /// Parse a scenario from TOML text.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Self::from_loaded(parse_config(text).map_err(cli_err)?)
    }

    /// Quadrature node positions of the discretization.
    fn nodes(&self) -> Vec<f64> {
        self.op.grid().nodes().to_vec()
    }

    /// Quadrature weights matching `nodes()`.
    fn weights(&self) -> Vec<f64> {
        self.op.grid().weights().to_vec()
    }

    /// Principal eigenvalue of the linearization at zero.
    fn lambda0(&self) -> PyResult<f64> {
        Ok(self.eigen_pair()?.lambda0)
    }

    /// Full principal eigenpair.
    fn principal_eigen(&self) -> PyResult<Eigen> {
        let pair = self.eigen_pair()?;
        Ok(Eigen {
            lambda0: pair.lambda0,
            residual: pair.residual,
            iterations: pair.iterations,
            phi0: pair.phi0,
        })
    }

    /// Long-run regime: `"extinction"`, `"persistence"`, or
    /// `"persistence_with_influx"`.
    fn classify(&self) -> PyResult<String> {
        let pair = self.eigen_pair()?;
        Ok(classify_regime(&self.loaded.growth, pair.lambda0).to_string())
    }

    /// Run the bracketing solver to the stationary profile.
    fn solve(&self) -> PyResult<Solution> {
        let pair = self.eigen_pair()?;
        let t = &self.loaded.scenario.tolerances;
        let settings = SolveSettings {
            stationary_tol: t.stationary_tol,
            extinction_threshold: t.extinction_threshold,
            max_generations: t.max_generations,
        };
        let report = solve_stationary(&self.op, &self.loaded.growth, &pair, &settings)
            .map_err(core_err)?;
        Ok(Solution {
            regime: report.regime.to_string(),
            lambda0: report.lambda0,
            generations: report.generations,
            bracket_gap: report.bracket_gap,
            stationary: report.stationary,
        })
    }

    /// Advance one generation from the node-sampled state `u`.
    fn next_generation(&self, u: Vec<f64>) -> PyResult<Vec<f64>> {
        self.op
            .next_generation(&self.loaded.growth, &u)
            .map_err(core_err)
    }

    /// Low-density growth factor at which the principal eigenvalue crosses 1.
    fn critical_r0(&self) -> PyResult<f64> {
        let t = &self.loaded.scenario.tolerances;
        threshold::critical_r0(&self.op, 1e-9, t.max_eigen_iterations).map_err(core_err)
    }

    /// Total settlement mass `integral of k(x, y) dy` for a destination `x`.
    fn kernel_mass_at(&self, x: f64) -> PyResult<f64> {
        patchpop_core::discretize::kernel_mass(&self.loaded.kernel, self.op.grid(), x)
            .map_err(core_err)
    }

    /// Run the model's validation checks; returns `(name, passed, detail)`
    /// triples covering hypotheses, eigen bounds, and the uniqueness probe.
    fn verify(&self) -> PyResult<Vec<(String, bool, String)>> {
        let mut out: Vec<(String, bool, String)> = Vec::new();
        let report = validate_assumptions(&self.loaded.kernel, &self.loaded.growth, 32)
            .map_err(core_err)?;
        for check in report.checks {
            out.push((format!("hypothesis:{}", check.name), check.passed, check.detail));
        }
        let pair = self.eigen_pair()?;
        let r0 = self.loaded.growth.low_density_growth();
        let bound = check_spectral_lower_bound(&self.op, &pair, r0, 1e-9);
        out.push((
            "spectral_lower_bound".into(),
            bound.passed,
            format!("lambda0 = {} vs bound {}", bound.lambda0, bound.lower_bound),
        ));
        let floor = check_positivity_floor(&self.op, &pair, r0, 1e-9);
        out.push((
            "positivity_floor".into(),
            floor.passed,
            format!("min phi0 = {} vs floor {}", floor.min_phi0, floor.floor),
        ));
        let mortality = check_mortality_bound(&self.op, &pair, r0, 1e-9);
        out.push((
            "mortality_bound".into(),
            mortality.passed,
            if mortality.applicable {
                format!("lambda0 = {} stays at or below 1", mortality.lambda0)
            } else {
                "not applicable".into()
            },
        ));
        Ok(out)
    }

    /// Iterate from `seeds` random starts and return the largest sup gap
    /// between their limits.
    #[pyo3(signature = (seeds = 3, tol = 1e-8))]
    fn uniqueness_gap(&self, seeds: usize, tol: f64) -> PyResult<f64> {
        let t = &self.loaded.scenario.tolerances;
        let report = uniqueness_probe(
            &self.op,
            &self.loaded.growth,
            seeds,
            tol,
            t.max_generations,
            self.loaded.scenario.seed,
        )
        .map_err(core_err)?;
        Ok(report.max_pairwise_gap)
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(patches={}, nodes={}, r0={})",
            self.loaded.kernel.partition().patch_count(),
            self.op.len(),
            self.loaded.growth.low_density_growth()
        )
    }
}

#[pymodule]
fn patchpop(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<Eigen>()?;
    m.add_class::<Solution>()?;
    Ok(())
}
