//! Stationary states of a discrete-time population on a patchy landscape.
//!
//! The population redistributes through a dispersal-and-settlement kernel
//! that jumps at finitely many patch interfaces and reproduces through a
//! saturating growth map, giving the generation update
//! `u_{n+1}(x) = integral of k(x, y) F(u_n(y)) dy` over a bounded interval.
//! This crate discretizes that operator on an interface-aligned
//! Gauss-Legendre grid and answers the long-run questions about it:
//!
//! - [`spectral`]: the principal eigenvalue of the linearization at zero and
//!   the bounds it must respect;
//! - [`dynamics`]: regime classification, monotone two-sided bracketing to
//!   the stationary profile, and randomized uniqueness probes;
//! - [`threshold`]: critical parameter location and phase-table sweeps;
//! - [`cli`]: the scenario file format and the `patchpop` command-line tool.
//!
//! Runs are deterministic to the byte: summation orders are fixed, random
//! starts are seeded, and reports are emitted with stable formatting.

pub mod cli;
pub mod discretize;
pub mod dynamics;
pub mod error;
pub mod landscape;
pub mod spectral;
pub mod threshold;

pub use discretize::{sup_norm, DiscreteOperator, Grid};
pub use error::{Error, Result};
pub use landscape::{
    validate_assumptions, GrowthFunction, KernelForm, KernelPiece, KernelSpec, PatchPartition,
    PiecewiseProfile,
};
pub use spectral::{principal_eigen, EigenPair};
pub use dynamics::{
    classify_regime, solve_stationary, uniqueness_probe, Regime, RegimeReport, SolveSettings,
};
pub use threshold::{critical_r0, sweep, SweepContext, SweepParameter, SweepSpec};
