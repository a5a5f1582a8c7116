//! Interface-aligned Nystrom discretization.
//!
//! Each patch is cut into equal panels and each panel carries a
//! Gauss-Legendre rule, so panel boundaries land exactly on the kernel's
//! discontinuity set and every quadrature node sees a smooth kernel block in
//! both arguments. The integral operator becomes a dense matrix
//! `K[i][j] = k(x_i, y_j) * w_j` acting on node values.
//!
//! Summation order is fixed (row-major, left to right) so repeated runs on
//! the same inputs produce bitwise-identical results.

use crate::error::{Error, Result};
use crate::landscape::{GrowthFunction, KernelSpec, PatchPartition, PiecewiseProfile};

/// Supported Gauss-Legendre orders.
pub const MAX_GAUSS_ORDER: usize = 16;

/// Nodes and weights of the `order`-point Gauss-Legendre rule on `(-1, 1)`,
/// nodes ascending. Roots of the Legendre polynomial are found by Newton
/// iteration from the usual cosine estimates.
fn gauss_legendre(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order == 0 || order > MAX_GAUSS_ORDER {
        return Err(Error::InvalidResolution(format!(
            "gauss_order must be between 1 and {MAX_GAUSS_ORDER}, got {order}"
        )));
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 5e-16 {
                break;
            }
        }
        if n % 2 == 1 && i == n / 2 {
            x = 0.0;
        }
        let (_, dp) = legendre_pair(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is the (i+1)-th largest root; mirror it to fill ascending order.
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Ok((nodes, weights))
}

/// Legendre polynomial `P_n(x)` and its derivative via the three-term
/// recurrence. Valid for `n >= 1` and `x` strictly inside `(-1, 1)`.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// One quadrature panel: a subinterval of a single patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub lo: f64,
    pub hi: f64,
    pub patch: usize,
}

/// Quadrature grid: interface-aligned panels with per-panel Gauss-Legendre
/// nodes and weights, in ascending node order.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    partition: PatchPartition,
    panels_per_patch: usize,
    gauss_order: usize,
    panels: Vec<Panel>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    node_panel: Vec<usize>,
    node_patch: Vec<usize>,
}

impl Grid {
    /// Build the grid for a partition: `panels_per_patch` equal panels per
    /// patch, `gauss_order` nodes per panel. Panel boundaries hit the patch
    /// endpoints exactly, so no node ever lands on an interface.
    pub fn build(
        partition: &PatchPartition,
        panels_per_patch: usize,
        gauss_order: usize,
    ) -> Result<Self> {
        if panels_per_patch == 0 {
            return Err(Error::InvalidResolution(
                "panels_per_patch must be at least 1".into(),
            ));
        }
        let (gl_nodes, gl_weights) = gauss_legendre(gauss_order)?;
        let patch_count = partition.patch_count();
        let panel_count = patch_count * panels_per_patch;
        let mut panels = Vec::with_capacity(panel_count);
        let mut nodes = Vec::with_capacity(panel_count * gauss_order);
        let mut weights = Vec::with_capacity(panel_count * gauss_order);
        let mut node_panel = Vec::with_capacity(panel_count * gauss_order);
        let mut node_patch = Vec::with_capacity(panel_count * gauss_order);
        for patch in 0..patch_count {
            let (patch_lo, patch_hi) = partition.patch_bounds(patch);
            let width = (patch_hi - patch_lo) / panels_per_patch as f64;
            for k in 0..panels_per_patch {
                // Endpoints are taken verbatim so panel edges align with the
                // discontinuity set to the last bit.
                let lo = if k == 0 {
                    patch_lo
                } else {
                    patch_lo + width * k as f64
                };
                let hi = if k + 1 == panels_per_patch {
                    patch_hi
                } else {
                    patch_lo + width * (k + 1) as f64
                };
                let mid = 0.5 * (lo + hi);
                let half = 0.5 * (hi - lo);
                let panel_idx = panels.len();
                panels.push(Panel { lo, hi, patch });
                for (&xi, &wi) in gl_nodes.iter().zip(&gl_weights) {
                    nodes.push(mid + half * xi);
                    weights.push(half * wi);
                    node_panel.push(panel_idx);
                    node_patch.push(patch);
                }
            }
        }
        Ok(Self {
            partition: partition.clone(),
            panels_per_patch,
            gauss_order,
            panels,
            nodes,
            weights,
            node_panel,
            node_patch,
        })
    }

    pub fn partition(&self) -> &PatchPartition {
        &self.partition
    }

    pub fn half_length(&self) -> f64 {
        self.partition.half_length()
    }

    pub fn panels_per_patch(&self) -> usize {
        self.panels_per_patch
    }

    pub fn gauss_order(&self) -> usize {
        self.gauss_order
    }

    /// Number of quadrature nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    /// Patch containing node `i`.
    pub fn node_patch(&self, i: usize) -> usize {
        self.node_patch[i]
    }

    /// Panel containing node `i`.
    pub fn node_panel(&self, i: usize) -> usize {
        self.node_panel[i]
    }

    /// Quadrature approximation of the integral of a node-value vector,
    /// summed in fixed node order.
    pub fn integral(&self, u: &[f64]) -> f64 {
        assert_eq!(u.len(), self.nodes.len(), "node-value vector length");
        let mut acc = 0.0;
        for (ui, wi) in u.iter().zip(&self.weights) {
            acc += ui * wi;
        }
        acc
    }

    /// Quadrature-weighted L2 norm of a node-value vector.
    pub fn weighted_l2_norm(&self, u: &[f64]) -> f64 {
        assert_eq!(u.len(), self.nodes.len(), "node-value vector length");
        let mut acc = 0.0;
        for (ui, wi) in u.iter().zip(&self.weights) {
            acc += ui * ui * wi;
        }
        acc.sqrt()
    }

    /// Node values of a piecewise-constant profile. The profile must live on
    /// the same domain.
    pub fn sample_profile(&self, profile: &PiecewiseProfile) -> Result<Vec<f64>> {
        if profile.half_length() != self.partition.half_length() {
            return Err(Error::PreconditionUnmet(format!(
                "profile lives on (-{}, {}) but the grid covers (-{}, {})",
                profile.half_length(),
                profile.half_length(),
                self.partition.half_length(),
                self.partition.half_length()
            )));
        }
        self.nodes.iter().map(|&x| profile.value_at(x)).collect()
    }
}

/// Sup norm of a node-value vector.
pub fn sup_norm(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Quadrature approximation of `integral k(x, y) dy` at a point `x`, summed
/// in fixed node order. Matches [`DiscreteOperator::row_mass`] bit for bit
/// when `x` is a grid node.
pub fn kernel_mass(kernel: &KernelSpec, grid: &Grid, x: f64) -> Result<f64> {
    let mut acc = 0.0;
    for (&y, &w) in grid.nodes().iter().zip(grid.weights()) {
        acc += kernel.eval(x, y)? * w;
    }
    Ok(acc)
}

/// Dense Nystrom discretization of the dispersal operator
/// `u -> integral k(., y) u(y) dy`.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: Grid,
    kernel: KernelSpec,
    /// Row-major `n x n` matrix, entry `(i, j) = k(x_i, y_j) * w_j`.
    matrix: Vec<f64>,
}

impl DiscreteOperator {
    /// Assemble the matrix on an existing grid. The grid must discretize the
    /// kernel's own partition.
    pub fn assemble(kernel: KernelSpec, grid: Grid) -> Result<Self> {
        if grid.partition() != kernel.partition() {
            return Err(Error::PreconditionUnmet(
                "grid was built for a different partition than the kernel".into(),
            ));
        }
        let n = grid.len();
        let mut matrix = Vec::with_capacity(n * n);
        for i in 0..n {
            let x = grid.nodes()[i];
            for j in 0..n {
                let entry = kernel.eval(x, grid.nodes()[j])? * grid.weights()[j];
                if !entry.is_finite() || entry <= 0.0 {
                    return Err(Error::InvalidKernel(format!(
                        "matrix entry ({i}, {j}) = {entry} is not strictly positive"
                    )));
                }
                matrix.push(entry);
            }
        }
        Ok(Self {
            grid,
            kernel,
            matrix,
        })
    }

    /// Build the grid and assemble in one step.
    pub fn from_kernel(
        kernel: KernelSpec,
        panels_per_patch: usize,
        gauss_order: usize,
    ) -> Result<Self> {
        let grid = Grid::build(kernel.partition(), panels_per_patch, gauss_order)?;
        Self::assemble(kernel, grid)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Number of quadrature nodes (matrix dimension).
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Matrix entry `(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.grid.len() + j]
    }

    /// Row sum `sum_j K[i][j]`: the quadrature mass of the kernel at node
    /// `i`, summed in fixed order.
    pub fn row_mass(&self, i: usize) -> f64 {
        let n = self.grid.len();
        let mut acc = 0.0;
        for &entry in &self.matrix[i * n..(i + 1) * n] {
            acc += entry;
        }
        acc
    }

    fn matvec(&self, u: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = 0.0;
            for (k, uj) in self.matrix[i * n..(i + 1) * n].iter().zip(u) {
                acc += k * uj;
            }
            out.push(acc);
        }
        out
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.grid.len() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.len(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// One population step: `(T u)_i = sum_j K[i][j] * F(u_j)`.
    pub fn next_generation(&self, growth: &GrowthFunction, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let fu: Vec<f64> = u.iter().map(|&v| growth.eval(v)).collect();
        Ok(self.matvec(&fu))
    }

    /// The linearization at zero: `(T0 u)_i = r0 * sum_j K[i][j] * u_j`.
    pub fn apply_linearized(&self, r0: f64, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let mut out = self.matvec(u);
        for v in &mut out {
            *v *= r0;
        }
        Ok(out)
    }
}
