//! Solution pipelines: descent minimization (free or ball-constrained),
//! multistart global minimization, sphere scans, mountain-pass saddles and
//! μ-continuation.

mod descent;
mod global;
mod mountain;
mod pipeline;
mod sphere;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::functional::EnergyConfig;
use crate::grid::negative_part;

pub use descent::{minimize, StepKind, StepRecord};
pub use global::{
    estimate_nu1, global_minimize, nonexistence_scan, plateau_start, MultiStartResult, Nu1Estimate, RunSummary,
    ScanReport, ScanVerdict,
};
pub use mountain::{mountain_pass, refine_critical_point, Geometry, MountainPassResult};
pub use pipeline::{
    find_endpoint, h_smallness_search, mu_continuation, two_solution_search, Endpoint, HSmallness, MuEntry,
    TwoSolutionOptions, TwoSolutionResult,
};
pub use sphere::{sphere_level, sphere_scan, SphereLevel, SphereScan};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Armijo {
    pub c1: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for Armijo {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            backtrack: 0.5,
            max_backtracks: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Dual-norm residual at which a run counts as converged.
    pub tol_residual: f64,
    pub max_iters: usize,
    pub armijo: Armijo,
    /// Radius of the constraint `‖u‖ <= r` in the H¹₀ norm.
    pub ball_radius: Option<f64>,
    pub seed: u64,
    pub n_starts: usize,
    /// Interior points of the mountain-pass path.
    pub path_points: usize,
    /// Residual at the path maximum that ends the path phase.
    pub path_tol: f64,
    pub path_max_iters: usize,
    /// Iteration cap of the saddle refinement.
    pub refine_max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_residual: 1e-8,
            max_iters: 5000,
            armijo: Armijo::default(),
            ball_radius: None,
            seed: 0,
            n_starts: 20,
            path_points: 40,
            path_tol: 1e-3,
            path_max_iters: 20_000,
            refine_max_iters: 3000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.tol_residual > 0.0
            && self.path_tol > 0.0
            && self.armijo.c1 > 0.0
            && self.armijo.c1 < 0.5
            && self.armijo.backtrack > 0.0
            && self.armijo.backtrack < 1.0
            && self.path_points >= 2
            && self.ball_radius.is_none_or(|r| r > 0.0);
        if ok {
            Ok(())
        } else {
            Err(crate::Error::InvalidParameter(format!("inconsistent solver settings: {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Trivial,
    Nontrivial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIters,
    LineSearchFailed,
    /// Stopped on the sphere of a ball constraint with a stalled projected step.
    BoundaryStall,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveResult {
    #[serde(skip)]
    pub u: Vec<f64>,
    pub energy: f64,
    pub residual: f64,
    pub iters: usize,
    pub classification: Classification,
    /// `‖u₋‖₂`
    pub nonneg_violation: f64,
    pub l2_norm: f64,
    pub h10_norm: f64,
    pub converged: bool,
    pub status: SolveStatus,
    /// One record per accepted step.
    #[serde(skip)]
    pub history: Vec<StepRecord>,
}

impl SolveResult {
    pub(crate) fn assemble(
        cfg: &EnergyConfig,
        tol: f64,
        u: Vec<f64>,
        energy: f64,
        residual: f64,
        iters: usize,
        status: SolveStatus,
        history: Vec<StepRecord>,
    ) -> Self {
        let grid = cfg.grid();
        let l2_norm = grid.l2_norm(&u);
        let classification = classify(cfg, &u);
        Self {
            nonneg_violation: grid.l2_norm(&negative_part(&u)),
            h10_norm: grid.h10_norm(&u),
            l2_norm,
            energy,
            residual,
            iters,
            classification,
            converged: status == SolveStatus::Converged && residual <= tol,
            status,
            history,
            u,
        }
    }

    /// Recomputes energy and residual at `u` and packages the result.
    pub fn evaluate(cfg: &EnergyConfig, tol: f64, u: Vec<f64>) -> crate::Result<Self> {
        let energy = cfg.energy_value(&u)?;
        let residual = cfg.residual_norm(&u)?;
        let status = if residual <= tol {
            SolveStatus::Converged
        } else {
            SolveStatus::MaxIters
        };
        Ok(Self::assemble(cfg, tol, u, energy, residual, 0, status, Vec::new()))
    }
}

/// Trivial iff `‖u‖₂ <= 10⁻⁸(1 + ‖h‖₂)`.
pub fn classify(cfg: &EnergyConfig, u: &[f64]) -> Classification {
    if cfg.grid().l2_norm(u) <= cfg.trivial_threshold() {
        Classification::Trivial
    } else {
        Classification::Nontrivial
    }
}

/// Seeded random start number `index`: i.i.d. uniform nodal values rescaled
/// to an L² norm drawn log-uniformly from `[0.1, 10]`.
pub fn random_start(cfg: &EnergyConfig, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let target = 10f64.powf(rng.random_range(-1.0..=1.0));
    let mut u: Vec<f64> = (0..cfg.n_dof()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let norm = cfg.grid().l2_norm(&u);
    if norm > 0.0 {
        u.iter_mut().for_each(|v| *v *= target / norm);
    }
    u
}
