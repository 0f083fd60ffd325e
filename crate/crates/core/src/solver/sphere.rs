//! Minimum of the energy on spheres `‖u‖ = r` (H¹₀ norm).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{random_start, SolverConfig};
use crate::error::{Error, Result};
use crate::functional::EnergyConfig;
use crate::linalg::dot;

const SPHERE_MAX_ITERS: usize = 600;
const SPHERE_TOL: f64 = 1e-7;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereLevel {
    pub r: f64,
    /// Lowest energy found on the sphere.
    pub alpha: f64,
    /// Final energy from each start.
    pub start_levels: Vec<f64>,
    #[serde(skip)]
    pub argmin: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereScan {
    pub levels: Vec<SphereLevel>,
    /// Radius with the largest measured level.
    pub r_star: f64,
    pub alpha_star: f64,
}

fn scale_to(grid: &crate::grid::Grid, u: &[f64], r: f64) -> Option<Vec<f64>> {
    let n = grid.h10_norm(u);
    (n > 0.0).then(|| u.iter().map(|v| v * r / n).collect())
}

/// Riemannian descent on the sphere in the (K+M) metric from one start.
fn descend(cfg: &EnergyConfig, s: &SolverConfig, r: f64, start: Vec<f64>) -> Result<(f64, Vec<f64>)> {
    let grid = cfg.grid();
    let mut u = start;
    let (mut e, mut g_dual) = cfg.energy_and_gradient(&u)?;
    let mut step = 0.5;
    for _ in 0..SPHERE_MAX_ITERS {
        let g = grid.solve_kpm(&g_dual)?;
        let ku = grid.apply_stiffness(&u);
        let n = grid.solve_kpm(&ku)?;
        let coef = dot(&g, &ku) / dot(&n, &ku);
        let gt: Vec<f64> = g.iter().zip(&n).map(|(a, b)| a - coef * b).collect();
        let gnorm2 = dot(&gt, &grid.apply_kpm(&gt)).max(0.0);
        if gnorm2.sqrt() <= SPHERE_TOL * (1.0 + e.abs()) {
            break;
        }
        let mut alpha = 2.0 * step;
        let mut accepted = None;
        for _ in 0..=s.armijo.max_backtracks {
            let moved: Vec<f64> = u.iter().zip(&gt).map(|(a, b)| a - alpha * b).collect();
            if let Some(trial) = scale_to(grid, &moved, r) {
                let e_try = cfg.energy_value(&trial)?;
                if e_try <= e - s.armijo.c1 * alpha * gnorm2 {
                    accepted = Some((trial, e_try));
                    break;
                }
            }
            alpha *= s.armijo.backtrack;
        }
        let Some((trial, e_try)) = accepted else { break };
        u = trial;
        e = e_try;
        g_dual = cfg.gradient(&u)?;
        step = alpha;
    }
    Ok((e, u))
}

/// Measured `α(r) = min_{‖u‖=r} E(u)` over deterministic starts (φ₁, the
/// plateau, the datum direction) and two seeded random starts.
pub fn sphere_level(cfg: &EnergyConfig, s: &SolverConfig, r: f64) -> Result<SphereLevel> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("sphere radius must be positive, got {r}")));
    }
    let grid = cfg.grid();
    let mut starts = vec![grid.eigen()?.phi1.clone(), grid.plateau_field(1.0, 0.2)?];
    if cfg.h().iter().any(|&v| v > 0.0) {
        starts.push(cfg.h().to_vec());
    }
    for k in 0..2 {
        starts.push(random_start(cfg, s.seed, 1000 + k));
    }
    let mut levels = Vec::with_capacity(starts.len());
    let mut best: Option<(f64, Vec<f64>)> = None;
    for st in starts {
        let Some(u0) = scale_to(grid, &st, r) else { continue };
        let (e, u) = descend(cfg, s, r, u0)?;
        levels.push(e);
        if best.as_ref().is_none_or(|b| e < b.0) {
            best = Some((e, u));
        }
    }
    let (alpha, argmin) = best.ok_or_else(|| Error::Degenerate("no usable sphere start".into()))?;
    Ok(SphereLevel {
        r,
        alpha,
        start_levels: levels,
        argmin,
    })
}

/// Sphere levels over `radii`; `r_star` maximizes the measured level.
pub fn sphere_scan(cfg: &EnergyConfig, s: &SolverConfig, radii: &[f64]) -> Result<SphereScan> {
    if radii.is_empty() {
        return Err(Error::InvalidParameter("sphere scan needs at least one radius".into()));
    }
    let levels = radii
        .par_iter()
        .map(|&r| sphere_level(cfg, s, r))
        .collect::<Result<Vec<_>>>()?;
    let best = levels
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.alpha.total_cmp(&b.1.alpha).then(b.0.cmp(&a.0)))
        .map(|(_, l)| (l.r, l.alpha))
        .expect("nonempty");
    Ok(SphereScan {
        levels,
        r_star: best.0,
        alpha_star: best.1,
    })
}
