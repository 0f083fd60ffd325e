//! Mountain-pass saddles by elastic-path deformation followed by residual
//! minimization.

use serde::{Deserialize, Serialize};

use super::{sphere_scan, SolveResult, SolveStatus, SolverConfig};
use crate::error::{Error, Result};
use crate::functional::EnergyConfig;
use crate::grid::Grid;
use crate::linalg::{dot, max_abs, sub};
use crate::sample::logspace;

const STAGNATION_WINDOW: usize = 500;
const GEOMETRY_RADII: usize = 12;

/// Sphere certificate: `E >= alpha` on `‖u‖ = r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub r: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MountainPassResult {
    #[serde(skip)]
    pub path: Vec<Vec<f64>>,
    pub path_energies: Vec<f64>,
    /// Maximum energy along the final path.
    pub path_max: f64,
    /// Energy of the refined saddle.
    pub level_c: f64,
    pub saddle: SolveResult,
    pub endpoints: (f64, f64),
    pub mp_gap: f64,
    pub path_iters: usize,
    /// Residual at the path maximum when the path phase ended.
    pub path_residual: f64,
    pub geometry: Geometry,
}

fn reparametrize(grid: &Grid, path: &mut [Vec<f64>]) {
    let p = path.len() - 1;
    let mut cum = vec![0.0; p + 1];
    for k in 0..p {
        cum[k + 1] = cum[k] + grid.h10_norm(&sub(&path[k + 1], &path[k]));
    }
    let total = cum[p];
    if !(total > 0.0) {
        return;
    }
    let old = path.to_vec();
    let mut seg = 0;
    for (j, slot) in path.iter_mut().enumerate().take(p).skip(1) {
        let target = total * j as f64 / p as f64;
        while seg + 1 < p && cum[seg + 1] < target {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let theta = if len > 0.0 { ((target - cum[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        *slot = old[seg]
            .iter()
            .zip(&old[seg + 1])
            .map(|(a, b)| (1.0 - theta) * a + theta * b)
            .collect();
    }
}

fn check_geometry(
    cfg: &EnergyConfig,
    s: &SolverConfig,
    u_low: &[f64],
    u_far: &[f64],
    e_ends: (f64, f64),
    given: Option<Geometry>,
) -> Result<Geometry> {
    let grid = cfg.grid();
    let (n_low, n_far) = (grid.h10_norm(u_low), grid.h10_norm(u_far));
    let geometry = match given {
        Some(g) => g,
        None => {
            if !(n_far > n_low) {
                return Err(Error::Precondition(format!(
                    "far endpoint norm {n_far:.6e} does not exceed the low endpoint norm {n_low:.6e}"
                )));
            }
            let lo = if n_low > 0.0 { n_low } else { n_far * 1e-6 };
            let radii: Vec<f64> = logspace(lo, n_far, GEOMETRY_RADII + 2)[1..=GEOMETRY_RADII].to_vec();
            let scan = sphere_scan(cfg, s, &radii)?;
            Geometry {
                r: scan.r_star,
                alpha: scan.alpha_star,
            }
        }
    };
    let top = e_ends.0.max(e_ends.1);
    if !(n_low < geometry.r && geometry.r < n_far) {
        return Err(Error::Precondition(format!(
            "sphere radius {:.6e} does not separate the endpoints (norms {n_low:.6e}, {n_far:.6e})",
            geometry.r
        )));
    }
    if !(geometry.alpha > top) {
        return Err(Error::Precondition(format!(
            "no mountain-pass geometry: sphere level {:.6e} at r = {:.6e} is not above the endpoint energies {:.6e}, {:.6e}",
            geometry.alpha, geometry.r, e_ends.0, e_ends.1
        )));
    }
    Ok(geometry)
}

/// Finds a mountain-pass critical point between `u_low` and `u_far`.
///
/// The path starts linear (or from `warm`, with its endpoints replaced) and is
/// deformed by Armijo steps at its maximum with equal-arclength
/// reparametrization, until the residual there drops below `s.path_tol` or
/// progress stalls. The maximum point is then refined by
/// [`refine_critical_point`].
pub fn mountain_pass(
    cfg: &EnergyConfig,
    s: &SolverConfig,
    u_low: &[f64],
    u_far: &[f64],
    geometry: Option<Geometry>,
    warm: Option<&[Vec<f64>]>,
) -> Result<MountainPassResult> {
    s.validate()?;
    let grid = cfg.grid();
    let n = cfg.n_dof();
    if u_low.len() != n || u_far.len() != n {
        return Err(Error::InvalidParameter("endpoint length does not match the grid".into()));
    }
    let sep = grid.h10_norm(&sub(u_far, u_low));
    if sep <= 1e-12 * (1.0 + grid.h10_norm(u_low)) {
        return Err(Error::Degenerate("mountain-pass endpoints coincide".into()));
    }
    let e_ends = (cfg.energy_value(u_low)?, cfg.energy_value(u_far)?);
    let geometry = check_geometry(cfg, s, u_low, u_far, e_ends, geometry)?;

    let p = s.path_points;
    let mut path: Vec<Vec<f64>> = match warm {
        Some(w) if w.len() == p + 1 && w.iter().all(|v| v.len() == n) => {
            let mut w = w.to_vec();
            w[0] = u_low.to_vec();
            w[p] = u_far.to_vec();
            w
        }
        _ => (0..=p)
            .map(|k| {
                let t = k as f64 / p as f64;
                u_low.iter().zip(u_far).map(|(a, b)| (1.0 - t) * a + t * b).collect()
            })
            .collect(),
    };
    reparametrize(grid, &mut path);

    let mut energies = vec![0.0; p + 1];
    energies[0] = e_ends.0;
    energies[p] = e_ends.1;
    let mut step = 0.5;
    let mut best_max = f64::INFINITY;
    let mut since_improvement = 0;
    let mut path_iters = 0;
    let mut path_residual = f64::INFINITY;
    for it in 0..s.path_max_iters {
        path_iters = it;
        for k in 1..p {
            energies[k] = cfg.energy_value(&path[k])?;
        }
        let k_star = (1..p).max_by(|&a, &b| energies[a].total_cmp(&energies[b])).expect("interior points");
        let e_max = energies[k_star];
        let r = cfg.gradient(&path[k_star])?;
        let z = grid.solve_kpm(&r)?;
        let res2 = dot(&r, &z).max(0.0);
        path_residual = res2.sqrt();
        if path_residual <= s.path_tol {
            break;
        }
        if e_max < best_max - 1e-13 * (1.0 + e_max.abs()) {
            best_max = e_max;
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement >= STAGNATION_WINDOW {
                break;
            }
        }
        let mut alpha = 2.0 * step;
        let mut moved = false;
        for _ in 0..=s.armijo.max_backtracks {
            let trial: Vec<f64> = path[k_star].iter().zip(&z).map(|(u, d)| u - alpha * d).collect();
            let e_try = cfg.energy_value(&trial)?;
            if e_try <= e_max - s.armijo.c1 * alpha * res2 {
                path[k_star] = trial;
                moved = true;
                break;
            }
            alpha *= s.armijo.backtrack;
        }
        if !moved {
            break;
        }
        step = alpha;
        reparametrize(grid, &mut path);
    }
    for k in 1..p {
        energies[k] = cfg.energy_value(&path[k])?;
    }
    let k_star = (1..p).max_by(|&a, &b| energies[a].total_cmp(&energies[b])).expect("interior points");
    let path_max = energies[k_star];

    let saddle = refine_critical_point(cfg, s, &path[k_star])?;
    let collapse = 10.0 * s.tol_residual;
    if grid.h10_norm(&sub(&saddle.u, u_low)) < collapse {
        return Err(Error::stage("mountain_pass", "refined saddle collapsed onto the low endpoint"));
    }
    if grid.h10_norm(&sub(&saddle.u, u_far)) < collapse {
        return Err(Error::stage("mountain_pass", "refined saddle collapsed onto the far endpoint"));
    }
    let level_c = saddle.energy;
    let mp_gap = level_c - e_ends.0.max(e_ends.1);
    if saddle.converged && !(mp_gap > 0.0) {
        return Err(Error::stage(
            "mountain_pass",
            format!("critical level {level_c:.6e} is not above the endpoint energies (gap {mp_gap:.3e})"),
        ));
    }
    Ok(MountainPassResult {
        path,
        path_energies: energies,
        path_max,
        level_c,
        saddle,
        endpoints: e_ends,
        mp_gap,
        path_iters,
        path_residual,
        geometry,
    })
}

/// Central-difference Hessian–vector product of the energy.
fn hess_vec(cfg: &EnergyConfig, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let vn = max_abs(v);
    if vn == 0.0 {
        return Ok(vec![0.0; v.len()]);
    }
    let eps = 1e-6 * (1.0 + max_abs(u));
    let up: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + eps * b / vn).collect();
    let um: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - eps * b / vn).collect();
    let gp = cfg.gradient(&up)?;
    let gm = cfg.gradient(&um)?;
    Ok(gp.iter().zip(&gm).map(|(a, b)| (a - b) * vn / (2.0 * eps)).collect())
}

/// Minimizes `R(u) = ½ E′(u)ᵀ(K+M)⁻¹E′(u)` from `u0` by Polak–Ribière
/// conjugate gradients in the (K+M) metric, with Gauss–Newton initial steps.
/// Converges to the critical point near `u0` whatever its Morse index.
pub fn refine_critical_point(cfg: &EnergyConfig, s: &SolverConfig, u0: &[f64]) -> Result<SolveResult> {
    let grid = cfg.grid();
    let tol = s.tol_residual;
    let mut u = u0.to_vec();
    let r0 = cfg.gradient(&u)?;
    let mut z = grid.solve_kpm(&r0)?;
    let mut big_r = 0.5 * dot(&r0, &z);
    let mut g_r = hess_vec(cfg, &u, &z)?;
    let mut p_r = grid.solve_kpm(&g_r)?;
    let mut d: Vec<f64> = p_r.iter().map(|v| -v).collect();
    let mut status = SolveStatus::MaxIters;
    let mut iters = s.refine_max_iters;
    for it in 0..s.refine_max_iters {
        if (2.0 * big_r).max(0.0).sqrt() <= tol {
            status = SolveStatus::Converged;
            iters = it;
            break;
        }
        let mut steepest = false;
        let accepted = loop {
            let slope = dot(&g_r, &d);
            let hd = hess_vec(cfg, &u, &d)?;
            let w = grid.solve_kpm(&hd)?;
            let denom = dot(&hd, &w);
            let mut t = -dot(&z, &hd) / denom;
            if !(t.is_finite() && t > 0.0) {
                t = 1.0;
            }
            let mut found = None;
            if slope < 0.0 {
                for _ in 0..=s.armijo.max_backtracks {
                    let trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                    let r_try = cfg.gradient(&trial)?;
                    let z_try = grid.solve_kpm(&r_try)?;
                    let big_r_try = 0.5 * dot(&r_try, &z_try);
                    if big_r_try <= big_r + s.armijo.c1 * t * slope {
                        found = Some((trial, z_try, big_r_try));
                        break;
                    }
                    t *= s.armijo.backtrack;
                }
            }
            if found.is_some() || steepest {
                break found;
            }
            steepest = true;
            d = p_r.iter().map(|v| -v).collect();
        };
        let Some((trial, z_new, big_r_new)) = accepted else {
            status = SolveStatus::LineSearchFailed;
            iters = it;
            break;
        };
        u = trial;
        z = z_new;
        big_r = big_r_new;
        let g_new = hess_vec(cfg, &u, &z)?;
        let p_new = grid.solve_kpm(&g_new)?;
        let beta = (dot(&g_new, &sub(&p_new, &p_r)) / dot(&g_r, &p_r)).max(0.0);
        d = p_new.iter().zip(&d).map(|(a, b)| -a + beta * b).collect();
        if !(dot(&g_new, &d) < 0.0) || !beta.is_finite() {
            d = p_new.iter().map(|v| -v).collect();
        }
        g_r = g_new;
        p_r = p_new;
    }
    let energy = cfg.energy_value(&u)?;
    let res = (2.0 * big_r).max(0.0).sqrt();
    Ok(SolveResult::assemble(cfg, tol, u, energy, res, iters, status, Vec::new()))
}
