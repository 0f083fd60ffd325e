use serde::{Deserialize, Serialize};

use super::{SolveResult, SolveStatus, SolverConfig};
use crate::error::{Error, Result};
use crate::functional::EnergyConfig;
use crate::linalg::{dot, sub};

const ALPHA_MAX: f64 = 1e3;
/// Relative energy resolution below which Armijo decrease is not measurable.
const ROUNDOFF: f64 = 1e-11;
const STALL_LIMIT: usize = 5;
/// Largest admissible `E′(trial)·d / |E′(u)·d|` for a roundoff-regime step.
const WOLFE_SLACK: f64 = 0.5;
/// Parabolic refinement is tried when the vertex lies below this fraction of the accepted step.
const PARABOLA_MAX_FRACTION: f64 = 0.9;
/// Powell's restart test on successive gradients.
const POWELL_RESTART: f64 = 0.2;
/// Smallest cosine between a conjugate direction and the Sobolev gradient.
const MIN_DESCENT_COS: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    /// Sufficient decrease verified on energy values.
    Armijo,
    /// Accepted in the roundoff regime on the approximate Wolfe test, which
    /// uses the directional derivative at the trial point instead.
    ApproxWolfe,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Energy after the step.
    pub energy: f64,
    /// H¹₀ norm of the new iterate.
    pub h10_norm: f64,
    pub kind: StepKind,
}

/// Sobolev-gradient descent on `z = (K+M)⁻¹E′(u)` with Polak–Ribière+
/// conjugation and backtracking. With a ball constraint, trial points are
/// radially projected onto `‖u‖ <= r` and conjugation is dropped on the sphere.
pub fn minimize(cfg: &EnergyConfig, s: &SolverConfig, u0: &[f64]) -> Result<SolveResult> {
    s.validate()?;
    if u0.len() != cfg.n_dof() {
        return Err(Error::InvalidParameter(format!(
            "start has {} values, grid has {} dofs",
            u0.len(),
            cfg.n_dof()
        )));
    }
    let grid = cfg.grid();
    if let Some(r) = s.ball_radius {
        let n0 = grid.h10_norm(u0);
        if n0 > r * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!("start has norm {n0:.6e} outside the ball of radius {r:.6e}")));
        }
    }
    let project = |u: &mut Vec<f64>| {
        if let Some(r) = s.ball_radius {
            let n = grid.h10_norm(u);
            if n > r {
                let scale = r / n;
                u.iter_mut().for_each(|v| *v *= scale);
            }
        }
    };
    let on_boundary = |u: &[f64]| s.ball_radius.is_some_and(|r| grid.h10_norm(u) >= r * (1.0 - 1e-10));

    let tol = s.tol_residual;
    let mut u = u0.to_vec();
    let (mut e, mut r) = cfg.energy_and_gradient(&u)?;
    let mut z = grid.solve_kpm(&r)?;
    let mut res = dot(&r, &z).max(0.0).sqrt();
    let mut dir: Vec<f64> = z.iter().map(|v| -v).collect();
    let mut step: f64 = 0.5;
    let mut history = Vec::new();
    let mut stall = 0;
    let finish = |u, e, res, it, status, history| Ok(SolveResult::assemble(cfg, tol, u, e, res, it, status, history));

    for it in 0..s.max_iters {
        if res <= tol {
            return finish(u, e, res, it, SolveStatus::Converged, history);
        }
        // restart unless dir is a clear descent direction in the (K+M) metric
        let dir_norm = dot(&dir, &grid.apply_kpm(&dir)).max(0.0).sqrt();
        if -dot(&r, &dir) < MIN_DESCENT_COS * res * dir_norm {
            dir = z.iter().map(|v| -v).collect();
        }
        let mut alpha = (2.0 * step).min(ALPHA_MAX);
        let mut accepted = None;
        for _ in 0..=s.armijo.max_backtracks {
            let mut trial: Vec<f64> = u.iter().zip(&dir).map(|(ui, di)| ui + alpha * di).collect();
            project(&mut trial);
            let disp = sub(&trial, &u);
            let slope = dot(&r, &disp);
            let e_try = cfg.energy_value(&trial)?;
            if slope < 0.0 && e_try <= e + s.armijo.c1 * slope && e_try < e {
                // try the vertex of the parabola through E(0), E′(0)·disp, E(trial)
                let curv = e_try - e - slope;
                let tau = -slope / (2.0 * curv);
                if curv > 0.0 && tau < PARABOLA_MAX_FRACTION {
                    let a2 = tau * alpha;
                    let mut t2: Vec<f64> = u.iter().zip(&dir).map(|(ui, di)| ui + a2 * di).collect();
                    project(&mut t2);
                    let e2 = cfg.energy_value(&t2)?;
                    if e2 < e_try {
                        alpha = a2;
                        let d2 = sub(&t2, &u);
                        accepted = Some((t2, d2, e2, None, StepKind::Armijo));
                        break;
                    }
                }
                accepted = Some((trial, disp, e_try, None, StepKind::Armijo));
                break;
            }
            let floor = ROUNDOFF * (1.0 + e.abs());
            if slope < 0.0 && (s.armijo.c1 * slope).abs() <= floor && e_try <= e + floor {
                let r_try = cfg.gradient(&trial)?;
                if dot(&r_try, &disp) <= WOLFE_SLACK * slope.abs() {
                    accepted = Some((trial, disp, e_try, Some(r_try), StepKind::ApproxWolfe));
                    break;
                }
            }
            alpha *= s.armijo.backtrack;
        }
        let Some((trial, disp, e_new, r_new, kind)) = accepted else {
            let status = if on_boundary(&u) {
                SolveStatus::BoundaryStall
            } else {
                SolveStatus::LineSearchFailed
            };
            return finish(u, e, res, it, status, history);
        };
        let decrease = e - e_new;
        u = trial;
        e = e_new;
        r = match r_new {
            Some(r) => r,
            None => cfg.gradient(&u)?,
        };
        let z_new = grid.solve_kpm(&r)?;
        let res_new = dot(&r, &z_new).max(0.0).sqrt();
        // Polak–Ribière+ in the (K+M) metric; plain Sobolev steps inside an active ball
        let beta = if s.ball_radius.is_some() && on_boundary(&u) {
            0.0
        } else {
            let overlap = dot(&r, &z);
            if overlap.abs() >= POWELL_RESTART * res_new * res_new {
                0.0
            } else {
                (res_new * res_new - overlap).max(0.0) / (res * res)
            }
        };
        let beta = if beta.is_finite() { beta } else { 0.0 };
        dir = z_new.iter().zip(&dir).map(|(zi, di)| -zi + beta * di).collect();
        z = z_new;
        res = res_new;
        step = alpha;
        history.push(StepRecord {
            energy: e,
            h10_norm: grid.h10_norm(&u),
            kind,
        });
        if on_boundary(&u) {
            // KKT test: r + νKu = 0 for some ν >= 0
            let ku = grid.apply_stiffness(&u);
            let y = grid.solve_kpm(&ku)?;
            let nu = -dot(&r, &y) / dot(&ku, &y);
            if nu >= 0.0 {
                let rt: Vec<f64> = r.iter().zip(&ku).map(|(a, b)| a + nu * b).collect();
                if grid.dual_norm(&rt)? <= tol {
                    return finish(u, e, res, it + 1, SolveStatus::BoundaryStall, history);
                }
            }
            let moved = grid.h1_norm(&disp);
            if moved <= 1e-13 * (1.0 + grid.h1_norm(&u)) || decrease <= 1e-15 * (1.0 + e.abs()) {
                stall += 1;
                if stall >= STALL_LIMIT {
                    return finish(u, e, res, it + 1, SolveStatus::BoundaryStall, history);
                }
            } else {
                stall = 0;
            }
        }
    }
    let status = if res <= tol {
        SolveStatus::Converged
    } else {
        SolveStatus::MaxIters
    };
    finish(u, e, res, s.max_iters, status, history)
}
