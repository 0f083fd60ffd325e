//! Independent reference computations: sine-mode solutions of the
//! semilinear problem, central-difference gradients and exhaustive search on
//! tiny grids. None of them share code paths with the solver beyond energy
//! evaluation.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::EnergyConfig;
use crate::grid::Grid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OracleValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

/// Oracle against candidate. Vector errors use the max norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity: String,
    pub oracle_value: OracleValue,
    pub candidate_value: OracleValue,
    pub abs_err: f64,
    pub rel_err: f64,
}

impl OracleReport {
    pub fn scalar(quantity: impl Into<String>, oracle: f64, candidate: f64) -> Self {
        let abs_err = (oracle - candidate).abs();
        Self {
            quantity: quantity.into(),
            oracle_value: OracleValue::Scalar(oracle),
            candidate_value: OracleValue::Scalar(candidate),
            abs_err,
            rel_err: rel(abs_err, oracle.abs()),
        }
    }

    pub fn vector(quantity: impl Into<String>, oracle: Vec<f64>, candidate: Vec<f64>) -> Result<Self> {
        if oracle.len() != candidate.len() {
            return Err(Error::InvalidParameter(format!(
                "oracle has {} entries, candidate {}",
                oracle.len(),
                candidate.len()
            )));
        }
        let abs_err = oracle.iter().zip(&candidate).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = oracle.iter().map(|v| v.abs()).fold(0.0, f64::max);
        Ok(Self {
            quantity: quantity.into(),
            rel_err: rel(abs_err, scale),
            oracle_value: OracleValue::Vector(oracle),
            candidate_value: OracleValue::Vector(candidate),
            abs_err,
        })
    }
}

fn rel(abs_err: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        abs_err / scale
    } else if abs_err == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SemilinearSolution {
    Solution(Vec<f64>),
    /// `λ` hits the pencil eigenvalue `1 + λ_k` and the datum has a component on that mode.
    NoSolution { eigenvalue: f64 },
}

impl SemilinearSolution {
    pub fn solution(&self) -> Option<&[f64]> {
        match self {
            SemilinearSolution::Solution(u) => Some(u),
            SemilinearSolution::NoSolution { .. } => None,
        }
    }
}

/// Sine basis `sin(kπi/(n+1))` and the matching stencil eigenvalues `(4/h²)sin²(kπ/(2(n+1)))`.
fn sine_modes(n: usize, h: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let m = (n + 1) as f64;
    let basis = (1..=n)
        .map(|k| (1..=n).map(|i| (k as f64 * PI * i as f64 / m).sin()).collect())
        .collect();
    let eig = (1..=n).map(|k| 4.0 / (h * h) * (k as f64 * PI / (2.0 * m)).sin().powi(2)).collect();
    (basis, eig)
}

/// Solves `(K + M)u = λMu + Mh` by expansion in discrete sine modes.
pub fn semilinear_solve(grid: &Grid, lambda: f64, h: &[f64]) -> Result<SemilinearSolution> {
    if h.len() != grid.n_dof() {
        return Err(Error::InvalidParameter("datum length does not match the grid".into()));
    }
    let n = grid.n();
    let (nx, ny) = (n[0], if grid.dim() == 2 { n[1] } else { 1 });
    let (bx, ex) = sine_modes(nx, grid.h()[0]);
    let (by, ey) = if grid.dim() == 2 {
        sine_modes(ny, grid.h()[1])
    } else {
        (vec![vec![1.0]], vec![0.0])
    };
    let (sx, sy) = (2.0 / (nx + 1) as f64, if grid.dim() == 2 { 2.0 / (ny + 1) as f64 } else { 1.0 });

    // Coefficients c[l][k] = ⟨h, v_k ⊗ w_l⟩ / norms.
    let mut coef = vec![vec![0.0; nx]; ny];
    for (l, wl) in by.iter().enumerate() {
        for (k, vk) in bx.iter().enumerate() {
            let mut acc = 0.0;
            for j in 0..ny {
                let row = &h[j * nx..(j + 1) * nx];
                let inner: f64 = row.iter().zip(vk).map(|(a, b)| a * b).sum();
                acc += wl[j] * inner;
            }
            coef[l][k] = acc * sx * sy;
        }
    }
    let scale = 1e-10 * (1.0 + lambda.abs());
    let h_scale = h.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for l in 0..ny {
        for k in 0..nx {
            let pencil = 1.0 + ex[k] + ey[l];
            let d = pencil - lambda;
            if d.abs() <= scale * pencil {
                if coef[l][k].abs() > 1e-12 * (1.0 + h_scale) || h_scale == 0.0 {
                    return Ok(SemilinearSolution::NoSolution { eigenvalue: pencil });
                }
                coef[l][k] = 0.0;
            } else {
                coef[l][k] /= d;
            }
        }
    }
    let mut u = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let mut acc = 0.0;
            for (l, wl) in by.iter().enumerate() {
                let wj = wl[j];
                if wj == 0.0 {
                    continue;
                }
                acc += wj * coef[l].iter().zip(&bx).map(|(c, vk)| c * vk[i]).sum::<f64>();
            }
            u[j * nx + i] = acc;
        }
    }
    Ok(SemilinearSolution::Solution(u))
}

/// Central differences `(E(u + εe_i) − E(u − εe_i)) / 2ε`.
pub fn fd_gradient(cfg: &EnergyConfig, u: &[f64], eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let mut w = u.to_vec();
    let mut out = Vec::with_capacity(u.len());
    for i in 0..u.len() {
        w[i] = u[i] + eps;
        let ep = cfg.energy_value(&w)?;
        w[i] = u[i] - eps;
        let em = cfg.energy_value(&w)?;
        w[i] = u[i];
        out.push((ep - em) / (2.0 * eps));
    }
    Ok(out)
}

/// `(E(u + εv) − E(u − εv)) / 2ε`.
pub fn fd_directional(cfg: &EnergyConfig, u: &[f64], v: &[f64], eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let shift = |s: f64| -> Vec<f64> { u.iter().zip(v).map(|(a, b)| a + s * b).collect() };
    Ok((cfg.energy_value(&shift(eps))? - cfg.energy_value(&shift(-eps))?) / (2.0 * eps))
}

pub const BRUTE_MAX_DOFS: usize = 4;
pub const BRUTE_MAX_EVALS: u128 = 100_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteForceMin {
    pub u: Vec<f64>,
    pub energy: f64,
    /// Spacing of the refined lattice.
    pub cell: f64,
    /// Euclidean diameter of a refined cell, `cell·√dofs`.
    pub cell_diameter: f64,
}

fn lattice_min(cfg: &EnergyConfig, center: &[f64], half: f64, steps: usize) -> Result<(Vec<f64>, f64)> {
    let d = center.len();
    let total = steps.pow(d as u32);
    let spacing = 2.0 * half / (steps - 1) as f64;
    let point = |mut idx: usize| -> Vec<f64> {
        let mut u = vec![0.0; d];
        for (k, c) in center.iter().enumerate() {
            u[k] = c - half + spacing * (idx % steps) as f64;
            idx /= steps;
        }
        u
    };
    let best = (0..total)
        .into_par_iter()
        .map(|idx| {
            let u = point(idx);
            cfg.energy_value(&u).map(|e| (idx, e))
        })
        .try_reduce(
            || (usize::MAX, f64::INFINITY),
            |a, b| Ok(if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a }),
        )?;
    if best.0 == usize::MAX {
        return Err(Error::Degenerate("no finite energy on the search lattice".into()));
    }
    Ok((point(best.0), best.1))
}

/// Exhaustive lattice search on `[−box, box]^dofs`, refined once around the best node.
pub fn brute_force_min(cfg: &EnergyConfig, half_width: f64, steps: usize) -> Result<BruteForceMin> {
    let d = cfg.n_dof();
    if d > BRUTE_MAX_DOFS {
        return Err(Error::InvalidParameter(format!("brute force needs at most {BRUTE_MAX_DOFS} dofs, got {d}")));
    }
    if steps < 2 || (steps as u128).pow(d as u32) > BRUTE_MAX_EVALS {
        return Err(Error::InvalidParameter(format!(
            "steps^dofs = {steps}^{d} outside [2, {BRUTE_MAX_EVALS}]"
        )));
    }
    if !(half_width > 0.0) {
        return Err(Error::InvalidParameter(format!("box must be positive, got {half_width}")));
    }
    let coarse = 2.0 * half_width / (steps - 1) as f64;
    let (u0, _) = lattice_min(cfg, &vec![0.0; d], half_width, steps)?;
    let (u, energy) = lattice_min(cfg, &u0, coarse, steps)?;
    let cell = 2.0 * coarse / (steps - 1) as f64;
    Ok(BruteForceMin {
        u,
        energy,
        cell,
        cell_diameter: cell * (d as f64).sqrt(),
    })
}
