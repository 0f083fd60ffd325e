//! Multistart global minimization, nonexistence scans and the empirical ν₁.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{minimize, random_start, Classification, SolveResult, SolveStatus, SolverConfig};
use crate::error::{Error, Result};
use crate::functional::EnergyConfig;
use crate::reaction::ReactionKind;

pub const PLATEAU_MARGIN: f64 = 0.2;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub start: usize,
    pub label: String,
    pub energy: f64,
    pub l2_norm: f64,
    pub residual: f64,
    pub converged: bool,
    pub classification: Classification,
    pub status: SolveStatus,
}

impl RunSummary {
    fn new(start: usize, label: String, r: &SolveResult) -> Self {
        Self {
            start,
            label,
            energy: r.energy,
            l2_norm: r.l2_norm,
            residual: r.residual,
            converged: r.converged,
            classification: r.classification,
            status: r.status,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultiStartResult {
    pub best: SolveResult,
    pub best_start: usize,
    pub runs: Vec<RunSummary>,
}

/// The plateau field `w(t, margin)` (margin 0.2, or wider when the mesh is too coarse) whose height `t = t₀ 2ᵏ`, `|k| <= 10`,
/// gives the lowest energy; `t₀` is the reaction's positivity witness.
pub fn plateau_start(cfg: &EnergyConfig) -> Result<Vec<f64>> {
    let t0 = cfg.reaction().g2_witness().unwrap_or(1.0);
    let grid = cfg.grid();
    // coarse grids need a wider margin to fit one ramp cell
    let fit = (0..grid.dim()).map(|a| 2.0 * grid.h()[a] / grid.extent()[a]).fold(0.0, f64::max);
    let margin = PLATEAU_MARGIN.max(fit * (1.0 + 1e-12));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in -10..=10 {
        let t = t0 * 2f64.powi(k);
        let w = if margin < 1.0 {
            grid.plateau_field(t, margin)?
        } else {
            vec![t; grid.n_dof()]
        };
        let e = cfg.energy_value(&w)?;
        if best.as_ref().is_none_or(|b| e < b.0) {
            best = Some((e, w));
        }
    }
    Ok(best.expect("nonempty scan").1)
}

/// Labelled starts: `n_starts` seeded random fields followed by the plateau.
fn starts(cfg: &EnergyConfig, s: &SolverConfig) -> Result<Vec<(String, Vec<f64>)>> {
    let mut out: Vec<(String, Vec<f64>)> = (0..s.n_starts)
        .map(|i| (format!("random-{i}"), random_start(cfg, s.seed, i as u64)))
        .collect();
    out.push(("plateau".to_string(), plateau_start(cfg)?));
    Ok(out)
}

fn run_all(cfg: &EnergyConfig, s: &SolverConfig) -> Result<Vec<(String, SolveResult)>> {
    starts(cfg, s)?
        .into_par_iter()
        .map(|(label, u0)| minimize(cfg, s, &u0).map(|r| (label, r)))
        .collect()
}

/// Lowest-energy converged result over random starts and the plateau start;
/// ties go to the earlier start.
pub fn global_minimize(cfg: &EnergyConfig, s: &SolverConfig) -> Result<MultiStartResult> {
    let results = run_all(cfg, s)?;
    let runs: Vec<RunSummary> = results
        .iter()
        .enumerate()
        .map(|(i, (label, r))| RunSummary::new(i, label.clone(), r))
        .collect();
    let best = results
        .iter()
        .enumerate()
        .filter(|(_, (_, r))| r.converged)
        .min_by(|a, b| a.1 .1.energy.total_cmp(&b.1 .1.energy).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i);
    match best {
        Some(i) => Ok(MultiStartResult {
            best: results[i].1.clone(),
            best_start: i,
            runs,
        }),
        None => {
            let min_res = runs.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min);
            Err(Error::Unconverged(format!(
                "all {} starts unconverged (smallest residual {min_res:.3e})",
                runs.len()
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanVerdict {
    ConsistentWithNonexistence,
    NontrivialFound,
    /// `ν` equals the certified threshold; no claim is made.
    NoVerdict,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanReport {
    pub nu: f64,
    pub nu0: f64,
    pub runs: Vec<RunSummary>,
    pub verdict: ScanVerdict,
}

/// Runs the multistart set at `ν` with `h ≡ 0` and reports every terminal
/// state. The verdict only summarizes the search; the certified threshold is
/// the actual proof surrogate.
pub fn nonexistence_scan(cfg: &EnergyConfig, s: &SolverConfig, nu: f64, n_starts: usize) -> Result<ScanReport> {
    if cfg.reaction().kind() != ReactionKind::SublinearG {
        return Err(Error::Precondition("nonexistence scans need a sublinear reaction f = νg".into()));
    }
    if cfg.h().iter().any(|&v| v != 0.0) {
        return Err(Error::Precondition("nonexistence scans need h ≡ 0".into()));
    }
    let nu0 = cfg.reaction().nonexistence_threshold(cfg.gamma())?;
    let cfg = cfg.with_reaction(cfg.reaction().clone().with_nu(nu)?)?;
    let s = SolverConfig {
        n_starts,
        ..s.clone()
    };
    let results = run_all(&cfg, &s)?;
    let runs: Vec<RunSummary> = results
        .iter()
        .enumerate()
        .map(|(i, (label, r))| RunSummary::new(i, label.clone(), r))
        .collect();
    let verdict = if (nu - nu0).abs() <= 1e-12 * nu0 {
        ScanVerdict::NoVerdict
    } else if runs
        .iter()
        .any(|r| r.converged && r.classification == Classification::Nontrivial)
    {
        ScanVerdict::NontrivialFound
    } else {
        ScanVerdict::ConsistentWithNonexistence
    };
    Ok(ScanReport { nu, nu0, runs, verdict })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Nu1Estimate {
    /// Smallest grid value of ν whose global minimum is negative.
    pub nu1: Option<f64>,
    /// `(ν, best energy)` per grid point, `None` when no start converged.
    pub energies: Vec<(f64, Option<f64>)>,
}

/// Empirical ν₁: smallest `ν` on `nu_grid` for which the global minimum of
/// the energy is negative.
pub fn estimate_nu1(cfg: &EnergyConfig, s: &SolverConfig, nu_grid: &[f64]) -> Result<Nu1Estimate> {
    let mut grid = nu_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut energies = Vec::with_capacity(grid.len());
    let mut nu1 = None;
    for &nu in &grid {
        let c = cfg.with_reaction(cfg.reaction().clone().with_nu(nu)?)?;
        let e = match global_minimize(&c, s) {
            Ok(m) => Some(m.best.energy),
            Err(e) if e.is_unconverged() => None,
            Err(e) => return Err(e),
        };
        if nu1.is_none() && e.is_some_and(|v| v < -1e-12) {
            nu1 = Some(nu);
        }
        energies.push((nu, e));
    }
    Ok(Nu1Estimate { nu1, energies })
}
