//! Multi-stage pipelines: endpoint search along φ₁, the two-solution search,
//! μ-continuation and the datum smallness search.

use serde::{Deserialize, Serialize};

use super::{minimize, mountain_pass, sphere_level, sphere_scan, Geometry, MountainPassResult, SolveResult,
    SolveStatus, SolverConfig, SphereScan};
use crate::error::{Error, Result};
use crate::functional::EnergyConfig;
use crate::grid::EigenPair;
use crate::linalg::sub;
use crate::sample::{logspace, SampleSpec};

pub const PROFILE_POINTS: usize = 241;
pub const PROFILE_SPAN: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Endpoint {
    /// Smallest profile point with `E(Tφ₁)` below the threshold.
    pub t: f64,
    pub energy: f64,
    pub threshold: f64,
    /// `(t, E(tφ₁))` on the geometric grid.
    pub profile: Vec<(f64, f64)>,
    /// Secant slope of the profile over its last decade.
    pub tail_slope: f64,
}

fn profile(cfg: &EnergyConfig, eig: &EigenPair, t_max: f64) -> Result<Vec<(f64, f64)>> {
    logspace(t_max * PROFILE_SPAN, t_max, PROFILE_POINTS)
        .into_iter()
        .map(|t| {
            let u: Vec<f64> = eig.phi1.iter().map(|p| t * p).collect();
            cfg.energy_value(&u).map(|e| (t, e))
        })
        .collect()
}

/// Scans `t ↦ E(tφ₁)` on a geometric grid in `(0, T_max]` and returns the
/// smallest `T` with `E(Tφ₁) < min(0, e_min) − gap`.
pub fn find_endpoint(cfg: &EnergyConfig, eig: &EigenPair, t_max: f64, gap: f64, e_min: f64) -> Result<Endpoint> {
    if !(t_max > 0.0 && gap >= 0.0) {
        return Err(Error::InvalidParameter(format!("need T_max > 0 and gap >= 0, got {t_max}, {gap}")));
    }
    let profile = profile(cfg, eig, t_max)?;
    let threshold = e_min.min(0.0) - gap;
    let last_decade = profile
        .iter()
        .find(|(t, _)| *t >= t_max / 10.0 * (1.0 - 1e-12))
        .copied()
        .expect("profile spans six decades");
    let (t_end, e_end) = *profile.last().expect("nonempty");
    let tail_slope = (e_end - last_decade.1) / (t_end - last_decade.0);
    match profile.iter().find(|(_, e)| *e < threshold) {
        Some(&(t, energy)) => Ok(Endpoint {
            t,
            energy,
            threshold,
            profile,
            tail_slope,
        }),
        None => {
            let margin = cfg
                .reaction()
                .audit_linear_growth(cfg.gamma(), eig.lambda1, &SampleSpec::default())
                .get("f3")
                .and_then(|c| c.margin);
            let (t_lo, e_lo) = profile
                .iter()
                .copied()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty");
            Err(Error::Precondition(format!(
                "E(tφ₁) stays above {threshold:.6e} on (0, {t_max:e}] (lowest {e_lo:.6e} at t = {t_lo:.6e}); \
                 sampled (f3) margin {}",
                margin.map_or("n/a".to_string(), |m| format!("{m:.6e}"))
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoSolutionOptions {
    pub t_max: f64,
    pub gap: f64,
    /// Number of sphere radii scanned.
    pub n_radii: usize,
}

impl Default for TwoSolutionOptions {
    fn default() -> Self {
        Self {
            t_max: 1e3,
            gap: 1e-3,
            n_radii: 16,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoSolutionResult {
    pub u_min: SolveResult,
    pub u_mp: MountainPassResult,
    pub c: f64,
    pub sphere: SphereScan,
    pub endpoint: Endpoint,
    /// `‖u_min − u_mp‖` in H¹₀.
    pub distance: f64,
}

/// Radii below the norm of the first profile point with negative energy.
fn scan_radii(cfg: &EnergyConfig, eig: &EigenPair, opts: &TwoSolutionOptions) -> Result<Vec<f64>> {
    let zero_h = cfg.with_h(vec![0.0; cfg.n_dof()])?;
    let prof = profile(&zero_h, eig, opts.t_max)?;
    let t_neg = prof.iter().find(|(_, e)| *e < 0.0).map_or(opts.t_max, |p| p.0);
    let r_hi = t_neg * eig.lambda1.sqrt();
    let n = opts.n_radii.max(2);
    let radii = logspace(r_hi * 1e-3, r_hi, n + 1);
    Ok(radii[..n].to_vec())
}

/// Upper bound on `‖u₋‖₂` for a field with dual residual `res` (tested
/// against `u₋`, the truncated equation gives `γ_min‖u₋‖²_{H¹} <= res‖u₋‖_{H¹}`).
fn positivity_bound(cfg: &EnergyConfig, res: f64) -> f64 {
    res / cfg.gamma().gamma_min() + 1e-12
}

fn require_converged(stage: &str, r: &SolveResult) -> Result<()> {
    if r.converged {
        Ok(())
    } else {
        Err(Error::stage(
            stage,
            Error::Unconverged(format!("{:?} after {} iterations, residual {:.3e}", r.status, r.iters, r.residual)),
        ))
    }
}

/// Local minimizer in a ball plus a mountain-pass solution.
pub fn two_solution_search(cfg: &EnergyConfig, s: &SolverConfig, opts: &TwoSolutionOptions) -> Result<TwoSolutionResult> {
    let grid = cfg.grid();
    let eig = grid.eigen()?.clone();
    let h_zero = cfg.h().iter().all(|&v| v == 0.0);

    let radii = scan_radii(cfg, &eig, opts).map_err(|e| Error::stage("sphere_scan", e))?;
    let sphere = sphere_scan(cfg, s, &radii).map_err(|e| Error::stage("sphere_scan", e))?;
    if !(sphere.alpha_star > 0.0) {
        return Err(Error::stage(
            "sphere_scan",
            format!("no sphere with a positive energy level (best {:.6e} at r = {:.6e})", sphere.alpha_star, sphere.r_star),
        ));
    }

    let ball = SolverConfig {
        ball_radius: Some(sphere.r_star),
        ..s.clone()
    };
    let u_min = minimize(cfg, &ball, &vec![0.0; cfg.n_dof()]).map_err(|e| Error::stage("ball_minimize", e))?;
    if u_min.status == SolveStatus::BoundaryStall {
        return Err(Error::stage("ball_minimize", "the ball minimizer sits on the sphere"));
    }
    require_converged("ball_minimize", &u_min)?;

    let endpoint =
        find_endpoint(cfg, &eig, opts.t_max, opts.gap, u_min.energy).map_err(|e| Error::stage("find_endpoint", e))?;
    let u_far: Vec<f64> = eig.phi1.iter().map(|p| endpoint.t * p).collect();

    let geometry = Geometry {
        r: sphere.r_star,
        alpha: sphere.alpha_star,
    };
    let mp = mountain_pass(cfg, s, &u_min.u, &u_far, Some(geometry), None).map_err(|e| match e {
        Error::Stage { .. } => e,
        other => Error::stage("mountain_pass", other),
    })?;
    require_converged("mountain_pass", &mp.saddle)?;

    for (name, r) in [("u_min", &u_min), ("u_mp", &mp.saddle)] {
        let bound = positivity_bound(cfg, r.residual);
        if r.nonneg_violation > bound {
            return Err(Error::stage(
                "checks",
                format!("{name} has negative part {:.3e} above the bound {bound:.3e}", r.nonneg_violation),
            ));
        }
    }
    if h_zero {
        if !(mp.saddle.l2_norm > 1e-2) {
            return Err(Error::stage("checks", format!("mountain-pass solution is trivial (‖u‖₂ = {:.3e})", mp.saddle.l2_norm)));
        }
    } else if !(mp.level_c >= sphere.alpha_star && sphere.alpha_star > u_min.energy) {
        return Err(Error::stage(
            "checks",
            format!(
                "level ordering failed: c = {:.6e}, alpha = {:.6e}, E(u_min) = {:.6e}",
                mp.level_c, sphere.alpha_star, u_min.energy
            ),
        ));
    }
    let distance = grid.h10_norm(&sub(&u_min.u, &mp.saddle.u));
    Ok(TwoSolutionResult {
        c: mp.level_c,
        u_min,
        u_mp: mp,
        sphere,
        endpoint,
        distance,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MuEntry {
    pub mu: f64,
    pub level_c: Option<f64>,
    pub low_energy: Option<f64>,
    pub result: Option<MountainPassResult>,
    pub error: Option<String>,
}

/// Mountain-pass levels `c_μ` along an increasing `μ` grid. The far endpoint
/// is fixed once for the smallest `μ` (where `E_μ` is largest) and each path
/// is warm-started from the previous one.
pub fn mu_continuation(
    cfg: &EnergyConfig,
    s: &SolverConfig,
    mu_grid: &[f64],
    alpha_j: f64,
    opts: &TwoSolutionOptions,
) -> Result<Vec<MuEntry>> {
    if mu_grid.is_empty() {
        return Err(Error::InvalidParameter("empty μ grid".into()));
    }
    if mu_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("μ grid must be strictly increasing".into()));
    }
    let grid = cfg.grid();
    let eig = grid.eigen()?.clone();
    let first = cfg.clone().with_mu(mu_grid[0], alpha_j)?;

    let radii = scan_radii(&first, &eig, opts).map_err(|e| Error::stage("sphere_scan", e))?;
    let sphere = sphere_scan(&first, s, &radii).map_err(|e| Error::stage("sphere_scan", e))?;
    let r_star = sphere.r_star;
    let ball = SolverConfig {
        ball_radius: Some(r_star),
        ..s.clone()
    };
    let low0 = minimize(&first, &ball, &vec![0.0; cfg.n_dof()]).map_err(|e| Error::stage("ball_minimize", e))?;
    require_converged("ball_minimize", &low0)?;
    let endpoint =
        find_endpoint(&first, &eig, opts.t_max, opts.gap, low0.energy).map_err(|e| Error::stage("find_endpoint", e))?;
    let u_far: Vec<f64> = eig.phi1.iter().map(|p| endpoint.t * p).collect();

    let mut entries = Vec::with_capacity(mu_grid.len());
    let mut u_low = low0.u.clone();
    let mut warm: Option<Vec<Vec<f64>>> = None;
    for &mu in mu_grid {
        let attempt = (|| -> Result<(f64, MountainPassResult, Vec<f64>)> {
            let c = cfg.clone().with_mu(mu, alpha_j)?;
            let low = minimize(&c, &ball, &u_low)?;
            require_converged("ball_minimize", &low)?;
            let level = sphere_level(&c, s, r_star)?;
            let geometry = Geometry { r: r_star, alpha: level.alpha };
            let mp = mountain_pass(&c, s, &low.u, &u_far, Some(geometry), warm.as_deref())?;
            require_converged("mountain_pass", &mp.saddle)?;
            Ok((low.energy, mp, low.u))
        })();
        match attempt {
            Ok((low_energy, mp, low_u)) => {
                u_low = low_u;
                warm = Some(mp.path.clone());
                entries.push(MuEntry {
                    mu,
                    level_c: Some(mp.level_c),
                    low_energy: Some(low_energy),
                    result: Some(mp),
                    error: None,
                });
            }
            Err(e) => entries.push(MuEntry {
                mu,
                level_c: None,
                low_energy: None,
                result: None,
                error: Some(e.to_string()),
            }),
        }
    }
    Ok(entries)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HSmallness {
    /// Largest certified amplitude, within a factor 2.
    pub beta: f64,
    pub r: f64,
    pub alpha: f64,
    /// `(β, best sphere level)` for every probe.
    pub probes: Vec<(f64, f64)>,
}

const BETA_MAX_DOUBLINGS: i32 = 10;
const BETA_MIN_EXP: i32 = -30;

/// Largest `β = 2ᵏ` such that the sphere scan with datum `β·ĥ` (ĥ the
/// L²-normalized `direction`) still certifies a positive level.
pub fn h_smallness_search(
    cfg: &EnergyConfig,
    s: &SolverConfig,
    direction: &[f64],
    opts: &TwoSolutionOptions,
) -> Result<HSmallness> {
    let grid = cfg.grid();
    if direction.len() != cfg.n_dof() {
        return Err(Error::InvalidParameter("direction length does not match the grid".into()));
    }
    let norm = grid.l2_norm(direction);
    if !(norm > 0.0) {
        return Err(Error::Degenerate("datum direction is zero".into()));
    }
    let dir: Vec<f64> = direction.iter().map(|v| v / norm).collect();
    let eig = grid.eigen()?.clone();
    let radii = scan_radii(cfg, &eig, opts)?;
    let mut probes = Vec::new();
    let mut probe = |beta: f64| -> Result<(f64, f64)> {
        let c = cfg.with_h(dir.iter().map(|v| beta * v).collect())?;
        let scan = sphere_scan(&c, s, &radii)?;
        probes.push((beta, scan.alpha_star));
        Ok((scan.r_star, scan.alpha_star))
    };
    let mut k = 0;
    let (r0, a0) = probe(1.0)?;
    let mut best = (a0 > 0.0).then_some((1.0, r0, a0));
    if best.is_some() {
        while k < BETA_MAX_DOUBLINGS {
            k += 1;
            let beta = 2f64.powi(k);
            let (r, a) = probe(beta)?;
            if a > 0.0 {
                best = Some((beta, r, a));
            } else {
                break;
            }
        }
    } else {
        while k > BETA_MIN_EXP {
            k -= 1;
            let beta = 2f64.powi(k);
            let (r, a) = probe(beta)?;
            if a > 0.0 {
                best = Some((beta, r, a));
                break;
            }
        }
    }
    match best {
        Some((beta, r, alpha)) => Ok(HSmallness { beta, r, alpha, probes }),
        None => Err(Error::Precondition(format!(
            "no amplitude down to 2^{BETA_MIN_EXP} gives a positive sphere level; the growth margins near 0 are too thin on this mesh"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::GammaModel;
    use crate::grid::{DomainSpec, Grid};
    use crate::reaction::{Family, Reaction};

    fn scenario(reaction: Reaction) -> EnergyConfig {
        let grid = Grid::shared(&DomainSpec::interval(1.0, 31)).unwrap();
        EnergyConfig::new(grid, GammaModel::constant(1.0).unwrap(), reaction, vec![0.0; 31]).unwrap()
    }

    #[test]
    fn endpoint_exists_for_superlinear_asymptotics() {
        let grid = Grid::shared(&DomainSpec::interval(1.0, 31)).unwrap();
        let l1 = grid.eigen().unwrap().lambda1;
        let cfg = scenario(Reaction::linear_growth(Family::AsymLinear { lambda: 2.0 * (1.0 + l1) }).unwrap());
        let eig = cfg.grid().eigen().unwrap();
        let ep = find_endpoint(&cfg, eig, 1e3, 1e-3, 0.0).unwrap();
        assert!(ep.energy < -1e-3 && ep.t <= 1e3);
        assert!(ep.tail_slope < 0.0);
        assert_eq!(ep.profile.len(), PROFILE_POINTS);
    }

    #[test]
    fn endpoint_fails_below_the_asymptotic_threshold() {
        let grid = Grid::shared(&DomainSpec::interval(1.0, 31)).unwrap();
        let l1 = grid.eigen().unwrap().lambda1;
        let cfg = scenario(Reaction::pure_linear(0.5 * (1.0 + l1)).unwrap());
        let eig = cfg.grid().eigen().unwrap();
        let err = find_endpoint(&cfg, eig, 1e3, 1e-3, 0.0).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        let zero = scenario(Reaction::zero());
        assert!(find_endpoint(&zero, eig, 1e3, 1e-3, 0.0).is_err());
    }

    #[test]
    fn convex_quadratic_has_no_pass_geometry() {
        let grid = Grid::shared(&DomainSpec::interval(1.0, 31)).unwrap();
        let l1 = grid.eigen().unwrap().lambda1;
        let cfg = scenario(Reaction::pure_linear(0.5 * (1.0 + l1)).unwrap());
        let phi = &cfg.grid().eigen().unwrap().phi1;
        let far: Vec<f64> = phi.iter().map(|v| 10.0 * v).collect();
        let err = super::super::mountain_pass(&cfg, &SolverConfig::default(), &vec![0.0; 31], &far, None, None)
            .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "{err}");
        let same = super::super::mountain_pass(&cfg, &SolverConfig::default(), &far, &far, None, None).unwrap_err();
        assert!(matches!(same, Error::Degenerate(_)));
    }

    #[test]
    fn two_solution_search_tags_the_endpoint_stage() {
        let grid = Grid::shared(&DomainSpec::interval(1.0, 31)).unwrap();
        let l1 = grid.eigen().unwrap().lambda1;
        let cfg = scenario(Reaction::pure_linear(0.5 * (1.0 + l1)).unwrap());
        let err = two_solution_search(&cfg, &SolverConfig::default(), &TwoSolutionOptions::default()).unwrap_err();
        assert_eq!(err.stage_name(), Some("find_endpoint"), "{err}");
    }

    #[test]
    fn smallness_search_rejects_zero_direction() {
        let grid = Grid::shared(&DomainSpec::interval(1.0, 31)).unwrap();
        let l1 = grid.eigen().unwrap().lambda1;
        let cfg = scenario(Reaction::linear_growth(Family::AsymLinear { lambda: 2.0 * (1.0 + l1) }).unwrap());
        let err = h_smallness_search(&cfg, &SolverConfig::default(), &[0.0; 31], &TwoSolutionOptions::default());
        assert!(matches!(err, Err(Error::Degenerate(_))));
    }
}
