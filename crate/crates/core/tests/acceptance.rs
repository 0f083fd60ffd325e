//! Acceptance suite: one PASS/FAIL line per criterion, runtime included.
//! Run with `cargo test -p quasilin --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quasilin::grid::negative_part;
use quasilin::oracle::{fd_directional, semilinear_solve};
use quasilin::solver::{
    global_minimize, h_smallness_search, minimize, mu_continuation, nonexistence_scan,
    random_start, two_solution_search, Classification, ScanVerdict, SolverConfig, TwoSolutionOptions,
    TwoSolutionResult,
};
use quasilin::{DomainSpec, EnergyConfig, Family, GammaModel, Grid, Reaction, SampleSpec};

use common::{builtin_gammas, interval, sample_reactions, two_solution_config, unit_plateau};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, a: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-a..=a)).collect()
}

fn c1_gradient_exactness() -> Outcome {
    let grid = interval(64);
    let l1 = grid.eigen().map_err(e2s)?.lambda1;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (gname, gm) in builtin_gammas() {
        for (rname, re) in sample_reactions(l1) {
            let h: Vec<f64> = uniform(&mut rng, 64, 1.0).into_iter().map(f64::abs).collect();
            let cfg = EnergyConfig::new(grid.clone(), gm.clone(), re, h).map_err(e2s)?;
            for _ in 0..100 {
                let u = uniform(&mut rng, 64, 2.0);
                let v = uniform(&mut rng, 64, 1.0);
                let exact = inner(&cfg.gradient(&u).map_err(e2s)?, &v);
                let fd = fd_directional(&cfg, &u, &v, 1e-5).map_err(e2s)?;
                let err = (fd - exact).abs() / (1.0 + exact.abs());
                worst = worst.max(err);
                ensure(err <= 1e-6, || format!("{gname} × {rname}: |FD − E′(u)v| = {err:.3e} (scaled)"))?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} cases, worst scaled error {worst:.2e}"))
}

fn c2_convexity_inequality() -> Outcome {
    let grid = interval(64);
    let sample = SampleSpec::log(1e-6, 1e6, 4000);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = f64::INFINITY;
    let mut models = Vec::new();
    for (name, gm) in builtin_gammas() {
        if !gm.check_convexity(&sample, false).all_hold() {
            continue;
        }
        models.push(name);
        let cfg = EnergyConfig::new(grid.clone(), gm, Reaction::zero(), vec![0.0; 64]).map_err(e2s)?;
        for _ in 0..100 {
            // separations from 10⁻³ to 1 relative to the field scale
            let u = uniform(&mut rng, 64, 3.0);
            let rho = 10f64.powf(rng.random_range(-3.0..=0.0));
            let v: Vec<f64> = u.iter().zip(uniform(&mut rng, 64, 3.0)).map(|(a, b)| a + rho * b).collect();
            let d: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
            let gap = cfg.phi(&u).map_err(e2s)? - cfg.phi(&v).map_err(e2s)? - cfg.phi_prime(&v, &d).map_err(e2s)?;
            worst = worst.min(gap);
            ensure(gap >= -1e-10, || format!("{name}: Bregman gap {gap:.3e}"))?;
        }
    }
    ensure(models.len() == 4, || format!("only {models:?} pass the sampled convexity audit"))?;
    Ok(format!("models {models:?}, smallest gap {worst:.2e}"))
}

fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn c3_beta_monotonicity() -> Outcome {
    let sample = SampleSpec::log(1e-6, 1e6, 4000);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = Vec::new();
    for (name, gm) in builtin_gammas() {
        if !gm.check_convexity(&sample, true).all_hold() {
            continue;
        }
        for dim in [2usize, 3] {
            for _ in 0..1000 {
                let x = uniform(&mut rng, dim, 5.0);
                let y = uniform(&mut rng, dim, 5.0);
                let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
                let bx = gm.beta(&x);
                let by = gm.beta(&y);
                let db: Vec<f64> = bx.iter().zip(&by).map(|(a, b)| a - b).collect();
                let ip = inner(&db, &d);
                ensure(ip > 0.0, || format!("{name}: ⟨β(ξ)−β(η), ξ−η⟩ = {ip:.3e} in ℝ{dim}"))?;
            }
        }
        checked.push(name);
    }
    ensure(checked.len() == 4, || format!("only {checked:?} pass the strict convexity audit"))?;
    let bad = GammaModel::rational_decay_unguarded(1.0, 16.0).map_err(e2s)?;
    let report = bad.check_convexity(&sample, true);
    let t = report
        .get("q4")
        .and_then(|c| (!c.verdict.holds()).then_some(c.witness_t).flatten())
        .ok_or("b = 16a model passes the strict convexity audit")?;
    let (x, y) = ([0.9 * t, 0.0], [1.1 * t, 0.0]);
    let ip = inner(&gm_diff(&bad.beta(&x), &bad.beta(&y)), &gm_diff(&x, &y));
    ensure(ip < 0.0, || format!("witness pair at t = {t:.4} gives {ip:.3e} >= 0"))?;
    Ok(format!("{checked:?} monotone on 6000 pairs each; b = 16a witness t = {t:.4}, ip = {ip:.3e}"))
}

fn gm_diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn c4_semilinear_oracle() -> Outcome {
    let grid = interval(127);
    let eig = grid.eigen().map_err(e2s)?.clone();
    let lam = 0.5 * (1.0 + eig.lambda1);
    let cfg = EnergyConfig::new(
        grid.clone(),
        GammaModel::constant(1.0).map_err(e2s)?,
        Reaction::pure_linear(lam).map_err(e2s)?,
        eig.phi1.clone(),
    )
    .map_err(e2s)?;
    let s = SolverConfig {
        tol_residual: 1e-11,
        ..SolverConfig::default()
    };
    let r = minimize(&cfg, &s, &vec![0.0; 127]).map_err(e2s)?;
    ensure(r.converged, || format!("solver status {:?}", r.status))?;
    let oracle = semilinear_solve(&grid, lam, &eig.phi1).map_err(e2s)?;
    let oracle = oracle.solution().ok_or("oracle reports resonance")?;
    let k = 2.0 / (1.0 + eig.lambda1);
    let closed_vs_oracle = eig.phi1.iter().zip(oracle).map(|(p, o)| (k * p - o).abs()).fold(0.0, f64::max);
    ensure(closed_vs_oracle <= 1e-12, || format!("sine-mode oracle differs from 2φ₁/(1+λ₁) by {closed_vs_oracle:.3e}"))?;
    let err = r.u.iter().zip(oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(err <= 1e-8, || format!("nodal error {err:.3e}"))?;
    ensure(r.residual <= 1e-10, || format!("residual {:.3e}", r.residual))?;

    let lam_hi = 1.5 * (1.0 + eig.lambda1);
    let hi = cfg.with_reaction(Reaction::pure_linear(lam_hi).map_err(e2s)?).map_err(e2s)?;
    let mut prev = f64::INFINITY;
    for k in 5..=12 {
        let t = 2f64.powi(k);
        let u: Vec<f64> = eig.phi1.iter().map(|p| t * p).collect();
        let e = hi.energy_value(&u).map_err(e2s)?;
        ensure(e < prev, || format!("E(2^{k}φ₁) = {e:.6e} not below {prev:.6e}"))?;
        prev = e;
    }
    Ok(format!("nodal error {err:.2e}, residual {:.2e}, E(2¹²φ₁) = {prev:.3e}", r.residual))
}

fn c5_eigen_anchor() -> Outcome {
    let pi2 = std::f64::consts::PI.powi(2);
    let g1 = interval(255);
    let l1 = g1.eigen().map_err(e2s)?.lambda1;
    let rel = (l1 - pi2).abs() / pi2;
    ensure(rel <= 1e-4, || format!("1D λ₁ = {l1}, relative error {rel:.3e}"))?;
    let h = g1.h()[0];
    let closed = 2.0 / (h * h) * (1.0 - (std::f64::consts::PI * h).cos());
    let cf = (l1 - closed).abs() / closed;
    ensure(cf <= 1e-12, || format!("tridiagonal closed form mismatch {cf:.3e}"))?;
    let g2 = Grid::shared(&DomainSpec::rectangle(1.0, 1.0, 63, 63)).map_err(e2s)?;
    let l2 = g2.eigen().map_err(e2s)?.lambda1;
    let rel2 = (l2 - 2.0 * pi2).abs() / (2.0 * pi2);
    ensure(rel2 <= 1e-3, || format!("2D λ₁ = {l2}, relative error {rel2:.3e}"))?;
    let g3 = interval(3);
    let l3 = g3.eigen().map_err(e2s)?.lambda1;
    let mut k = DMatrix::zeros(3, 3);
    for j in 0..3 {
        let mut e = vec![0.0; 3];
        e[j] = 1.0;
        let col = g3.apply_stiffness(&e);
        for i in 0..3 {
            k[(i, j)] = col[i] / g3.weight();
        }
    }
    let dense = k.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let d3 = (l3 - dense).abs() / dense;
    ensure(d3 <= 1e-12, || format!("n = 3 differs from the dense eigensolve by {d3:.3e}"))?;
    Ok(format!("1D rel {rel:.2e}, closed form {cf:.1e}, 2D rel {rel2:.2e}, n=3 dense {d3:.1e}"))
}

fn log1p_config(grid: &std::sync::Arc<Grid>, nu: f64, h: Vec<f64>) -> Result<EnergyConfig, String> {
    EnergyConfig::new(
        grid.clone(),
        GammaModel::constant(1.0).map_err(e2s)?,
        Reaction::sublinear(Family::Log1p, nu).map_err(e2s)?,
        h,
    )
    .map_err(e2s)
}

fn c6_sublinear_dichotomy() -> Outcome {
    let grid = interval(127);
    let zero = vec![0.0; 127];
    let low = log1p_config(&grid, 0.5, zero.clone())?;
    let nu0 = low.reaction().nonexistence_threshold(low.gamma()).map_err(e2s)?;
    ensure(nu0 == 1.0, || format!("certified ν₀ = {nu0}"))?;
    let s = SolverConfig::default();
    let scan = nonexistence_scan(&low, &s, 0.5, 20).map_err(e2s)?;
    ensure(scan.runs.len() == 21, || format!("{} runs instead of 21", scan.runs.len()))?;
    for run in &scan.runs {
        ensure(run.converged && run.l2_norm <= 1e-8, || {
            format!("start {} ended with ‖u‖₂ = {:.3e}, converged {}", run.label, run.l2_norm, run.converged)
        })?;
    }
    ensure(scan.verdict == ScanVerdict::ConsistentWithNonexistence, || format!("verdict {:?}", scan.verdict))?;

    let high = log1p_config(&grid, 50.0, zero)?;
    let best = global_minimize(&high, &s).map_err(e2s)?.best;
    let min_node = best.u.iter().copied().fold(f64::INFINITY, f64::min);
    ensure(best.classification == Classification::Nontrivial, || "ν = 50 minimizer is trivial".into())?;
    ensure(best.energy < 0.0 && best.residual <= 1e-8 && best.converged, || {
        format!("ν = 50: E = {:.6e}, residual {:.3e}", best.energy, best.residual)
    })?;
    ensure(min_node >= -1e-10, || format!("min nodal value {min_node:.3e}"))?;
    Ok(format!(
        "ν₀ = 1, 21 trivial runs at ν = 0.5; ν = 50: E = {:.4}, residual {:.1e}",
        best.energy, best.residual
    ))
}

fn c7_forced_existence() -> Outcome {
    let grid = interval(127);
    let plateau = grid.plateau_field(1.0, 0.2).map_err(e2s)?;
    let cfg = log1p_config(&grid, 0.1, plateau.iter().map(|v| 1e-2 * v).collect())?;
    let best = global_minimize(&cfg, &SolverConfig::default()).map_err(e2s)?.best;
    ensure(best.classification == Classification::Nontrivial, || "solution is trivial".into())?;
    ensure(best.converged && best.residual <= 1e-8, || format!("residual {:.3e}", best.residual))?;
    let min_node = best.u.iter().copied().fold(f64::INFINITY, f64::min);
    ensure(min_node >= -1e-10, || format!("min nodal value {min_node:.3e}"))?;
    Ok(format!("‖u‖₂ = {:.4e}, residual {:.1e}", best.l2_norm, best.residual))
}

struct TwoSolutionRun {
    beta: f64,
    result: TwoSolutionResult,
}

fn run_two_solutions(n: usize, beta: Option<f64>) -> Result<TwoSolutionRun, String> {
    let grid = interval(n);
    let dir = unit_plateau(&grid);
    let base = two_solution_config(&grid, vec![0.0; n]);
    let s = SolverConfig::default();
    let opts = TwoSolutionOptions::default();
    let beta = match beta {
        Some(b) => b,
        None => h_smallness_search(&base, &s, &dir, &opts).map_err(e2s)?.beta,
    };
    let cfg = base.with_h(dir.iter().map(|v| beta * v).collect()).map_err(e2s)?;
    let result = two_solution_search(&cfg, &s, &opts).map_err(e2s)?;
    Ok(TwoSolutionRun { beta, result })
}

fn c8_two_solutions() -> Outcome {
    let coarse = run_two_solutions(127, None)?;
    let r = &coarse.result;
    let (lo, mp) = (&r.u_min, &r.u_mp.saddle);
    for (name, x) in [("u_min", lo), ("u_mp", mp)] {
        ensure(x.converged && x.residual <= 1e-6, || format!("{name} residual {:.3e}", x.residual))?;
        let min_node = x.u.iter().copied().fold(f64::INFINITY, f64::min);
        ensure(min_node >= -1e-10, || format!("{name} min nodal value {min_node:.3e}"))?;
    }
    ensure(r.distance > 1e-2, || format!("‖u_min − u_mp‖ = {:.3e}", r.distance))?;
    ensure(r.u_mp.mp_gap > 0.0, || format!("mp_gap = {:.3e}", r.u_mp.mp_gap))?;
    let fine = run_two_solutions(255, Some(coarse.beta))?;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
    let d_min = rel(lo.energy, fine.result.u_min.energy);
    let d_mp = rel(mp.energy, fine.result.u_mp.saddle.energy);
    ensure(d_min <= 1e-2 && d_mp <= 1e-2, || format!("refinement changes energies by {d_min:.3e}, {d_mp:.3e}"))?;
    Ok(format!(
        "β* = {}, E(u_min) = {:.5}, E(u_mp) = {:.5}, distance {:.3}, mp_gap {:.3}, n=255 drift {:.1e}/{:.1e}",
        coarse.beta, lo.energy, mp.energy, r.distance, r.u_mp.mp_gap, d_min, d_mp
    ))
}

fn c9_endpoint() -> Outcome {
    let run = run_two_solutions(127, None)?;
    let ep = &run.result.endpoint;
    let e_min = run.result.u_min.energy;
    ensure(ep.t <= 1e3, || format!("T = {}", ep.t))?;
    ensure(ep.energy < e_min.min(0.0), || format!("E(Tφ₁) = {} not below E(u_min) = {e_min}", ep.energy))?;
    ensure(ep.tail_slope < 0.0, || format!("final-decade slope {:.3e}", ep.tail_slope))?;
    Ok(format!(
        "T = {:.4}, E(Tφ₁) = {:.4} < E(u_min) = {e_min:.4}, final-decade slope {:.3e}",
        ep.t, ep.energy, ep.tail_slope
    ))
}

fn c10_positivity() -> Outcome {
    let grid = interval(127);
    let plateau = grid.plateau_field(1.0, 0.2).map_err(e2s)?;
    let h: Vec<f64> = plateau.iter().map(|v| 1e-2 * v).collect();
    let semilinear = log1p_config(&grid, 50.0, h.clone())?;
    let quasilinear = EnergyConfig::new(
        grid.clone(),
        GammaModel::double_phase(1.0, 1.0, 1.5).map_err(e2s)?,
        Reaction::sublinear(Family::Log1p, 50.0).map_err(e2s)?,
        h,
    )
    .map_err(e2s)?;
    let s = SolverConfig {
        tol_residual: 1e-12,
        ..SolverConfig::default()
    };
    let mut worst = 0.0f64;
    for run in 0..20u64 {
        let cfg = if run % 2 == 0 { &semilinear } else { &quasilinear };
        let mut u0 = random_start(cfg, 10, run);
        let neg = grid.l2_norm(&negative_part(&u0));
        if neg < 0.5 {
            let k = 0.5 / neg;
            u0.iter_mut().for_each(|v| *v *= k);
        }
        let neg0 = grid.l2_norm(&negative_part(&u0));
        ensure(neg0 >= 0.5 * (1.0 - 1e-12), || format!("run {run}: start has ‖u₋‖₂ = {neg0}"))?;
        let r = minimize(cfg, &s, &u0).map_err(e2s)?;
        ensure(r.converged, || format!("run {run}: {:?}, residual {:.3e}", r.status, r.residual))?;
        let ratio = r.nonneg_violation / (1.0 + r.l2_norm);
        worst = worst.max(ratio);
        ensure(ratio <= 1e-10, || format!("run {run}: ‖u₋‖₂/(1+‖u‖₂) = {ratio:.3e}"))?;
    }
    Ok(format!("20 runs converged, worst ‖u₋‖₂/(1+‖u‖₂) = {worst:.1e}"))
}

fn c11_mu_family() -> Outcome {
    let direct = run_two_solutions(127, None)?;
    let grid = interval(127);
    let dir = unit_plateau(&grid);
    let cfg = two_solution_config(&grid, dir.iter().map(|v| direct.beta * v).collect());
    let mus = [0.9, 0.95, 0.99, 1.0];
    let entries = mu_continuation(&cfg, &SolverConfig::default(), &mus, 0.15, &TwoSolutionOptions::default())
        .map_err(e2s)?;
    let mut levels = Vec::new();
    for e in &entries {
        let c = e.level_c.ok_or_else(|| format!("μ = {} failed: {}", e.mu, e.error.clone().unwrap_or_default()))?;
        levels.push(c);
    }
    for w in levels.windows(2) {
        ensure(w[1] <= w[0], || format!("levels not nonincreasing: {levels:?}"))?;
    }
    let c1 = *levels.last().expect("four entries");
    let rel = (c1 - direct.result.c).abs() / direct.result.c.abs();
    ensure(rel <= 1e-4, || format!("μ = 1 level {c1} vs direct {}", direct.result.c))?;
    Ok(format!("c_μ = {levels:.4?}, μ=1 vs direct {rel:.1e}"))
}

fn c12_s3_contrast() -> Outcome {
    let gm = GammaModel::double_phase(1.0, 1.0, 1.5).map_err(e2s)?;
    let k2 = gm.eval_k(1e2).map_err(e2s)?;
    let k6 = gm.eval_k(1e6).map_err(e2s)?;
    ensure(k6 > 10.0 * k2, || format!("K(10⁶) = {k6:.4e}, K(10²) = {k2:.4e}"))?;
    let sample = SampleSpec::log(1e-6, 1e6, 4000);
    let diag = gm.stuart_diagnostics(&sample, &[1e2, 1e4, 1e6]).map_err(e2s)?;
    ensure(!diag.holds("s3"), || "s3 diagnostic reports bounded K".into())?;
    ensure(gm.check_convexity(&sample, true).all_hold(), || "strict convexity audit fails".into())?;
    Ok(format!("K(10²) = {k2:.3e}, K(10⁶) = {k6:.3e}; q4 holds on sample"))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "gradient exactness", budget: Duration::from_secs(10), run: c1_gradient_exactness },
        Criterion { id: 2, name: "convexity inequality", budget: Duration::from_secs(5), run: c2_convexity_inequality },
        Criterion { id: 3, name: "β strict monotonicity", budget: Duration::from_secs(1), run: c3_beta_monotonicity },
        Criterion { id: 4, name: "semilinear oracle match", budget: Duration::from_secs(10), run: c4_semilinear_oracle },
        Criterion { id: 5, name: "eigenvalue anchor", budget: Duration::from_secs(30), run: c5_eigen_anchor },
        Criterion { id: 6, name: "sublinear dichotomy", budget: Duration::from_secs(120), run: c6_sublinear_dichotomy },
        Criterion { id: 7, name: "forced-term existence", budget: Duration::from_secs(60), run: c7_forced_existence },
        Criterion { id: 8, name: "two-solution scenario", budget: Duration::from_secs(600), run: c8_two_solutions },
        Criterion { id: 9, name: "endpoint negativity", budget: Duration::from_secs(30), run: c9_endpoint },
        Criterion { id: 10, name: "positivity via truncation", budget: Duration::from_secs(60), run: c10_positivity },
        Criterion { id: 11, name: "μ-family monotonicity", budget: Duration::from_secs(900), run: c11_mu_family },
        Criterion { id: 12, name: "(s3) contrast diagnostic", budget: Duration::from_secs(1), run: c12_s3_contrast },
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.budget => Err(format!("{detail}; runtime {elapsed:.2?} over {:?}", c.budget)),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {} [{elapsed:.2?}] {detail}", c.id, c.name),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {} [{elapsed:.2?}] {why}", c.id, c.name);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
