mod common;

use proptest::prelude::*;

use quasilin::grid::{negative_part, positive_part};
use quasilin::oracle::{brute_force_min, fd_directional, semilinear_solve};
use quasilin::solver::{
    global_minimize, minimize, mountain_pass, nonexistence_scan, random_start, Classification, ScanVerdict,
    SolverConfig, StepKind,
};
use quasilin::{EnergyConfig, Family, GammaModel, Reaction, SampleSpec};

use common::{builtin_gammas, interval, sample_reactions, tabulated_gamma};

fn gamma_by_index(i: usize) -> GammaModel {
    builtin_gammas().swap_remove(i).1
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// γ models

#[test]
fn bound_sandwich_on_log_grid() {
    let mut ts = vec![0.0];
    ts.extend(SampleSpec::log(1e-8, 1e8, 10_000).points());
    for (name, gm) in builtin_gammas() {
        for &t in &ts {
            let g = gm.gamma(t);
            assert!(
                g >= gm.gamma_min() - 1e-12 && g <= gm.gamma_max() + 1e-12,
                "{name}: γ({t}) = {g} outside [{}, {}]",
                gm.gamma_min(),
                gm.gamma_max()
            );
        }
    }
}

/// Largest slope of γ between consecutive points of a fine grid around `t`.
fn local_lipschitz(gm: &GammaModel, t: f64, eps: f64) -> f64 {
    let n = 64;
    (0..n)
        .map(|k| {
            let a = t + eps * k as f64 / n as f64;
            let b = t + eps * (k + 1) as f64 / n as f64;
            (gm.gamma(b) - gm.gamma(a)).abs() / (b - a)
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn antiderivative_consistency(model in 0usize..4, log_t in -6.0f64..4.0) {
        let gm = gamma_by_index(model);
        let t = 10f64.powf(log_t);
        let eps = 1e-4;
        let l = local_lipschitz(&gm, t, eps);
        let g0 = gm.big_gamma(t).unwrap();
        let g1 = gm.big_gamma(t + eps).unwrap();
        let lhs = (g1 - g0 - gm.gamma(t) * eps).abs();
        let roundoff = 8.0 * f64::EPSILON * (g0.abs() + g1.abs());
        prop_assert!(lhs <= 0.5 * l * eps * eps * (1.0 + 1e-6) + roundoff, "t = {t}: {lhs:e} vs L = {l:e}");
    }

    #[test]
    fn beta_is_strictly_monotone(
        model in 0usize..4,
        dim in 1usize..=3,
        xs in prop::collection::vec(-1e3f64..1e3, 3),
        ys in prop::collection::vec(-1e3f64..1e3, 3),
    ) {
        let gm = gamma_by_index(model);
        let (x, y) = (&xs[..dim], &ys[..dim]);
        prop_assume!(x != y);
        let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let bx = gm.beta(x);
        let by = gm.beta(y);
        let db: Vec<f64> = bx.iter().zip(&by).map(|(a, b)| a - b).collect();
        prop_assert!(dot(&db, &d) > 0.0);
    }
}

#[test]
fn strict_monotonicity_of_m_gives_convex_gamma_of_square() {
    let sample = SampleSpec::log(1e-3, 1e3, 2000);
    let mut models = builtin_gammas();
    models.push(("rational_b16", GammaModel::rational_decay_unguarded(1.0, 16.0).unwrap()));
    for (name, gm) in models {
        if !gm.check_convexity(&sample, true).all_hold() {
            continue;
        }
        let ts = sample.points();
        let q: Vec<f64> = ts.iter().map(|t| gm.big_gamma(t * t).unwrap()).collect();
        for k in 1..ts.len() - 1 {
            let (a, b, c) = (ts[k - 1], ts[k], ts[k + 1]);
            let d1 = (q[k] - q[k - 1]) / (b - a);
            let d2 = (q[k + 1] - q[k]) / (c - b);
            let second = (d2 - d1) / (c - a);
            let slack = 1e-10 * (1.0 + q[k + 1].abs() / ((c - b) * (c - a)));
            assert!(second >= -slack, "{name}: second difference {second:e} at t = {b}");
        }
    }
}

#[test]
fn tabulated_model_passes_the_structural_audits() {
    let gm = tabulated_gamma();
    let s = SampleSpec::default();
    assert!(gm.check_bounds_and_limit(&s).all_hold());
    assert!(gm.check_convexity(&s, true).all_hold());
}

// reactions

fn dip_reaction() -> Reaction {
    let fam = Family::tabulated(vec![0.0, 1.0, 2.0, 3.0, 5.0, 10.0], vec![0.0, -0.5, -0.2, 1.0, 3.0, 8.0]).unwrap();
    Reaction::linear_growth(fam).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn split_reconstructs_f(t in 0.0f64..50.0) {
        let split = dip_reaction().split(&SampleSpec::log(1e-6, 1e3, 2000)).unwrap();
        let f = split.reaction().eval_f(t);
        prop_assert_eq!(split.f1(t) - split.f2(t), f);
        prop_assert!(split.f1(t) >= 0.0 && split.f2(t) >= 0.0);
        prop_assert!(split.big_f1(t).unwrap() >= -1e-12);
        prop_assert!(split.big_f2(t).unwrap() >= -split.k_bound() - 1e-12);
    }
}

#[test]
fn sublinear_example_families_hold() {
    let s = SampleSpec::default();
    let mut families = vec![Family::Log1p, Family::ExpLogLog { shift: 3.0 }];
    for a in [0.5, 1.0, 3.0] {
        families.push(Family::SinA { a });
    }
    for (alpha, beta) in [(1.0, 0.5), (1.0, 2.0), (1.5, 1.0), (2.5, 2.0)] {
        families.push(Family::PowerRatio { alpha, beta });
    }
    for (alpha, beta) in [(0.5, 2.0), (0.25, 1.5), (0.7, 1.1)] {
        families.push(Family::MinPowers { alpha, beta });
    }
    for fam in families {
        let label = format!("{fam:?}");
        let r = Reaction::sublinear(fam, 1.0).unwrap();
        let rep = r.audit_sublinear(&s);
        assert!(rep.all_hold(), "{label}: {:?}", rep.failures().collect::<Vec<_>>());
    }
}

#[test]
fn exp_log_power_family_is_superlinear_at_zero() {
    let s = SampleSpec::default();
    for alpha in [0.25, 0.5, 0.75] {
        let rep = Reaction::sublinear(Family::ExpLogPow { alpha }, 1.0).unwrap().audit_sublinear(&s);
        assert!(rep.holds("g1"));
        let g3 = rep.get("g3").unwrap();
        assert!(!g3.verdict.holds());
        assert!(g3.witness_t.unwrap() < 1e-2, "{g3:?}");
    }
}

#[test]
fn threshold_soundness_below_certified_nu0() {
    let grid = interval(31);
    let gm = GammaModel::double_phase(1.0, 1.0, 1.5).unwrap();
    let s = SolverConfig {
        n_starts: 6,
        ..SolverConfig::default()
    };
    for fam in [Family::Log1p, Family::SinA { a: 2.0 }, Family::MinPowers { alpha: 0.5, beta: 2.0 }] {
        let probe = Reaction::sublinear(fam.clone(), 1.0).unwrap();
        let nu0 = probe.nonexistence_threshold(&gm).unwrap();
        let nu = 0.9 * nu0;
        let cfg = EnergyConfig::new(grid.clone(), gm.clone(), probe.with_nu(nu).unwrap(), vec![0.0; 31]).unwrap();
        let scan = nonexistence_scan(&cfg, &s, nu, s.n_starts).unwrap();
        for run in scan.runs.iter().filter(|r| r.converged) {
            assert!(run.l2_norm <= 1e-8, "{fam:?}: converged run with ‖u‖₂ = {}", run.l2_norm);
        }
        assert_eq!(scan.verdict, ScanVerdict::ConsistentWithNonexistence);
    }
}

// grid

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn positive_and_negative_parts_decompose(u in prop::collection::vec(-10.0f64..10.0, 1..40)) {
        let grid = interval(u.len());
        let p = positive_part(&u);
        let m = negative_part(&u);
        for i in 0..u.len() {
            prop_assert_eq!(p[i] - m[i], u[i]);
        }
        prop_assert_eq!(grid.mass_form(&p, &m), 0.0);
    }
}

#[test]
fn discrete_poincare_inequality() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let grid = interval(48);
    let l1 = grid.eigen().unwrap().lambda1;
    for _ in 0..1000 {
        let u: Vec<f64> = (0..48).map(|_| rng.random_range(-1.0..=1.0)).collect();
        assert!(grid.stiffness_energy(&u) >= l1 * grid.mass_form(&u, &u) - 1e-9);
    }
}

#[test]
fn eigenvalue_converges_at_second_order() {
    let exact = std::f64::consts::PI.powi(2);
    let errs: Vec<f64> = [15usize, 31, 63, 127]
        .iter()
        .map(|&n| exact - interval(n).eigen().unwrap().lambda1)
        .collect();
    for w in errs.windows(2) {
        assert!(w[0] > 0.0 && w[1] > 0.0, "λ₁(h) must approach π² from below");
        let ratio = w[0] / w[1];
        assert!((3.6..=4.4).contains(&ratio), "error ratio {ratio}");
    }
}

// energy

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gradient_matches_central_differences(
        model in 0usize..4,
        reaction in 0usize..3,
        u in prop::collection::vec(-2.0f64..2.0, 64),
        v in prop::collection::vec(-1.0f64..1.0, 64),
        h in prop::collection::vec(0.0f64..1.0, 64),
    ) {
        let grid = interval(64);
        let l1 = grid.eigen().unwrap().lambda1;
        let re = sample_reactions(l1).swap_remove(reaction).1;
        let cfg = EnergyConfig::new(grid, gamma_by_index(model), re, h).unwrap();
        let exact = dot(&cfg.gradient(&u).unwrap(), &v);
        let fd = fd_directional(&cfg, &u, &v, 1e-5).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()));
    }

    #[test]
    fn quasilinear_part_is_convex(
        model in 0usize..4,
        u in prop::collection::vec(-3.0f64..3.0, 32),
        v in prop::collection::vec(-3.0f64..3.0, 32),
    ) {
        let grid = interval(32);
        let cfg = EnergyConfig::new(grid, gamma_by_index(model), Reaction::zero(), vec![0.0; 32]).unwrap();
        let d: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let gap = cfg.phi(&u).unwrap() - cfg.phi(&v).unwrap() - cfg.phi_prime(&v, &d).unwrap();
        prop_assert!(gap >= -1e-10);
    }

    #[test]
    fn energy_is_coercive_along_rays(model in 0usize..4, w in prop::collection::vec(-1.0f64..1.0, 24)) {
        let grid = interval(24);
        prop_assume!(grid.l2_norm(&w) > 1e-3);
        let re = Reaction::sublinear(Family::Log1p, 5.0).unwrap();
        let cfg = EnergyConfig::new(grid, gamma_by_index(model), re, vec![0.0; 24]).unwrap();
        let es: Vec<f64> = (8..16)
            .map(|k| {
                let t = 2f64.powi(k);
                cfg.energy_value(&w.iter().map(|x| t * x).collect::<Vec<_>>()).unwrap()
            })
            .collect();
        for p in es.windows(2) {
            prop_assert!(p[1] > p[0]);
        }
    }

    #[test]
    fn mu_family_decreases_in_mu(u in prop::collection::vec(0.1f64..3.0, 16), a in 0.86f64..1.14, b in 0.86f64..1.14) {
        prop_assume!((a - b).abs() > 1e-6);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let grid = interval(16);
        let l1 = grid.eigen().unwrap().lambda1;
        let re = Reaction::linear_growth(Family::AsymLinear { lambda: 2.0 * (1.0 + l1) }).unwrap();
        let base = EnergyConfig::new(grid, gamma_by_index(1), re, vec![0.0; 16]).unwrap();
        let e_lo = base.clone().with_mu(lo, 0.15).unwrap().energy_value(&u).unwrap();
        let e_hi = base.with_mu(hi, 0.15).unwrap().energy_value(&u).unwrap();
        prop_assert!(e_hi < e_lo);
    }

    #[test]
    fn split_energy_at_mu_one_matches_direct(u in prop::collection::vec(-2.0f64..6.0, 16)) {
        let grid = interval(16);
        let plain = EnergyConfig::new(grid, gamma_by_index(1), dip_reaction(), vec![0.0; 16]).unwrap();
        let split = plain.clone().with_mu(1.0, 0.15).unwrap();
        prop_assert!(split.split().is_some());
        let (a, b) = (plain.energy_value(&u).unwrap(), split.energy_value(&u).unwrap());
        prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
}

// solver

fn log1p_cfg(n: usize, nu: f64, h_amp: f64, gm: GammaModel) -> EnergyConfig {
    let grid = interval(n);
    let h: Vec<f64> = if h_amp == 0.0 {
        vec![0.0; n]
    } else {
        grid.plateau_field(1.0, 0.2).unwrap().into_iter().map(|v| h_amp * v).collect()
    };
    EnergyConfig::new(grid, gm, Reaction::sublinear(Family::Log1p, nu).unwrap(), h).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn armijo_steps_decrease_and_solutions_are_nonnegative(seed in 0u64..1000, model in 0usize..4, nu in 1.0f64..60.0) {
        let cfg = log1p_cfg(31, nu, 1e-2, gamma_by_index(model));
        let s = SolverConfig { tol_residual: 1e-11, ..SolverConfig::default() };
        let u0 = random_start(&cfg, seed, 0);
        let r = minimize(&cfg, &s, &u0).unwrap();
        let mut prev = cfg.energy_value(&u0).unwrap();
        for rec in &r.history {
            if rec.kind == StepKind::Armijo {
                prop_assert!(rec.energy < prev);
            }
            prev = rec.energy;
        }
        if r.converged {
            prop_assert!(r.nonneg_violation <= 1e-10 * (1.0 + r.l2_norm), "‖u₋‖₂ = {:e}", r.nonneg_violation);
        }
    }

    #[test]
    fn ball_iterates_stay_inside(seed in 0u64..1000, r in 0.05f64..5.0) {
        let cfg = log1p_cfg(31, 50.0, 0.0, gamma_by_index(1));
        let s = SolverConfig { ball_radius: Some(r), ..SolverConfig::default() };
        let mut u0 = random_start(&cfg, seed, 1);
        let n0 = cfg.grid().h10_norm(&u0);
        u0.iter_mut().for_each(|v| *v *= 0.5 * r / n0);
        let out = minimize(&cfg, &s, &u0).unwrap();
        for rec in &out.history {
            prop_assert!(rec.h10_norm <= r + 1e-12);
        }
        prop_assert!(cfg.grid().h10_norm(&out.u) <= r + 1e-12);
    }
}

#[test]
fn same_seed_same_bits() {
    let cfg = log1p_cfg(31, 50.0, 0.0, gamma_by_index(1));
    let s = SolverConfig {
        n_starts: 6,
        seed: 42,
        ..SolverConfig::default()
    };
    let a = global_minimize(&cfg, &s).unwrap();
    let b = global_minimize(&cfg, &s).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.best.u), bits(&b.best.u));
    assert_eq!(a.best_start, b.best_start);
    let ha: Vec<u64> = a.best.history.iter().map(|r| r.energy.to_bits()).collect();
    let hb: Vec<u64> = b.best.history.iter().map(|r| r.energy.to_bits()).collect();
    assert_eq!(ha, hb);
}

#[test]
fn mountain_pass_levels_exceed_endpoints() {
    let grid = interval(31);
    let l1 = grid.eigen().unwrap().lambda1;
    let phi = grid.eigen().unwrap().phi1.clone();
    for factor in [1.5, 2.0, 3.0] {
        let re = Reaction::linear_growth(Family::AsymLinear { lambda: factor * (1.0 + l1) }).unwrap();
        let cfg = EnergyConfig::new(grid.clone(), GammaModel::constant(1.0).unwrap(), re, vec![0.0; 31]).unwrap();
        let far: Vec<f64> = phi.iter().map(|v| 1e3 * v).collect();
        let mp = mountain_pass(&cfg, &SolverConfig::default(), &vec![0.0; 31], &far, None, None).unwrap();
        assert!(mp.saddle.converged);
        assert!(mp.mp_gap > 0.0, "factor {factor}: gap {}", mp.mp_gap);
        assert!(mp.saddle.classification == Classification::Nontrivial);
    }
}

// oracles

#[test]
fn brute_force_agrees_with_linear_solve() {
    let grid = interval(2);
    let eig = grid.eigen().unwrap().clone();
    let lam = 0.5 * (1.0 + eig.lambda1);
    let h = eig.phi1.clone();
    let cfg = EnergyConfig::new(
        grid.clone(),
        GammaModel::constant(1.0).unwrap(),
        Reaction::pure_linear(lam).unwrap(),
        h.clone(),
    )
    .unwrap();
    let exact = semilinear_solve(&grid, lam, &h).unwrap();
    let exact = exact.solution().unwrap();
    let scale = exact.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let bf = brute_force_min(&cfg, 2.0 * scale, 801).unwrap();
    for (a, b) in bf.u.iter().zip(exact) {
        assert!((a - b).abs() <= bf.cell_diameter, "{a} vs {b} (cell {})", bf.cell_diameter);
    }
}

#[test]
fn brute_force_agrees_with_global_minimize() {
    let cfg = log1p_cfg(3, 50.0, 0.0, GammaModel::constant(1.0).unwrap());
    let gm = global_minimize(&cfg, &SolverConfig::default()).unwrap().best;
    let scale = gm.u.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let bf = brute_force_min(&cfg, 2.0 * scale, 121).unwrap();
    // energy error of the lattice point is second order in the cell diameter
    let g = cfg.gradient(&bf.u).unwrap();
    let bound = g.iter().map(|v| v.abs()).sum::<f64>() * bf.cell_diameter + 1e3 * bf.cell_diameter.powi(2);
    assert!(bf.energy >= gm.energy - 1e-9, "lattice below the minimizer: {} < {}", bf.energy, gm.energy);
    assert!(bf.energy - gm.energy <= bound, "{} vs {} (bound {bound})", bf.energy, gm.energy);
}
