#![allow(dead_code)]

use std::sync::Arc;

use quasilin::{DomainSpec, EnergyConfig, Family, GammaModel, Grid, Reaction};

pub fn interval(n: usize) -> Arc<Grid> {
    Grid::shared(&DomainSpec::interval(1.0, n)).unwrap()
}

pub fn tabulated_gamma() -> GammaModel {
    GammaModel::tabulated(
        vec![0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0],
        vec![1.6, 1.5, 1.4, 1.28, 1.16, 1.08, 1.05],
    )
    .unwrap()
}

/// Constant, double-phase, rational decay (b < 8a) and tabulated.
pub fn builtin_gammas() -> Vec<(&'static str, GammaModel)> {
    vec![
        ("constant", GammaModel::constant(1.0).unwrap()),
        ("double_phase", GammaModel::double_phase(1.0, 1.0, 1.5).unwrap()),
        ("rational_decay", GammaModel::rational_decay(1.0, 2.0).unwrap()),
        ("tabulated", tabulated_gamma()),
    ]
}

pub fn sample_reactions(lambda1: f64) -> Vec<(&'static str, Reaction)> {
    vec![
        ("log1p", Reaction::sublinear(Family::Log1p, 1.0).unwrap()),
        ("sin_a", Reaction::sublinear(Family::SinA { a: 1.0 }, 2.0).unwrap()),
        (
            "asymlinear",
            Reaction::linear_growth(Family::AsymLinear { lambda: 2.0 * (1.0 + lambda1) }).unwrap(),
        ),
    ]
}

/// Double-phase γ with A = B = 1, p = 3/2 and asymptotically linear f with
/// slope `2γ(∞)(1 + λ₁)`.
pub fn two_solution_config(grid: &Arc<Grid>, h: Vec<f64>) -> EnergyConfig {
    let l1 = grid.eigen().unwrap().lambda1;
    let gm = GammaModel::double_phase(1.0, 1.0, 1.5).unwrap();
    let re = Reaction::linear_growth(Family::AsymLinear { lambda: 2.0 * (1.0 + l1) }).unwrap();
    EnergyConfig::new(grid.clone(), gm, re, h).unwrap()
}

/// Plateau of height 1 with margin 0.2, rescaled to unit L² norm.
pub fn unit_plateau(grid: &Grid) -> Vec<f64> {
    let p = grid.plateau_field(1.0, 0.2).unwrap();
    let n = grid.l2_norm(&p);
    p.into_iter().map(|v| v / n).collect()
}
