//! The discrete energy
//!
//! `E_μ(u) = Σ w Γ(s) − μ Σ w F₁(u₊) + Σ w F₂(u₊) − Σ w h u`,  `s = (u² + |∇u|²)/2`,
//!
//! its exact gradient and the dual-norm residual.
//!
//! The Γ-term is a trapezoidal sum over all grid nodes, boundary nodes
//! included. At a node, `|∇u|²` is the per-axis average of squared one-sided
//! differences over the edges meeting it, so that for `γ ≡ 1` the sum equals
//! `½(uᵀMu + uᵀKu)` exactly.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::GammaModel;
use crate::grid::Grid;
use crate::linalg::dot;
use crate::reaction::{Reaction, ReactionSplit};
use crate::sample::SampleSpec;

pub const DEFAULT_ALPHA_J: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub value: f64,
    pub quasilinear: f64,
    pub reaction: f64,
    pub datum: f64,
    pub mu: f64,
}

/// Node layout of the padded grid (boundary nodes included).
#[derive(Clone, Debug)]
struct Nodes {
    dims: [usize; 2],
    stride: [usize; 2],
    /// Trapezoidal weight per node.
    weight: Vec<f64>,
    /// Per axis, `1 / (number of edges along that axis meeting the node)`.
    share: Vec<[f64; 2]>,
    /// Dof index of interior nodes.
    dof: Vec<Option<usize>>,
    inv_h2: [f64; 2],
    axes: usize,
}

impl Nodes {
    fn new(grid: &Grid) -> Self {
        let axes = grid.dim();
        let mut n = [1usize; 2];
        let mut h = [1.0; 2];
        for a in 0..axes {
            n[a] = grid.n()[a];
            h[a] = grid.h()[a];
        }
        let dims = [n[0] + 2, if axes == 2 { n[1] + 2 } else { 1 }];
        let stride = [1, dims[0]];
        let total = dims[0] * dims[1];
        let mut weight = vec![0.0; total];
        let mut share = vec![[0.0; 2]; total];
        let mut dof = vec![None; total];
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let p = j * dims[0] + i;
                let idx = [i, j];
                let mut w = 1.0;
                let mut interior = true;
                for a in 0..axes {
                    let on_edge = idx[a] == 0 || idx[a] == n[a] + 1;
                    interior &= !on_edge;
                    w *= if on_edge { 0.5 * h[a] } else { h[a] };
                    share[p][a] = if on_edge { 1.0 } else { 0.5 };
                }
                weight[p] = w;
                if interior {
                    dof[p] = Some(grid.index(i, if axes == 2 { j } else { 1 }));
                }
            }
        }
        Self {
            dims,
            stride,
            weight,
            share,
            dof,
            inv_h2: [1.0 / (h[0] * h[0]), 1.0 / (h[1] * h[1])],
            axes,
        }
    }

    fn pad(&self, u: &[f64]) -> Vec<f64> {
        self.dof.iter().map(|d| d.map_or(0.0, |k| u[k])).collect()
    }

    /// Calls `visit(axis, p, q)` for every edge `p → q = p + stride` that has
    /// at least one interior endpoint.
    fn for_each_edge(&self, mut visit: impl FnMut(usize, usize, usize)) {
        for a in 0..self.axes {
            let s = self.stride[a];
            for j in 0..self.dims[1] {
                for i in 0..self.dims[0] {
                    let idx = [i, j];
                    if idx[a] + 1 >= self.dims[a] {
                        continue;
                    }
                    let p = j * self.dims[0] + i;
                    let q = p + s;
                    if self.dof[p].is_some() || self.dof[q].is_some() {
                        visit(a, p, q);
                    }
                }
            }
        }
    }

    /// Nodal `s = (u² + |∇u|²)/2` for padded values.
    fn s_values(&self, up: &[f64]) -> Vec<f64> {
        let mut g2 = vec![0.0; up.len()];
        self.for_each_edge(|a, p, q| {
            let d = up[q] - up[p];
            let e = d * d * self.inv_h2[a];
            g2[p] += self.share[p][a] * e;
            g2[q] += self.share[q][a] * e;
        });
        up.iter().zip(&g2).map(|(u, g)| 0.5 * (u * u + g)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct EnergyConfig {
    grid: Arc<Grid>,
    gamma: Arc<GammaModel>,
    reaction: Arc<Reaction>,
    split: Option<Arc<ReactionSplit>>,
    h: Vec<f64>,
    mu: f64,
    alpha_j: f64,
    nodes: Arc<Nodes>,
}

impl EnergyConfig {
    /// Energy with `μ = 1`. `h` must be nodally nonnegative.
    pub fn new(grid: Arc<Grid>, gamma: GammaModel, reaction: Reaction, h: Vec<f64>) -> Result<Self> {
        if h.len() != grid.n_dof() {
            return Err(Error::InvalidParameter(format!(
                "datum has {} values, grid has {} dofs",
                h.len(),
                grid.n_dof()
            )));
        }
        if let Some(k) = h.iter().position(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("datum must be nonnegative, h[{k}] = {}", h[k])));
        }
        let nodes = Arc::new(Nodes::new(&grid));
        Ok(Self {
            grid,
            gamma: Arc::new(gamma),
            reaction: Arc::new(reaction),
            split: None,
            h,
            mu: 1.0,
            alpha_j: DEFAULT_ALPHA_J,
            nodes,
        })
    }

    /// Switches to the split form `A − μB` with `μ ∈ (1 − α_J, 1 + α_J)`.
    pub fn with_mu(mut self, mu: f64, alpha_j: f64) -> Result<Self> {
        if !(alpha_j > 0.0 && alpha_j < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha_J must lie in (0, 1), got {alpha_j}")));
        }
        if !(mu > 1.0 - alpha_j && mu < 1.0 + alpha_j) {
            return Err(Error::InvalidParameter(format!(
                "mu = {mu} lies outside J = ({}, {})",
                1.0 - alpha_j,
                1.0 + alpha_j
            )));
        }
        if self.split.is_none() {
            self.split = Some(Arc::new(self.reaction.split(&SampleSpec::default())?));
        }
        self.mu = mu;
        self.alpha_j = alpha_j;
        Ok(self)
    }

    /// Same configuration with another datum.
    pub fn with_h(&self, h: Vec<f64>) -> Result<Self> {
        let mut cfg = Self::new(self.grid.clone(), (*self.gamma).clone(), (*self.reaction).clone(), h)?;
        cfg.split = self.split.clone();
        cfg.mu = self.mu;
        cfg.alpha_j = self.alpha_j;
        Ok(cfg)
    }

    /// Same configuration with another reaction; the split is recomputed
    /// when `μ` is active.
    pub fn with_reaction(&self, reaction: Reaction) -> Result<Self> {
        let mut cfg = Self::new(self.grid.clone(), (*self.gamma).clone(), reaction, self.h.clone())?;
        if self.split.is_some() {
            cfg = cfg.with_mu(self.mu, self.alpha_j)?;
        }
        Ok(cfg)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn gamma(&self) -> &GammaModel {
        &self.gamma
    }

    pub fn reaction(&self) -> &Reaction {
        &self.reaction
    }

    pub fn split(&self) -> Option<&ReactionSplit> {
        self.split.as_deref()
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn alpha_j(&self) -> f64 {
        self.alpha_j
    }

    pub fn n_dof(&self) -> usize {
        self.grid.n_dof()
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.grid.n_dof() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values, grid has {} dofs",
                u.len(),
                self.grid.n_dof()
            )));
        }
        Ok(())
    }

    /// `μ F₁(t) − F₂(t)`, or `F(t)` without a split.
    fn reaction_primitive(&self, t: f64) -> Result<f64> {
        match &self.split {
            Some(sp) => Ok(self.mu * sp.big_f1(t)? - sp.big_f2(t)?),
            None => self.reaction.eval_big_f(t),
        }
    }

    /// `μ f₁(t) − f₂(t)`, or `f(t)` without a split.
    fn reaction_value(&self, t: f64) -> f64 {
        match &self.split {
            Some(sp) => self.mu * sp.f1(t) - sp.f2(t),
            None => self.reaction.eval_f(t),
        }
    }

    pub fn phi(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        let up = self.nodes.pad(u);
        let s = self.nodes.s_values(&up);
        let mut total = 0.0;
        for (w, &sv) in self.nodes.weight.iter().zip(&s) {
            if sv > 0.0 {
                total += w * self.gamma.big_gamma(sv)?;
            }
        }
        Ok(total)
    }

    pub fn energy(&self, u: &[f64]) -> Result<EnergyReport> {
        let quasilinear = self.phi(u)?;
        let w = self.grid.weight();
        let mut reaction = 0.0;
        for &v in u {
            if v > 0.0 {
                reaction += w * self.reaction_primitive(v)?;
            }
        }
        let datum = w * dot(&self.h, u);
        Ok(EnergyReport {
            value: quasilinear - reaction - datum,
            quasilinear,
            reaction,
            datum,
            mu: self.mu,
        })
    }

    pub fn energy_value(&self, u: &[f64]) -> Result<f64> {
        Ok(self.energy(u)?.value)
    }

    /// Gradient of Φ: `∂/∂u_i Σ w Γ(s)`.
    pub fn phi_gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let nodes = &*self.nodes;
        let up = nodes.pad(u);
        let s = nodes.s_values(&up);
        let gw: Vec<f64> = s.iter().zip(&nodes.weight).map(|(&sv, w)| w * self.gamma.gamma(sv)).collect();
        let mut grad = vec![0.0; u.len()];
        for (p, d) in nodes.dof.iter().enumerate() {
            if let Some(k) = d {
                grad[*k] += gw[p] * up[p];
            }
        }
        nodes.for_each_edge(|a, p, q| {
            let d = up[q] - up[p];
            let coef = (nodes.share[p][a] * gw[p] + nodes.share[q][a] * gw[q]) * d * nodes.inv_h2[a];
            if let Some(k) = nodes.dof[q] {
                grad[k] += coef;
            }
            if let Some(k) = nodes.dof[p] {
                grad[k] -= coef;
            }
        });
        Ok(grad)
    }

    /// `Φ′(u)v`, linear in `v`.
    pub fn phi_prime(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_len(v)?;
        Ok(dot(&self.phi_gradient(u)?, v))
    }

    /// `E′_μ(u)` as a dual vector: `r_i = E′_μ(u) e_i`.
    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.phi_gradient(u)?;
        let w = self.grid.weight();
        for ((ri, &ui), &hi) in r.iter_mut().zip(u).zip(&self.h) {
            let f = if ui > 0.0 { self.reaction_value(ui) } else { 0.0 };
            *ri -= w * (f + hi);
        }
        Ok(r)
    }

    /// Value and gradient together.
    pub fn energy_and_gradient(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((self.energy_value(u)?, self.gradient(u)?))
    }

    /// `√(rᵀ(K+M)⁻¹r)` for `r = E′_μ(u)`.
    pub fn residual_norm(&self, u: &[f64]) -> Result<f64> {
        self.grid.dual_norm(&self.gradient(u)?)
    }

    /// Threshold below which a field counts as trivial.
    pub fn trivial_threshold(&self) -> f64 {
        1e-8 * (1.0 + self.grid.l2_norm(&self.h))
    }
}
