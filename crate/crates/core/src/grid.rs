//! Uniform finite-difference grids on intervals and rectangles with zero
//! boundary values, lumped mass and stiffness operators, and the first
//! Dirichlet eigenpair.

use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::{dot, BandCholesky};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub dim: usize,
    /// Side lengths, one per axis.
    pub extent: Vec<f64>,
    /// Interior node counts, one per axis.
    pub n: Vec<usize>,
}

impl DomainSpec {
    pub fn interval(length: f64, n: usize) -> Self {
        Self {
            dim: 1,
            extent: vec![length],
            n: vec![n],
        }
    }

    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Self {
        Self {
            dim: 2,
            extent: vec![lx, ly],
            n: vec![nx, ny],
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub lambda1: f64,
    /// M-normalized, strictly positive.
    pub phi1: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug)]
pub struct Grid {
    dim: usize,
    extent: [f64; 2],
    n: [usize; 2],
    h: [f64; 2],
    weight: f64,
    kpm: OnceLock<std::result::Result<BandCholesky, Error>>,
    k_only: OnceLock<std::result::Result<BandCholesky, Error>>,
    eigen: OnceLock<std::result::Result<EigenPair, Error>>,
}

/// Default relative tolerance for the cached eigenpair.
pub const EIGEN_TOL: f64 = 1e-14;
const EIGEN_MAX_ITERS: usize = 2000;

impl Grid {
    pub fn new(spec: &DomainSpec) -> Result<Self> {
        if spec.dim != 1 && spec.dim != 2 {
            return Err(Error::InvalidParameter(format!("dim must be 1 or 2, got {}", spec.dim)));
        }
        if spec.extent.len() != spec.dim || spec.n.len() != spec.dim {
            return Err(Error::InvalidParameter(format!(
                "extent and n need {} entries each",
                spec.dim
            )));
        }
        if spec.n.iter().any(|&n| n < 1) {
            return Err(Error::InvalidParameter(format!("need at least one interior node per axis, got {:?}", spec.n)));
        }
        if spec.extent.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::InvalidParameter(format!("extents must be positive, got {:?}", spec.extent)));
        }
        let mut extent = [1.0; 2];
        let mut n = [1usize; 2];
        let mut h = [1.0; 2];
        for a in 0..spec.dim {
            extent[a] = spec.extent[a];
            n[a] = spec.n[a];
            h[a] = extent[a] / (n[a] + 1) as f64;
        }
        let weight = if spec.dim == 1 { h[0] } else { h[0] * h[1] };
        Ok(Self {
            dim: spec.dim,
            extent,
            n,
            h,
            weight,
            kpm: OnceLock::new(),
            k_only: OnceLock::new(),
            eigen: OnceLock::new(),
        })
    }

    pub fn shared(spec: &DomainSpec) -> Result<Arc<Self>> {
        Self::new(spec).map(Arc::new)
    }

    pub fn spec(&self) -> DomainSpec {
        DomainSpec {
            dim: self.dim,
            extent: self.extent[..self.dim].to_vec(),
            n: self.n[..self.dim].to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> &[usize] {
        &self.n[..self.dim]
    }

    pub fn h(&self) -> &[f64] {
        &self.h[..self.dim]
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent[..self.dim]
    }

    pub fn n_dof(&self) -> usize {
        self.n[0] * self.n[1]
    }

    /// Lumped quadrature weight of every dof.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// |Ω|
    pub fn volume(&self) -> f64 {
        self.extent[..self.dim].iter().product()
    }

    /// Dof of interior node `(i, j)`, 1-based node indices.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        (j - 1) * self.n[0] + (i - 1)
    }

    /// Node indices `(i, j)` of a dof.
    #[inline]
    pub fn node(&self, dof: usize) -> (usize, usize) {
        (dof % self.n[0] + 1, dof / self.n[0] + 1)
    }

    /// Coordinates of dof `k`.
    pub fn coords(&self, dof: usize) -> [f64; 2] {
        let (i, j) = self.node(dof);
        [i as f64 * self.h[0], j as f64 * self.h[1]]
    }

    /// Header JSON `{dim, n, h}`.
    pub fn header(&self) -> serde_json::Value {
        json!({ "dim": self.dim, "n": self.n(), "h": self.h(), "extent": self.extent() })
    }

    pub fn apply_mass(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|v| self.weight * v).collect()
    }

    pub fn apply_stiffness(&self, u: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.n[0], self.n[1]);
        let cx = self.weight / (self.h[0] * self.h[0]);
        let cy = if self.dim == 2 {
            self.weight / (self.h[1] * self.h[1])
        } else {
            0.0
        };
        let mut out = vec![0.0; u.len()];
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let left = if i > 0 { u[k - 1] } else { 0.0 };
                let right = if i + 1 < nx { u[k + 1] } else { 0.0 };
                let mut v = cx * (2.0 * u[k] - left - right);
                if self.dim == 2 {
                    let down = if j > 0 { u[k - nx] } else { 0.0 };
                    let up = if j + 1 < ny { u[k + nx] } else { 0.0 };
                    v += cy * (2.0 * u[k] - down - up);
                }
                out[k] = v;
            }
        }
        out
    }

    /// `(K + M) u`
    pub fn apply_kpm(&self, u: &[f64]) -> Vec<f64> {
        let mut out = self.apply_stiffness(u);
        for (o, v) in out.iter_mut().zip(u) {
            *o += self.weight * v;
        }
        out
    }

    pub fn mass_form(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weight * dot(u, v)
    }

    /// `uᵀKu` summed over edges, boundary edges included.
    pub fn stiffness_energy(&self, u: &[f64]) -> f64 {
        let (nx, ny) = (self.n[0], self.n[1]);
        let at = |i: usize, j: usize| -> f64 {
            if i == 0 || j == 0 || i > nx || j > ny {
                0.0
            } else {
                u[(j - 1) * nx + (i - 1)]
            }
        };
        let cx = self.weight / (self.h[0] * self.h[0]);
        let mut sx = 0.0;
        for j in 1..=ny {
            for i in 0..=nx {
                let d = at(i + 1, j) - at(i, j);
                sx += d * d;
            }
        }
        let mut total = cx * sx;
        if self.dim == 2 {
            let cy = self.weight / (self.h[1] * self.h[1]);
            let mut sy = 0.0;
            for j in 0..=ny {
                for i in 1..=nx {
                    let d = at(i, j + 1) - at(i, j);
                    sy += d * d;
                }
            }
            total += cy * sy;
        }
        total
    }

    pub fn stiffness_form(&self, u: &[f64], v: &[f64]) -> f64 {
        dot(&self.apply_stiffness(u), v)
    }

    pub fn l2_norm(&self, u: &[f64]) -> f64 {
        self.mass_form(u, u).sqrt()
    }

    pub fn h10_norm(&self, u: &[f64]) -> f64 {
        self.stiffness_energy(u).sqrt()
    }

    /// `√(uᵀ(K+M)u)`
    pub fn h1_norm(&self, u: &[f64]) -> f64 {
        (self.stiffness_energy(u) + self.mass_form(u, u)).sqrt()
    }

    fn bandwidth(&self) -> usize {
        if self.dim == 1 {
            1
        } else {
            self.n[0]
        }
    }

    fn band_entry(&self, shift: f64) -> impl Fn(usize, usize) -> f64 + '_ {
        let cx = self.weight / (self.h[0] * self.h[0]);
        let cy = if self.dim == 2 {
            self.weight / (self.h[1] * self.h[1])
        } else {
            0.0
        };
        let nx = self.n[0];
        move |i, j| {
            if i == j {
                2.0 * cx + 2.0 * cy + shift
            } else if i - j == 1 && i % nx != 0 {
                -cx
            } else if self.dim == 2 && i - j == nx {
                -cy
            } else {
                0.0
            }
        }
    }

    fn kpm_factor(&self) -> Result<&BandCholesky> {
        self.kpm
            .get_or_init(|| BandCholesky::factor(self.n_dof(), self.bandwidth(), self.band_entry(self.weight)))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn k_factor(&self) -> Result<&BandCholesky> {
        self.k_only
            .get_or_init(|| BandCholesky::factor(self.n_dof(), self.bandwidth(), self.band_entry(0.0)))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Solves `(K + M) z = r`.
    pub fn solve_kpm(&self, r: &[f64]) -> Result<Vec<f64>> {
        Ok(self.kpm_factor()?.solve(r))
    }

    /// Solves `K z = r`.
    pub fn solve_k(&self, r: &[f64]) -> Result<Vec<f64>> {
        Ok(self.k_factor()?.solve(r))
    }

    /// Dual norm `√(rᵀ(K+M)⁻¹r)`.
    pub fn dual_norm(&self, r: &[f64]) -> Result<f64> {
        let z = self.solve_kpm(r)?;
        Ok(dot(r, &z).max(0.0).sqrt())
    }

    /// Inverse power iteration on the pencil `(K, M)` from the all-ones start.
    /// Stops when the relative Rayleigh change is below `tol` and the iterate
    /// has settled.
    pub fn first_eigenpair(&self, tol: f64) -> Result<EigenPair> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("eigen tolerance must be positive, got {tol}")));
        }
        let factor = self.k_factor()?;
        let mut x = vec![1.0; self.n_dof()];
        let norm = self.l2_norm(&x);
        x.iter_mut().for_each(|v| *v /= norm);
        let mut lambda = self.stiffness_energy(&x);
        let mut change = f64::INFINITY;
        for it in 1..=EIGEN_MAX_ITERS {
            let mut y = self.apply_mass(&x);
            factor.solve_in_place(&mut y);
            let norm = self.l2_norm(&y);
            y.iter_mut().for_each(|v| *v /= norm);
            let next = self.stiffness_energy(&y);
            change = (next - lambda).abs() / next;
            let step = y.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            x = y;
            lambda = next;
            if change < tol && step < 1e-13 * crate::linalg::max_abs(&x) {
                if x.iter().any(|&v| v <= 0.0) {
                    return Err(Error::Structural("first eigenvector is not strictly positive".into()));
                }
                return Ok(EigenPair {
                    lambda1: lambda,
                    phi1: x,
                    iterations: it,
                });
            }
        }
        Err(Error::EigenNotConverged {
            iters: EIGEN_MAX_ITERS,
            last_change: change,
        })
    }

    /// Cached eigenpair at [`EIGEN_TOL`].
    pub fn eigen(&self) -> Result<&EigenPair> {
        self.eigen
            .get_or_init(|| self.first_eigenpair(EIGEN_TOL))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Closed-form first eigenvalue of the discrete pencil.
    pub fn lambda1_closed_form(&self) -> f64 {
        (0..self.dim)
            .map(|a| {
                let s = (0.5 * std::f64::consts::PI * self.h[a] / self.extent[a]).sin();
                4.0 * s * s / (self.h[a] * self.h[a])
            })
            .sum()
    }

    /// Piecewise-linear field equal to `t0` on the centred sub-box covering a
    /// fraction `1 − margin` of each axis and ramping to 0 at the boundary.
    pub fn plateau_field(&self, t0: f64, margin: f64) -> Result<Vec<f64>> {
        if !(margin > 0.0 && margin < 1.0) {
            return Err(Error::InvalidParameter(format!("plateau margin must lie in (0, 1), got {margin}")));
        }
        let ramps: Vec<f64> = (0..self.dim).map(|a| 0.5 * margin * self.extent[a]).collect();
        for a in 0..self.dim {
            if ramps[a] < self.h[a] {
                return Err(Error::InvalidParameter(format!(
                    "plateau margin {margin} leaves a ramp narrower than one cell on axis {a}"
                )));
            }
        }
        Ok((0..self.n_dof())
            .map(|k| {
                let c = self.coords(k);
                let mut r = 1.0f64;
                for a in 0..self.dim {
                    let d = c[a].min(self.extent[a] - c[a]);
                    r = r.min(d / ramps[a]);
                }
                t0 * r.min(1.0)
            })
            .collect())
    }

    /// CSV with header `x[,y],value`, boundary nodes included with value 0.
    pub fn field_csv(&self, u: &[f64]) -> String {
        let (nx, ny) = (self.n[0], self.n[1]);
        let mut s = String::new();
        if self.dim == 1 {
            s.push_str("x,value\n");
            for i in 0..=nx + 1 {
                let v = if i == 0 || i == nx + 1 { 0.0 } else { u[i - 1] };
                let _ = writeln!(s, "{},{}", csv_number(i as f64 * self.h[0]), csv_number(v));
            }
        } else {
            s.push_str("x,y,value\n");
            for j in 0..=ny + 1 {
                for i in 0..=nx + 1 {
                    let inside = i >= 1 && i <= nx && j >= 1 && j <= ny;
                    let v = if inside { u[self.index(i, j)] } else { 0.0 };
                    let (x, y) = (i as f64 * self.h[0], j as f64 * self.h[1]);
                    let _ = writeln!(s, "{},{},{}", csv_number(x), csv_number(y), csv_number(v));
                }
            }
        }
        s
    }

    /// Samples `f(x, y)` at the dofs.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.n_dof())
            .map(|k| {
                let c = self.coords(k);
                f(c[0], c[1])
            })
            .collect()
    }
}

/// Shortest round-trip decimal, switching to exponent form for very small or large magnitudes.
pub fn csv_number(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn positive_part(u: &[f64]) -> Vec<f64> {
    u.iter().map(|v| v.max(0.0)).collect()
}

pub fn negative_part(u: &[f64]) -> Vec<f64> {
    u.iter().map(|v| (-v).max(0.0)).collect()
}

/// A nodal field bound to its grid.
#[derive(Clone, Debug)]
pub struct Field {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2: f64,
    pub h10: f64,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_dof() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values, grid has {} dofs",
                values.len(),
                grid.n_dof()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.n_dof();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn norms(&self) -> Norms {
        Norms {
            l2: self.grid.l2_norm(&self.values),
            h10: self.grid.h10_norm(&self.values),
        }
    }

    pub fn positive_part(&self) -> Field {
        Field {
            grid: self.grid.clone(),
            values: positive_part(&self.values),
        }
    }

    pub fn negative_part(&self) -> Field {
        Field {
            grid: self.grid.clone(),
            values: negative_part(&self.values),
        }
    }

    pub fn to_csv(&self) -> String {
        self.grid.field_csv(&self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_numbers_round_trip() {
        for v in [0.0, 1.0, -0.5, 1.4441e-21, 3.0e20, 0.1 + 0.2, -7.1e-5, 123456.789] {
            let s = csv_number(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
            assert!(s.len() <= 24, "{s}");
        }
    }
    use std::f64::consts::PI;

    #[test]
    fn build_examples() {
        let g = Grid::new(&DomainSpec::interval(1.0, 3)).unwrap();
        assert_eq!((g.h()[0], g.n_dof()), (0.25, 3));
        let g = Grid::new(&DomainSpec::rectangle(1.0, 1.0, 4, 4)).unwrap();
        assert_eq!(g.n_dof(), 16);
        assert!((g.h()[0] - 0.2).abs() < 1e-16);
        let g = Grid::new(&DomainSpec::rectangle(2.0, 1.0, 8, 4)).unwrap();
        assert!((g.h()[0] - 2.0 / 9.0).abs() < 1e-16 && (g.h()[1] - 0.2).abs() < 1e-16);
        assert!(Grid::new(&DomainSpec::interval(1.0, 0)).is_err());
        assert!(Grid::new(&DomainSpec::interval(-1.0, 5)).is_err());
    }

    #[test]
    fn small_stiffness_entries() {
        let g = Grid::new(&DomainSpec::interval(1.0, 3)).unwrap();
        let col = |k: usize| {
            let mut e = vec![0.0; 3];
            e[k] = 1.0;
            g.apply_stiffness(&e)
        };
        assert_eq!(col(1), vec![-4.0, 8.0, -4.0]);
        assert_eq!(g.apply_mass(&[1.0, 1.0, 1.0]), vec![0.25; 3]);
    }

    #[test]
    fn constant_field_energy_is_boundary_jumps() {
        let g = Grid::new(&DomainSpec::interval(1.0, 999)).unwrap();
        let u = vec![1.0; 999];
        assert!((g.stiffness_energy(&u) - 2.0 / g.h()[0]).abs() < 1e-9);
        assert!((g.stiffness_form(&u, &u) - 2.0 / g.h()[0]).abs() < 1e-6);
    }

    #[test]
    fn sine_norms() {
        let g = Grid::new(&DomainSpec::interval(1.0, 255)).unwrap();
        let u = g.sample(|x, _| (PI * x).sin());
        let (l2, h10) = (g.l2_norm(&u), g.h10_norm(&u));
        assert!((l2 - 0.5f64.sqrt()).abs() < 1e-3 * l2);
        assert!((h10 - PI * 0.5f64.sqrt()).abs() < 1e-3 * h10);
    }

    #[test]
    fn eigenpair_1d_matches_closed_form() {
        let g = Grid::new(&DomainSpec::interval(1.0, 31)).unwrap();
        let e = g.first_eigenpair(1e-14).unwrap();
        let h = g.h()[0];
        let closed = 2.0 / (h * h) * (1.0 - (PI * h).cos());
        assert!((e.lambda1 - closed).abs() < 1e-12 * closed);
        assert!((e.lambda1 - g.lambda1_closed_form()).abs() < 1e-12 * closed);
        assert!((g.l2_norm(&e.phi1) - 1.0).abs() < 1e-14);
        assert!(e.phi1.iter().all(|&v| v > 0.0));
        assert!((g.stiffness_energy(&e.phi1) - e.lambda1).abs() < 1e-10 * e.lambda1);
    }

    #[test]
    fn eigenpair_2d_rectangle() {
        let g = Grid::new(&DomainSpec::rectangle(2.0, 1.0, 15, 7)).unwrap();
        let e = g.eigen().unwrap();
        assert!((e.lambda1 - g.lambda1_closed_form()).abs() < 1e-11 * e.lambda1);
    }

    #[test]
    fn kpm_solve_roundtrip_2d() {
        let g = Grid::new(&DomainSpec::rectangle(1.0, 1.5, 6, 5)).unwrap();
        let u: Vec<f64> = (0..g.n_dof()).map(|k| ((k * 7 % 11) as f64) - 5.0).collect();
        let back = g.solve_kpm(&g.apply_kpm(&u)).unwrap();
        assert!(crate::linalg::max_abs(&crate::linalg::sub(&u, &back)) < 1e-12);
        let back = g.solve_k(&g.apply_stiffness(&u)).unwrap();
        assert!(crate::linalg::max_abs(&crate::linalg::sub(&u, &back)) < 1e-11);
        let ku = g.apply_stiffness(&u);
        assert!((dot(&ku, &u) - g.stiffness_energy(&u)).abs() < 1e-9 * g.stiffness_energy(&u));
    }

    #[test]
    fn parts_and_plateau() {
        assert_eq!(positive_part(&[1.0, -2.0, 3.0]), vec![1.0, 0.0, 3.0]);
        assert_eq!(negative_part(&[1.0, -2.0, 3.0]), vec![0.0, 2.0, 0.0]);
        let g = Grid::new(&DomainSpec::interval(1.0, 99)).unwrap();
        let w = g.plateau_field(1.0, 0.2).unwrap();
        assert_eq!(w.iter().cloned().fold(f64::MIN, f64::max), 1.0);
        assert!(w.iter().all(|&v| v > 0.0 && v <= 1.0));
        let ones = w.iter().filter(|&&v| v == 1.0).count();
        assert!((79..=81).contains(&ones));
        assert!(g.plateau_field(1.0, 0.01).is_err());
    }

    #[test]
    fn csv_includes_boundary() {
        let g = Grid::new(&DomainSpec::interval(1.0, 3)).unwrap();
        let csv = g.field_csv(&[1.0, 2.0, 3.0]);
        assert_eq!(csv, "x,value\n0,0\n0.25,1\n0.5,2\n0.75,3\n1,0\n");
        let g = Grid::new(&DomainSpec::rectangle(1.0, 1.0, 3, 3)).unwrap();
        let csv = g.field_csv(&vec![1.0; 9]);
        assert_eq!(csv.lines().count(), 26);
        assert!(csv.starts_with("x,y,value\n0,0,0\n"));
    }
}
