//! Turns a parsed config into validated model objects before any solve.

use std::path::Path;
use std::sync::Arc;

use quasilin::solver::{SolverConfig, TwoSolutionOptions};
use quasilin::{DomainSpec, EnergyConfig, Family, GammaModel, Grid, Reaction, SampleSpec};

use crate::config::{
    Amplitude, Direction, ExperimentConfig, FamilyName, GammaBlock, GammaKindName, LoadedConfig, ReactionBlock,
    ReactionKindName,
};
use crate::error::{config, CliError};

const AUDIT_T_MIN: f64 = 1e-8;
const DEFAULT_MARGIN: f64 = 0.2;

#[derive(Clone, Debug, PartialEq)]
pub enum AmplitudeSpec {
    Fixed(f64),
    Auto,
}

/// Datum `h = amplitude · d`, with `d` normalized to unit L² norm.
#[derive(Clone, Debug)]
pub struct Datum {
    pub direction: Vec<f64>,
    pub amplitude: AmplitudeSpec,
}

#[derive(Debug)]
pub struct Setup {
    pub loaded: LoadedConfig,
    pub seed: u64,
    pub grid: Arc<Grid>,
    pub gamma: GammaModel,
    pub reaction: Reaction,
    pub datum: Option<Datum>,
    pub solver: SolverConfig,
    pub sample: SampleSpec,
}

impl Setup {
    pub fn new(loaded: LoadedConfig, seed_override: Option<u64>) -> Result<Self, CliError> {
        let c = &loaded.config;
        let seed = seed_override.or(c.seed).unwrap_or(c.solver.seed);
        let solver = SolverConfig {
            seed,
            ..c.solver.clone()
        };
        solver.validate().map_err(|e| config(format!("[solver]: {e}")))?;
        validate_two_solution(&c.two_solution)?;
        if !(c.mu.alpha_j > 0.0 && c.mu.alpha_j.is_finite()) {
            return Err(config(format!("[mu] alpha_j must be positive, got {}", c.mu.alpha_j)));
        }
        let grid = build_grid(c)?;
        let gamma = build_gamma(&c.gamma)?;
        let sample = audit_sample(&c.gamma)?;
        let reaction = build_reaction(&c.reaction, &gamma, &grid)?;
        let datum = match &c.h {
            None => None,
            Some(hb) => {
                let raw = match hb.direction {
                    Direction::Plateau => {
                        if hb.path.is_some() {
                            return Err(config("[h] path is only used with direction = \"file\""));
                        }
                        grid.plateau_field(1.0, hb.margin.unwrap_or(DEFAULT_MARGIN))
                            .map_err(|e| config(format!("[h]: {e}")))?
                    }
                    Direction::Phi1 => {
                        if hb.path.is_some() || hb.margin.is_some() {
                            return Err(config("[h] direction = \"phi1\" takes no path or margin"));
                        }
                        grid.eigen().map_err(CliError::Solver)?.phi1.clone()
                    }
                    Direction::File => {
                        if hb.margin.is_some() {
                            return Err(config("[h] margin is only used with direction = \"plateau\""));
                        }
                        let p = hb.path.as_ref().ok_or_else(|| config("[h] direction = \"file\" needs a path"))?;
                        let p = resolve(&loaded.path, p);
                        read_field(&grid, &p)?
                    }
                };
                if raw.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(config("[h] direction must be finite and nonnegative"));
                }
                let norm = grid.l2_norm(&raw);
                if !(norm > 0.0) {
                    return Err(config("[h] direction is zero"));
                }
                let amplitude = match &hb.amplitude {
                    Amplitude::Value(a) if a.is_finite() && *a >= 0.0 => AmplitudeSpec::Fixed(*a),
                    Amplitude::Value(a) => return Err(config(format!("[h] amplitude must be >= 0, got {a}"))),
                    Amplitude::Keyword(k) if k == "auto" => AmplitudeSpec::Auto,
                    Amplitude::Keyword(k) => {
                        return Err(config(format!("[h] amplitude must be a number or \"auto\", got \"{k}\"")))
                    }
                };
                Some(Datum {
                    direction: raw.iter().map(|v| v / norm).collect(),
                    amplitude,
                })
            }
        };
        Ok(Self {
            loaded,
            seed,
            grid,
            gamma,
            reaction,
            datum,
            solver,
            sample,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.loaded.config
    }

    pub fn digest(&self) -> &str {
        &self.loaded.digest
    }

    pub fn energy(&self, h: Vec<f64>) -> Result<EnergyConfig, CliError> {
        Ok(EnergyConfig::new(self.grid.clone(), self.gamma.clone(), self.reaction.clone(), h)?)
    }

    pub fn zero_h(&self) -> Vec<f64> {
        vec![0.0; self.grid.n_dof()]
    }
}

fn validate_two_solution(o: &TwoSolutionOptions) -> Result<(), CliError> {
    if !(o.t_max > 0.0 && o.t_max.is_finite() && o.gap >= 0.0 && o.n_radii >= 2) {
        return Err(config(format!("[two_solution] needs t_max > 0, gap >= 0, n_radii >= 2: {o:?}")));
    }
    Ok(())
}

fn resolve(config_path: &Path, p: &Path) -> std::path::PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config_path.parent().unwrap_or(Path::new(".")).join(p)
    }
}

fn build_grid(c: &ExperimentConfig) -> Result<Arc<Grid>, CliError> {
    let d = &c.domain;
    if d.extent.len() != d.dim || d.n.len() != d.dim {
        return Err(config(format!(
            "[domain] dim = {} but extent has {} and n has {} entries",
            d.dim,
            d.extent.len(),
            d.n.len()
        )));
    }
    let spec = DomainSpec {
        dim: d.dim,
        extent: d.extent.clone(),
        n: d.n.clone(),
    };
    Grid::shared(&spec).map_err(|e| config(format!("[domain]: {e}")))
}

/// Rejects keys that `kind` does not use and fetches required ones.
struct Params<'a> {
    block: &'a str,
    kind: String,
    present: Vec<(&'static str, bool)>,
}

impl<'a> Params<'a> {
    fn allow(&self, allowed: &[&str]) -> Result<(), CliError> {
        for (name, here) in &self.present {
            if *here && !allowed.contains(name) {
                return Err(config(format!("[{}] {} does not take `{name}`", self.block, self.kind)));
            }
        }
        Ok(())
    }

    fn need<T: Clone>(&self, name: &str, v: &Option<T>) -> Result<T, CliError> {
        v.clone()
            .ok_or_else(|| config(format!("[{}] {} needs `{name}`", self.block, self.kind)))
    }
}

fn build_gamma(g: &GammaBlock) -> Result<GammaModel, CliError> {
    let p = Params {
        block: "gamma",
        kind: format!("kind = {:?}", g.kind),
        present: vec![
            ("c", g.c.is_some()),
            ("A", g.big_a.is_some()),
            ("B", g.big_b.is_some()),
            ("p", g.p.is_some()),
            ("a", g.a.is_some()),
            ("b", g.b.is_some()),
            ("t", g.t.is_some()),
            ("values", g.values.is_some()),
        ],
    };
    let built = match g.kind {
        GammaKindName::Constant => {
            p.allow(&["c"])?;
            GammaModel::constant(p.need("c", &g.c)?)
        }
        GammaKindName::DoublePhase => {
            p.allow(&["A", "B", "p"])?;
            GammaModel::double_phase(p.need("A", &g.big_a)?, p.need("B", &g.big_b)?, p.need("p", &g.p)?)
        }
        // unguarded so that b >= 8a reaches the convexity audit
        GammaKindName::RationalDecay => {
            p.allow(&["a", "b"])?;
            GammaModel::rational_decay_unguarded(p.need("a", &g.a)?, p.need("b", &g.b)?)
        }
        GammaKindName::Tabulated => {
            p.allow(&["t", "values"])?;
            GammaModel::tabulated(p.need("t", &g.t)?, p.need("values", &g.values)?)
        }
    };
    built.map_err(|e| config(format!("[gamma]: {e}")))
}

fn audit_sample(g: &GammaBlock) -> Result<SampleSpec, CliError> {
    let def = SampleSpec::default();
    let t_max = g.tmax.unwrap_or(def.t_max);
    let n = g.samples.unwrap_or(def.n);
    if !(t_max > AUDIT_T_MIN * 10.0 && t_max.is_finite()) || n < 10 {
        return Err(config(format!("[gamma] needs tmax > {:e} and samples >= 10", AUDIT_T_MIN * 10.0)));
    }
    Ok(SampleSpec::log(AUDIT_T_MIN, t_max, n))
}

fn build_reaction(r: &ReactionBlock, gm: &GammaModel, grid: &Grid) -> Result<Reaction, CliError> {
    let family = match (r.kind, r.family) {
        (ReactionKindName::PureLinear, None) => FamilyName::LinearLambda,
        (ReactionKindName::PureLinear, Some(FamilyName::LinearLambda)) => FamilyName::LinearLambda,
        (ReactionKindName::PureLinear, Some(f)) => {
            return Err(config(format!("[reaction] pure_linear cannot use family {f:?}")))
        }
        (_, Some(f)) => f,
        (k, None) => return Err(config(format!("[reaction] kind {k:?} needs a family"))),
    };
    let p = Params {
        block: "reaction",
        kind: format!("family = {family:?}"),
        present: vec![
            ("a", r.a.is_some()),
            ("alpha", r.alpha.is_some()),
            ("beta", r.beta.is_some()),
            ("shift", r.shift.is_some()),
            ("lambda", r.lambda.is_some()),
            ("lambda_factor", r.lambda_factor.is_some()),
            ("t", r.t.is_some()),
            ("values", r.values.is_some()),
        ],
    };
    let lambda = || -> Result<f64, CliError> {
        match (r.lambda, r.lambda_factor) {
            (Some(l), None) => Ok(l),
            (None, Some(k)) => {
                let ginf = gm
                    .gamma_inf()
                    .ok_or_else(|| config("[reaction] lambda_factor needs a γ with a positive limit"))?;
                let l1 = grid.eigen().map_err(CliError::Solver)?.lambda1;
                Ok(k * ginf * (1.0 + l1))
            }
            _ => Err(config("[reaction] give exactly one of `lambda` and `lambda_factor`")),
        }
    };
    let fam = match family {
        FamilyName::SinA => {
            p.allow(&["a"])?;
            Ok(Family::SinA { a: p.need("a", &r.a)? })
        }
        FamilyName::PowerRatioAb => {
            p.allow(&["alpha", "beta"])?;
            Ok(Family::PowerRatio {
                alpha: p.need("alpha", &r.alpha)?,
                beta: p.need("beta", &r.beta)?,
            })
        }
        FamilyName::MinPowersAb => {
            p.allow(&["alpha", "beta"])?;
            Ok(Family::MinPowers {
                alpha: p.need("alpha", &r.alpha)?,
                beta: p.need("beta", &r.beta)?,
            })
        }
        FamilyName::Log1p => {
            p.allow(&[])?;
            Ok(Family::Log1p)
        }
        FamilyName::ExpLogpowA => {
            p.allow(&["alpha"])?;
            Ok(Family::ExpLogPow {
                alpha: p.need("alpha", &r.alpha)?,
            })
        }
        FamilyName::ExpLoglog => {
            p.allow(&["shift"])?;
            Ok(Family::ExpLogLog {
                shift: p.need("shift", &r.shift)?,
            })
        }
        FamilyName::AsymlinearLambda => {
            p.allow(&["lambda", "lambda_factor"])?;
            Ok(Family::AsymLinear { lambda: lambda()? })
        }
        FamilyName::LinearLambda => {
            p.allow(&["lambda", "lambda_factor"])?;
            Ok(Family::Linear { lambda: lambda()? })
        }
        FamilyName::UserTabulated => {
            p.allow(&["t", "values"])?;
            Family::tabulated(p.need("t", &r.t)?, p.need("values", &r.values)?)
        }
    }
    .map_err(|e: quasilin::Error| config(format!("[reaction]: {e}")))?;
    let built = match r.kind {
        ReactionKindName::SublinearG => {
            let nu = r.nu.ok_or_else(|| config("[reaction] sublinear_g needs `nu`"))?;
            Reaction::sublinear(fam, nu)
        }
        ReactionKindName::LinearGrowthF | ReactionKindName::PureLinear if r.nu.is_some() => {
            return Err(config("[reaction] `nu` only applies to sublinear_g"))
        }
        ReactionKindName::LinearGrowthF => Reaction::linear_growth(fam),
        ReactionKindName::PureLinear => match fam {
            Family::Linear { lambda } => Reaction::pure_linear(lambda),
            _ => unreachable!("family checked above"),
        },
    };
    let mut built = built.map_err(|e| config(format!("[reaction]: {e}")))?;
    if let Some(c) = r.c_lin {
        built = built.with_c_lin(c).map_err(|e| config(format!("[reaction]: {e}")))?;
    }
    Ok(built)
}

/// Reads a field CSV (`x[,y],value`, boundary rows included) on this grid.
pub fn read_field(grid: &Grid, path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
    let bad = |line: usize, m: &str| config(format!("{}:{line}: {m}", path.display()));
    let dim = grid.dim();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let expect = if dim == 1 { "x,value" } else { "x,y,value" };
    match lines.next() {
        Some((_, h)) if h.trim() == expect => {}
        _ => return Err(bad(1, &format!("expected header `{expect}`"))),
    }
    let reference = grid.field_csv(&vec![0.0; grid.n_dof()]);
    let mut nodes = reference.lines().skip(1);
    let mut values = Vec::with_capacity(grid.n_dof());
    for (k, line) in lines {
        let cols: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(k + 1, &e.to_string()))?;
        if cols.len() != dim + 1 {
            return Err(bad(k + 1, &format!("expected {} columns", dim + 1)));
        }
        let node = nodes.next().ok_or_else(|| bad(k + 1, "more rows than grid nodes"))?;
        let want: Vec<f64> = node.split(',').map(|s| s.parse().expect("own csv")).collect();
        let tol = 1e-9 * grid.extent().iter().cloned().fold(1.0, f64::max);
        if (0..dim).any(|a| (cols[a] - want[a]).abs() > tol) {
            return Err(bad(k + 1, "node coordinates do not match the grid"));
        }
        values.push((want, cols[dim]));
    }
    if nodes.next().is_some() {
        return Err(config(format!("{}: fewer rows than grid nodes", path.display())));
    }
    // interior values in dof order; the reference csv lists nodes row-major with boundaries
    let (nx, ny) = (grid.n()[0], if dim == 2 { grid.n()[1] } else { 1 });
    let mut u = Vec::with_capacity(grid.n_dof());
    for (idx, (_, v)) in values.iter().enumerate() {
        let (i, j) = if dim == 1 { (idx, 1) } else { (idx % (nx + 2), idx / (nx + 2)) };
        let inside = i >= 1 && i <= nx && (dim == 1 || (j >= 1 && j <= ny));
        if inside {
            u.push(*v);
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_csv_round_trips() {
        for spec in [DomainSpec::interval(2.0, 5), DomainSpec::rectangle(1.0, 2.0, 3, 4)] {
            let grid = Grid::new(&spec).unwrap();
            let u: Vec<f64> = (0..grid.n_dof()).map(|k| 0.1 * k as f64 + 0.3).collect();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("f.csv");
            std::fs::write(&p, grid.field_csv(&u)).unwrap();
            assert_eq!(read_field(&grid, &p).unwrap(), u);
        }
    }

    #[test]
    fn field_csv_on_wrong_grid_is_rejected() {
        let g5 = Grid::new(&DomainSpec::interval(1.0, 5)).unwrap();
        let g7 = Grid::new(&DomainSpec::interval(1.0, 7)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        std::fs::write(&p, g5.field_csv(&[1.0; 5])).unwrap();
        assert!(matches!(read_field(&g7, &p), Err(CliError::Config(_))));
    }
}
