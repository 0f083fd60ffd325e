//! The density γ of the quasilinear operator, its primitive Γ, and sampled
//! audits of the structural hypotheses placed on them.
//!
//! The operator is `S u = -div[γ(s)∇u] + γ(s)u` with `s = (u² + |∇u|²)/2`, and
//! the energy density is `Γ(s)` with `Γ(t) = ∫₀ᵗ γ`.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::interp::Pchip;
use crate::quad;
use crate::sample::{HypothesisCheck, HypothesisReport, SampleSpec};

/// Relative tolerance for Γ when no closed form exists.
pub const GAMMA_QUAD_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaKind {
    Constant,
    DoublePhase,
    RationalDecay,
    UserTabulated,
}

#[derive(Clone, Debug)]
enum Form {
    Constant {
        c: f64,
    },
    /// Γ(t) = A t + B((1+t)^{p/2} − 1)
    DoublePhase {
        a: f64,
        b: f64,
        p: f64,
    },
    /// γ(t) = a + b/(1+t)
    RationalDecay {
        a: f64,
        b: f64,
    },
    /// Shape-preserving cubic through user samples, constant beyond the last
    /// knot. `cumulative[k]` caches Γ at knot k.
    Tabulated {
        interp: Pchip,
        cumulative: Vec<f64>,
    },
}

#[derive(Clone, Debug)]
pub struct GammaModel {
    form: Form,
    gamma_min: f64,
    gamma_max: f64,
    gamma_inf: Option<f64>,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

impl GammaModel {
    pub fn constant(c: f64) -> Result<Self> {
        positive("c", c)?;
        Ok(Self {
            form: Form::Constant { c },
            gamma_min: c,
            gamma_max: c,
            gamma_inf: Some(c),
        })
    }

    /// Double-phase density `γ(t) = A + B(p/2)(1+t)^{p/2-1}`, `1 < p < 2`.
    pub fn double_phase(a: f64, b: f64, p: f64) -> Result<Self> {
        positive("A", a)?;
        positive("B", b)?;
        if !(p > 1.0 && p < 2.0) {
            return Err(Error::InvalidParameter(format!("double_phase needs 1 < p < 2, got {p}")));
        }
        Ok(Self {
            form: Form::DoublePhase { a, b, p },
            gamma_min: a,
            gamma_max: a + 0.5 * b * p,
            gamma_inf: Some(a),
        })
    }

    /// `γ(t) = a + b/(1+t)` with `0 <= b < 8a`, the range where `t ↦ Γ(t²)` is
    /// strictly convex.
    pub fn rational_decay(a: f64, b: f64) -> Result<Self> {
        positive("a", a)?;
        if !(b < 8.0 * a) {
            return Err(Error::InvalidParameter(format!(
                "rational_decay needs b < 8a for strict convexity, got a = {a}, b = {b}"
            )));
        }
        Self::rational_decay_unguarded(a, b)
    }

    /// Same family without the `b < 8a` guard, for auditing models that are
    /// expected to fail the convexity check.
    pub fn rational_decay_unguarded(a: f64, b: f64) -> Result<Self> {
        positive("a", a)?;
        if !(b.is_finite() && b >= 0.0) {
            return Err(Error::InvalidParameter(format!("rational_decay needs b >= 0, got {b}")));
        }
        Ok(Self {
            form: Form::RationalDecay { a, b },
            gamma_min: a,
            gamma_max: a + b,
            gamma_inf: Some(a),
        })
    }

    /// Tabulated density. Knots must start at `t = 0`; values are not required
    /// to be positive here so that the bounds audit can flag them.
    pub fn tabulated(t: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if t.first() != Some(&0.0) {
            return Err(Error::InvalidParameter("tabulated γ must have its first knot at t = 0".into()));
        }
        let interp = Pchip::new(t, values)?;
        let knots = interp.knots();
        let mut cumulative = vec![0.0; knots.len()];
        for k in 1..knots.len() {
            let seg = quad::integrate(|s| interp.eval(s), knots[k - 1], knots[k], GAMMA_QUAD_TOL, 1e-300)?;
            cumulative[k] = cumulative[k - 1] + seg;
        }
        // Monotone cubic segments stay within the range of their end values,
        // so knot extremes bound the interpolant.
        let vals = interp.values();
        let gamma_min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let gamma_max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let last = *vals.last().expect("at least two knots");
        Ok(Self {
            form: Form::Tabulated { interp, cumulative },
            gamma_min,
            gamma_max,
            gamma_inf: (last > 0.0).then_some(last),
        })
    }

    pub fn kind(&self) -> GammaKind {
        match self.form {
            Form::Constant { .. } => GammaKind::Constant,
            Form::DoublePhase { .. } => GammaKind::DoublePhase,
            Form::RationalDecay { .. } => GammaKind::RationalDecay,
            Form::Tabulated { .. } => GammaKind::UserTabulated,
        }
    }

    pub fn gamma_min(&self) -> f64 {
        self.gamma_min
    }

    pub fn gamma_max(&self) -> f64 {
        self.gamma_max
    }

    pub fn gamma_inf(&self) -> Option<f64> {
        self.gamma_inf
    }

    pub fn has_closed_gamma(&self) -> bool {
        !matches!(self.form, Form::Tabulated { .. })
    }

    /// Parameters and bounds as a JSON object.
    pub fn describe(&self) -> serde_json::Value {
        let params = match &self.form {
            Form::Constant { c } => json!({ "c": c }),
            Form::DoublePhase { a, b, p } => json!({ "A": a, "B": b, "p": p }),
            Form::RationalDecay { a, b } => json!({ "a": a, "b": b }),
            Form::Tabulated { interp, .. } => json!({ "knots": interp.knots().len() }),
        };
        json!({
            "kind": self.kind(),
            "params": params,
            "gamma_min": self.gamma_min,
            "gamma_max": self.gamma_max,
            "gamma_inf": self.gamma_inf,
        })
    }

    /// γ(t) for `t >= 0`. Use [`GammaModel::eval_gamma`] for checked input.
    #[inline]
    pub fn gamma(&self, t: f64) -> f64 {
        match &self.form {
            Form::Constant { c } => *c,
            Form::DoublePhase { a, b, p } => a + 0.5 * b * p * ((0.5 * p - 1.0) * t.ln_1p()).exp(),
            Form::RationalDecay { a, b } => a + b / (1.0 + t),
            Form::Tabulated { interp, .. } => {
                let (x_last, y_last, _) = interp.last();
                if t >= x_last {
                    y_last
                } else {
                    interp.eval(t)
                }
            }
        }
    }

    /// Γ(t) for `t >= 0`.
    pub fn big_gamma(&self, t: f64) -> Result<f64> {
        Ok(match &self.form {
            Form::Constant { c } => c * t,
            Form::DoublePhase { a, b, p } => a * t + b * (0.5 * p * t.ln_1p()).exp_m1(),
            Form::RationalDecay { a, b } => a * t + b * t.ln_1p(),
            Form::Tabulated { interp, cumulative } => {
                let knots = interp.knots();
                let (x_last, y_last, _) = interp.last();
                if t >= x_last {
                    cumulative[knots.len() - 1] + y_last * (t - x_last)
                } else {
                    let k = interp.segment(t);
                    let part = quad::integrate(|s| interp.eval(s), knots[k], t, GAMMA_QUAD_TOL, 1e-300)?;
                    cumulative[k] + part
                }
            }
        })
    }

    pub fn eval_gamma(&self, t: f64) -> Result<f64> {
        check_arg(t)?;
        Ok(self.gamma(t))
    }

    pub fn eval_big_gamma(&self, t: f64) -> Result<f64> {
        check_arg(t)?;
        self.big_gamma(t)
    }

    /// `K(t) = Γ(t) − γ(t)t`.
    pub fn eval_k(&self, t: f64) -> Result<f64> {
        check_arg(t)?;
        Ok(self.big_gamma(t)? - self.gamma(t) * t)
    }

    /// `β(ξ) = γ(|ξ|²/2) ξ`.
    pub fn beta(&self, xi: &[f64]) -> Vec<f64> {
        let s = 0.5 * xi.iter().map(|x| x * x).sum::<f64>();
        let g = self.gamma(s);
        xi.iter().map(|x| g * x).collect()
    }

    /// A `t` beyond which `|γ(t) − γ(∞)| <= tol`, when a limit is declared.
    pub fn limit_horizon(&self, tol: f64) -> Option<f64> {
        match &self.form {
            Form::Constant { .. } => Some(0.0),
            Form::DoublePhase { b, p, .. } => {
                let amp = 0.5 * b * p;
                if amp <= tol {
                    Some(0.0)
                } else {
                    Some((tol / amp).powf(1.0 / (0.5 * p - 1.0)) - 1.0)
                }
            }
            Form::RationalDecay { b, .. } => Some((b / tol - 1.0).max(0.0)),
            Form::Tabulated { interp, .. } => self.gamma_inf.map(|_| interp.last().0),
        }
    }

    fn audit_points(&self, sample: &SampleSpec) -> Vec<f64> {
        let mut ts = vec![0.0];
        ts.extend(sample.points());
        if let Form::Tabulated { interp, .. } = &self.form {
            ts.extend_from_slice(interp.knots());
        }
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }

    /// Bounds `γ_min <= γ <= γ_max` with positivity, and convergence to γ(∞)
    /// over the last decade of the sample.
    pub fn check_bounds_and_limit(&self, sample: &SampleSpec) -> HypothesisReport {
        let mut report = HypothesisReport::new(format!("gamma:{:?}", self.kind()), sample.clone());
        let ts = self.audit_points(sample);
        let slack = 1e-12 * self.gamma_max.abs().max(1.0);
        let mut min_val = f64::INFINITY;
        let mut witness = None;
        for &t in &ts {
            let g = self.gamma(t);
            min_val = min_val.min(g);
            let bad = !g.is_finite() || g <= 0.0 || g < self.gamma_min - slack || g > self.gamma_max + slack;
            if bad && witness.is_none() {
                witness = Some(t);
            }
        }
        report.push(HypothesisCheck::from_flag("q1", witness.is_none(), witness, Some(min_val)));

        match self.gamma_inf {
            Some(ginf) => {
                let lo = sample.t_max / 10.0;
                let (mut worst_t, mut worst) = (sample.t_max, 0.0f64);
                for &t in ts.iter().filter(|&&t| t >= lo) {
                    let dev = (self.gamma(t) - ginf).abs();
                    if dev > worst {
                        worst = dev;
                        worst_t = t;
                    }
                }
                let ok = worst <= sample.tol;
                report.push(HypothesisCheck::from_flag("q3", ok, (!ok).then_some(worst_t), Some(sample.tol - worst)));
            }
            None => report.push(
                HypothesisCheck::violated("q3", None, None).with_note("model declares no positive limit at infinity"),
            ),
        }
        report
    }

    /// Convexity of `t ↦ Γ(t²)` through the equivalent monotonicity of
    /// `m(t) = t γ(t²/2)`. Reported as `q4` when `strict`, otherwise `q2`.
    ///
    /// The witness is the midpoint of the pair with the most negative slope
    /// of `m`; the first violating pair is recorded in the note.
    pub fn check_convexity(&self, sample: &SampleSpec, strict: bool) -> HypothesisReport {
        let name = if strict { "q4" } else { "q2" };
        let mut report = HypothesisReport::new(format!("gamma:{:?}", self.kind()), sample.clone());
        let ts: Vec<f64> = sample.points().into_iter().filter(|&t| t > 0.0).collect();
        let m: Vec<f64> = ts.iter().map(|&t| t * self.gamma(0.5 * t * t)).collect();
        let mut min_slope = f64::INFINITY;
        let mut worst_mid = None;
        let mut first_bad: Option<(f64, f64)> = None;
        for k in 0..ts.len().saturating_sub(1) {
            let dm = m[k + 1] - m[k];
            let slope = dm / (ts[k + 1] - ts[k]);
            let bad = if strict {
                dm <= 0.0
            } else {
                dm < -1e-12 * m[k].abs().max(1.0)
            };
            if bad && first_bad.is_none() {
                first_bad = Some((ts[k], ts[k + 1]));
            }
            if slope < min_slope {
                min_slope = slope;
                worst_mid = Some(0.5 * (ts[k] + ts[k + 1]));
            }
        }
        let check = match first_bad {
            None => HypothesisCheck::holds(name, Some(min_slope)),
            Some((a, b)) => HypothesisCheck::violated(name, worst_mid, Some(min_slope))
                .with_note(format!("first violating pair ({a:.6e}, {b:.6e})")),
        };
        report.push(check);
        report
    }

    /// Diagnostics for the older structural conditions: (s1) γ non-increasing
    /// with a positive limit, and (s3) boundedness of `K(t) = Γ(t) − γ(t)t`
    /// judged on the sample points `k_points` (growth by more than a factor
    /// of ten across them counts as unbounded).
    pub fn stuart_diagnostics(&self, sample: &SampleSpec, k_points: &[f64]) -> Result<HypothesisReport> {
        let mut report = HypothesisReport::new(format!("gamma:{:?}", self.kind()), sample.clone());
        let ts = self.audit_points(sample);
        let mut witness = None;
        for w in ts.windows(2) {
            if self.gamma(w[1]) > self.gamma(w[0]) + 1e-14 * self.gamma(w[0]).abs() {
                witness = Some(w[1]);
                break;
            }
        }
        let ok = witness.is_none() && self.gamma_inf.is_some();
        report.push(HypothesisCheck::from_flag("s1", ok, witness, None));

        let ks = k_points.iter().map(|&t| self.eval_k(t)).collect::<Result<Vec<f64>>>()?;
        let growing = ks.windows(2).all(|w| w[1] > w[0]);
        let (first, last) = (ks[0], *ks.last().expect("k_points nonempty"));
        let unbounded = growing && last > 10.0 * first.abs().max(f64::MIN_POSITIVE);
        let check = HypothesisCheck::from_flag(
            "s3",
            !unbounded,
            unbounded.then(|| *k_points.last().expect("nonempty")),
            Some(last),
        )
        .with_note(format!("K sampled at {k_points:?}: {ks:?}"));
        report.push(check);
        Ok(report)
    }

    /// Samples `G(s) = 2H(s/2)/s` with `H(s) = ∫₀ˢ (γ(0) − γ)`, the modulus that
    /// controls the local-minimum estimate near the origin. Returns `(s, G(s))`
    /// pairs and the fitted log–log slope over the smallest decade.
    pub fn origin_modulus(&self, ss: &[f64]) -> Result<(Vec<(f64, f64)>, Option<f64>)> {
        let g0 = self.gamma(0.0);
        let mut out = Vec::with_capacity(ss.len());
        for &s in ss.iter().filter(|&&s| s > 0.0) {
            let gs = g0 - 2.0 * self.big_gamma(0.5 * s)? / s;
            out.push((s, gs));
        }
        let slope = match (out.first(), out.get(1)) {
            (Some(&(s0, g0)), Some(&(s1, g1))) if g0 > 0.0 && g1 > 0.0 => Some((g1 / g0).ln() / (s1 / s0).ln()),
            _ => None,
        };
        Ok((out, slope))
    }
}

fn check_arg(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        Err(Error::Domain(format!("γ is defined on [0, ∞), got t = {t}")))
    } else {
        Ok(())
    }
}
