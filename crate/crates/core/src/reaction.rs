//! Reaction terms `f` (or `νg`), their primitives, the positive/negative
//! split used by the μ-family, and sampled growth audits.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::gamma::GammaModel;
use crate::interp::Pchip;
use crate::quad;
use crate::sample::{window_max, window_min, HypothesisCheck, HypothesisReport, SampleSpec};

pub const REACTION_QUAD_TOL: f64 = 1e-10;

/// Exponent used by the subcritical growth audit.
pub const GROWTH_EXPONENT: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReactionKind {
    SublinearG,
    LinearGrowthF,
    PureLinear,
}

#[derive(Clone, Debug)]
pub enum Family {
    /// `sin(a t)`
    SinA { a: f64 },
    /// `t^α / (1 + t^β)`
    PowerRatio { alpha: f64, beta: f64 },
    /// `min(t^α, t^β)`
    MinPowers { alpha: f64, beta: f64 },
    /// `ln(1 + t)`
    Log1p,
    /// `exp(ln(1+t)^α) − 1`
    ExpLogPow { alpha: f64 },
    /// `exp(ln(1+t) / ln ln(shift + t)) − 1`
    ExpLogLog { shift: f64 },
    /// `λ t² / (1 + t)`
    AsymLinear { lambda: f64 },
    /// `λ t`
    Linear { lambda: f64 },
    /// Monotone cubic through samples with `g(0) = 0`, linear beyond the last knot.
    Tabulated { interp: Pchip, cumulative: Vec<f64> },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::SinA { .. } => "sin_a",
            Family::PowerRatio { .. } => "power_ratio_ab",
            Family::MinPowers { .. } => "min_powers_ab",
            Family::Log1p => "log1p",
            Family::ExpLogPow { .. } => "exp_logpow_a",
            Family::ExpLogLog { .. } => "exp_loglog",
            Family::AsymLinear { .. } => "asymlinear_lambda",
            Family::Linear { .. } => "linear_lambda",
            Family::Tabulated { .. } => "user_tabulated",
        }
    }

    pub fn tabulated(t: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if t.first() != Some(&0.0) || values.first() != Some(&0.0) {
            return Err(Error::InvalidParameter(
                "tabulated reaction must start at t = 0 with value 0".into(),
            ));
        }
        let interp = Pchip::new(t, values)?;
        let knots = interp.knots();
        let mut cumulative = vec![0.0; knots.len()];
        for k in 1..knots.len() {
            let seg = quad::integrate(|s| interp.eval(s), knots[k - 1], knots[k], REACTION_QUAD_TOL, 1e-300)?;
            cumulative[k] = cumulative[k - 1] + seg;
        }
        Ok(Family::Tabulated { interp, cumulative })
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match *self {
            Family::SinA { a } if !(a.is_finite() && a != 0.0) => bad(format!("sin_a needs a != 0, got {a}")),
            Family::PowerRatio { alpha, beta } | Family::MinPowers { alpha, beta }
                if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) =>
            {
                bad(format!("exponents must be positive, got alpha = {alpha}, beta = {beta}"))
            }
            Family::ExpLogPow { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                bad(format!("exp_logpow_a needs alpha > 0, got {alpha}"))
            }
            Family::ExpLogLog { shift } if !(shift > 1.0 && shift.is_finite()) => {
                bad(format!("exp_loglog needs shift > 1, got {shift}"))
            }
            Family::AsymLinear { lambda } | Family::Linear { lambda } if !lambda.is_finite() => {
                bad(format!("lambda must be finite, got {lambda}"))
            }
            _ => Ok(()),
        }
    }

    /// Certified `C` with `|g(t)| <= C t` for `t > 0`, when one is known in
    /// closed form.
    pub fn certificate(&self) -> Option<f64> {
        match *self {
            Family::SinA { a } => Some(a.abs()),
            Family::PowerRatio { alpha, beta } => {
                let q = alpha - 1.0;
                if q == 0.0 || q == beta {
                    Some(1.0)
                } else if q > 0.0 && q < beta {
                    // max of t^q / (1 + t^β) sits at t^β = q / (β − q)
                    let tb = q / (beta - q);
                    Some(tb.powf(q / beta) * (beta - q) / beta)
                } else {
                    None
                }
            }
            Family::MinPowers { alpha, beta } if alpha <= 1.0 && beta >= 1.0 => Some(1.0),
            Family::Log1p => Some(1.0),
            Family::AsymLinear { lambda } if lambda >= 0.0 => Some(lambda),
            Family::Linear { lambda } => Some(lambda.abs()),
            _ => None,
        }
    }

    /// `g(t)` for `t > 0`.
    fn g(&self, t: f64) -> f64 {
        match self {
            Family::SinA { a } => (a * t).sin(),
            Family::PowerRatio { alpha, beta } => t.powf(*alpha) / (1.0 + t.powf(*beta)),
            Family::MinPowers { alpha, beta } => t.powf(*alpha).min(t.powf(*beta)),
            Family::Log1p => t.ln_1p(),
            Family::ExpLogPow { alpha } => t.ln_1p().powf(*alpha).exp_m1(),
            Family::ExpLogLog { shift } => (t.ln_1p() / (shift + t).ln().ln()).exp_m1(),
            Family::AsymLinear { lambda } => lambda * t * t / (1.0 + t),
            Family::Linear { lambda } => lambda * t,
            Family::Tabulated { interp, .. } => {
                let (x_last, y_last, d_last) = interp.last();
                if t > x_last {
                    y_last + d_last * (t - x_last)
                } else {
                    interp.eval(t)
                }
            }
        }
    }

    /// `G(t) = ∫₀ᵗ g` for `t > 0`.
    fn big_g(&self, t: f64) -> Result<f64> {
        Ok(match self {
            Family::SinA { a } => {
                let s = (0.5 * a * t).sin();
                2.0 * s * s / a
            }
            Family::MinPowers { alpha, beta } if *alpha <= *beta => {
                if t <= 1.0 {
                    t.powf(beta + 1.0) / (beta + 1.0)
                } else {
                    1.0 / (beta + 1.0) + (t.powf(alpha + 1.0) - 1.0) / (alpha + 1.0)
                }
            }
            Family::Log1p => {
                if t < 1e-2 {
                    // Σ_{k>=2} (−t)^k / (k(k−1))
                    let mut sum = 0.0;
                    let mut pow = -t;
                    for k in 2..12 {
                        pow *= -t;
                        sum += pow / (k * (k - 1)) as f64;
                    }
                    sum
                } else {
                    (1.0 + t) * t.ln_1p() - t
                }
            }
            Family::AsymLinear { lambda } => {
                let core = if t < 1e-2 {
                    // Σ_{k>=3} (−1)^{k+1} t^k / k
                    let mut sum = 0.0;
                    let mut pow = t * t;
                    for k in 3..14 {
                        pow *= t;
                        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                        sum += sign * pow / k as f64;
                    }
                    sum
                } else {
                    0.5 * t * t - t + t.ln_1p()
                };
                lambda * core
            }
            Family::Linear { lambda } => 0.5 * lambda * t * t,
            Family::Tabulated { interp, cumulative } => {
                let knots = interp.knots();
                let (x_last, y_last, d_last) = interp.last();
                if t > x_last {
                    let dt = t - x_last;
                    cumulative[knots.len() - 1] + y_last * dt + 0.5 * d_last * dt * dt
                } else {
                    let k = interp.segment(t);
                    cumulative[k] + quad::integrate(|s| interp.eval(s), knots[k], t, REACTION_QUAD_TOL, 1e-300)?
                }
            }
            _ => quad::integrate(|s| self.g(s), 0.0, t, REACTION_QUAD_TOL, 1e-300)?,
        })
    }
}

/// Sampled limit estimates of `f(t)/t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimates {
    pub limsup_zero: f64,
    pub liminf_inf: f64,
    pub limsup_inf: f64,
    /// Log–log slope of `f` over the last sampled decade.
    pub p_growth: f64,
}

#[derive(Clone, Debug)]
pub struct Reaction {
    kind: ReactionKind,
    family: Family,
    nu: f64,
    c_lin: Option<f64>,
}

impl Reaction {
    pub fn new(kind: ReactionKind, family: Family) -> Result<Self> {
        family.validate()?;
        let c_lin = family.certificate();
        Ok(Self {
            kind,
            family,
            nu: 1.0,
            c_lin,
        })
    }

    pub fn sublinear(family: Family, nu: f64) -> Result<Self> {
        Self::new(ReactionKind::SublinearG, family)?.with_nu(nu)
    }

    pub fn linear_growth(family: Family) -> Result<Self> {
        Self::new(ReactionKind::LinearGrowthF, family)
    }

    pub fn pure_linear(lambda: f64) -> Result<Self> {
        Self::new(ReactionKind::PureLinear, Family::Linear { lambda })
    }

    /// The zero reaction.
    pub fn zero() -> Self {
        Self {
            kind: ReactionKind::PureLinear,
            family: Family::Linear { lambda: 0.0 },
            nu: 1.0,
            c_lin: Some(0.0),
        }
    }

    pub fn with_nu(mut self, nu: f64) -> Result<Self> {
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::InvalidParameter(format!("nu must be positive, got {nu}")));
        }
        self.nu = nu;
        Ok(self)
    }

    /// Overrides the certified constant for `g`. The caller vouches for it.
    pub fn with_c_lin(mut self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!("C_lin must be positive, got {c}")));
        }
        self.c_lin = Some(c);
        Ok(self)
    }

    pub fn kind(&self) -> ReactionKind {
        self.kind
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Certified constant for `g` (without ν).
    pub fn c_lin(&self) -> Option<f64> {
        self.c_lin
    }

    /// Certified linear bound for `f = νg`.
    pub fn f_linear_bound(&self) -> Option<f64> {
        self.c_lin.map(|c| c * self.nu)
    }

    pub fn describe(&self) -> serde_json::Value {
        let params = match &self.family {
            Family::SinA { a } => json!({ "a": a }),
            Family::PowerRatio { alpha, beta } | Family::MinPowers { alpha, beta } => {
                json!({ "alpha": alpha, "beta": beta })
            }
            Family::Log1p => json!({}),
            Family::ExpLogPow { alpha } => json!({ "alpha": alpha }),
            Family::ExpLogLog { shift } => json!({ "shift": shift }),
            Family::AsymLinear { lambda } | Family::Linear { lambda } => json!({ "lambda": lambda }),
            Family::Tabulated { interp, .. } => json!({ "knots": interp.knots().len() }),
        };
        json!({
            "kind": self.kind,
            "family": self.family.name(),
            "params": params,
            "nu": self.nu,
            "C_lin": self.c_lin,
        })
    }

    /// `f(t)`, zero for `t <= 0`.
    #[inline]
    pub fn eval_f(&self, t: f64) -> f64 {
        if t > 0.0 {
            self.nu * self.family.g(t)
        } else {
            0.0
        }
    }

    /// `F(t) = ∫₀ᵗ f`, zero for `t <= 0`.
    pub fn eval_big_f(&self, t: f64) -> Result<f64> {
        if t > 0.0 {
            Ok(self.nu * self.family.big_g(t)?)
        } else {
            Ok(0.0)
        }
    }

    pub fn growth_estimates(&self, sample: &SampleSpec) -> GrowthEstimates {
        let ts = sample.points();
        let ratios: Vec<f64> = ts.iter().map(|&t| self.eval_f(t) / t).collect();
        let (lo, hi) = (sample.t_min * 1e3, sample.t_max / 1e3);
        let limsup_zero = window_max(&ts, &ratios, sample.t_min, lo).map_or(f64::NAN, |p| p.1);
        let liminf_inf = window_min(&ts, &ratios, hi, sample.t_max).map_or(f64::NAN, |p| p.1);
        let limsup_inf = window_max(&ts, &ratios, hi, sample.t_max).map_or(f64::NAN, |p| p.1);
        let a = sample.t_max / 10.0;
        let (fa, fb) = (self.eval_f(a), self.eval_f(sample.t_max));
        let p_growth = if fa > 0.0 && fb > 0.0 {
            (fb / fa).log10()
        } else {
            f64::NAN
        };
        GrowthEstimates {
            limsup_zero,
            liminf_inf,
            limsup_inf,
            p_growth,
        }
    }

    /// Sampled audit of the sublinear hypotheses:
    /// `g1` ratio `|g(t)|/t` decays over the last three decades to below the
    /// sample tolerance; `g2` some `t₀ ∈ (0, 10³]` has `G(t₀) > 0`, the witness
    /// being the scan point maximizing `G(t)/t²`; `g3` the sampled sup of
    /// `|g(t)|/t` against the certified constant.
    pub fn audit_sublinear(&self, sample: &SampleSpec) -> HypothesisReport {
        let mut report = HypothesisReport::new(format!("reaction:{}", self.family.name()), sample.clone());
        let ts = sample.points();
        let ratios: Vec<f64> = ts.iter().map(|&t| (self.family.g(t) / t).abs()).collect();
        let nonfinite = ts.iter().zip(&ratios).find(|(_, r)| !r.is_finite()).map(|(t, _)| *t);

        let (ok, witness, margin) = decaying_tail(&ts, &ratios, sample);
        report.push(HypothesisCheck::from_flag("g1", ok && nonfinite.is_none(), witness.or(nonfinite), margin));

        report.push(self.g2_scan());

        let sup = ratios.iter().cloned().fold(0.0f64, |m, r| if r.is_finite() { m.max(r) } else { m });
        let check = if let Some(t) = nonfinite {
            HypothesisCheck::violated("g3", Some(t), None).with_note("g is not finite on the sample")
        } else {
            match self.c_lin {
                Some(c) => {
                    let ok = sup <= c * (1.0 + 1e-12);
                    let w = (!ok).then(|| argmax(&ts, &ratios));
                    HypothesisCheck::from_flag("g3", ok, w, Some(c - sup)).with_note(format!("certified C = {c}"))
                }
                None => {
                    // without a certificate, only blow-up near the origin is decisive
                    let first = ratios[0];
                    let near_one = ratios[ts.partition_point(|&t| t < 1.0).min(ts.len() - 1)];
                    let first_decade = window_min(&ts, &ratios, sample.t_min, sample.t_min * 10.0)
                        .map_or(first, |p| p.1);
                    let grows = first > 10.0 * near_one.max(f64::MIN_POSITIVE) && first_decade > ratios[ts.len() / 4];
                    let check = if grows {
                        HypothesisCheck::violated("g3", Some(ts[0]), None)
                            .with_note(format!("|g(t)|/t grows toward t = 0 (ratio {first:.3e} at the first sample)"))
                    } else {
                        HypothesisCheck::holds("g3", None)
                    };
                    check.with_note(format!("sampled sup |g|/t = {sup:.6e}; no certified constant"))
                }
            }
        };
        report.push(check);
        report
    }

    fn g2_scan(&self) -> HypothesisCheck {
        let scan = SampleSpec::uniform(0.0, 1e3, 10_001).points();
        let mut best: Option<(f64, f64)> = None;
        let mut failure = None;
        for &t in scan.iter().skip(1) {
            match self.family.big_g(t) {
                Ok(g) if g > 0.0 && g.is_finite() => {
                    let score = g / (t * t);
                    if best.is_none_or(|(_, s)| score > s) {
                        best = Some((t, score));
                    }
                }
                Ok(_) => {}
                Err(e) => {
                    failure.get_or_insert((t, e));
                }
            }
        }
        match (best, failure) {
            (Some((t, _)), None) => {
                let g = self.family.big_g(t).unwrap_or(f64::NAN);
                HypothesisCheck::holds("g2", Some(g)).with_note(format!("t0 = {t}"))
            }
            (_, Some((t, e))) => HypothesisCheck::violated("g2", Some(t), None).with_note(e.to_string()),
            (None, None) => HypothesisCheck::violated("g2", None, None).with_note("G <= 0 on (0, 1e3]"),
        }
    }

    /// The scan point `t₀` maximizing `G(t)/t²` with `G(t₀) > 0`.
    pub fn g2_witness(&self) -> Option<f64> {
        let check = self.g2_scan();
        if !check.verdict.holds() {
            return None;
        }
        check.note.strip_prefix("t0 = ").and_then(|s| s.parse().ok())
    }

    /// Sampled audit of the linear-growth hypotheses against `γ` and the first
    /// eigenvalue `λ₁`.
    pub fn audit_linear_growth(&self, gm: &GammaModel, lambda1: f64, sample: &SampleSpec) -> HypothesisReport {
        let mut report = HypothesisReport::new(format!("reaction:{}", self.family.name()), sample.clone());
        let ts = sample.points();
        let ratios: Vec<f64> = ts.iter().map(|&t| self.eval_f(t) / t).collect();
        let (head_hi, tail_lo) = (sample.t_min * 1e3, sample.t_max / 1e3);

        let bound1 = gm.gamma(0.0) + gm.gamma_min() * lambda1;
        let (t1, max0) = window_max(&ts, &ratios, sample.t_min, head_hi).unwrap_or((ts[0], f64::NAN));
        let ok1 = max0 < bound1;
        report.push(HypothesisCheck::from_flag("f1", ok1, (!ok1).then_some(t1), Some(bound1 - max0)));

        let sub: Vec<f64> = ts.iter().map(|&t| (self.eval_f(t) / t.powf(GROWTH_EXPONENT)).abs()).collect();
        let (ok2, w2, m2) = decaying_tail(&ts, &sub, sample);
        report.push(
            HypothesisCheck::from_flag("f2", ok2, w2, m2).with_note(format!("exponent p = {GROWTH_EXPONENT}")),
        );

        let (t3, min_inf) = window_min(&ts, &ratios, tail_lo, sample.t_max).unwrap_or((sample.t_max, f64::NAN));
        match gm.gamma_inf() {
            Some(ginf) => {
                let bound3 = ginf * (1.0 + lambda1);
                let ok3 = min_inf > bound3;
                report.push(HypothesisCheck::from_flag("f3", ok3, (!ok3).then_some(t3), Some(min_inf - bound3)));
            }
            None => report.push(HypothesisCheck::violated("f3", None, None).with_note("γ has no declared limit")),
        }

        let (t4, max_inf) = window_max(&ts, &ratios, tail_lo, sample.t_max).unwrap_or((sample.t_max, f64::NAN));
        let variation = (max_inf - min_inf) / max_inf.abs().max(f64::MIN_POSITIVE);
        let ok4 = max_inf.is_finite() && variation < 0.01;
        report.push(
            HypothesisCheck::from_flag("f4", ok4, (!ok4).then_some(t4), Some(0.01 - variation))
                .with_note(format!("ratio range over the last three decades [{min_inf:.6e}, {max_inf:.6e}]")),
        );
        report
    }

    /// `ν₀ = γ_min / C`: below it only the trivial solution exists.
    pub fn nonexistence_threshold(&self, gm: &GammaModel) -> Result<f64> {
        if self.kind != ReactionKind::SublinearG {
            return Err(Error::Precondition("the threshold applies to sublinear reactions f = νg".into()));
        }
        match self.c_lin {
            Some(c) if c > 0.0 => Ok(gm.gamma_min() / c),
            _ => Err(Error::MissingCertificate(format!(
                "family `{}` has no certified constant C with |g(t)| <= C|t|; supply C_lin in the reaction block \
                 (a sampled supremum is not a certificate)",
                self.family.name()
            ))),
        }
    }

    /// Splits `f = f₁ − f₂` with `f₁ = max(f, 0)`. Negative intervals are
    /// located on the sample and refined by bisection.
    pub fn split(&self, sample: &SampleSpec) -> Result<ReactionSplit> {
        let mut ts = vec![0.0];
        ts.extend(sample.points());
        let fs: Vec<f64> = ts.iter().map(|&t| self.eval_f(t)).collect();
        if fs.iter().all(|&v| v <= 0.0) {
            return Err(Error::Structural(
                "f is nowhere positive on the sample, so the μ-family degenerates (B ≡ 0)".into(),
            ));
        }
        let last_decade = sample.t_max / 10.0;
        if let Some(k) = (0..ts.len()).rev().find(|&k| fs[k] < 0.0) {
            if ts[k] >= last_decade {
                return Err(Error::Structural(format!(
                    "f2 = max(-f, 0) does not appear compactly supported: f({:.6e}) = {:.6e} < 0",
                    ts[k], fs[k]
                )));
            }
        }
        let mut intervals = Vec::new();
        let mut start: Option<f64> = None;
        for k in 1..ts.len() {
            let (prev, cur) = (fs[k - 1], fs[k]);
            if start.is_none() && cur < 0.0 {
                start = Some(if prev >= 0.0 && k > 1 {
                    self.crossing(ts[k - 1], ts[k])
                } else {
                    ts[k - 1]
                });
            } else if let Some(a) = start {
                if cur >= 0.0 {
                    intervals.push((a, self.crossing(ts[k - 1], ts[k])));
                    start = None;
                }
            }
        }
        let mut split = ReactionSplit {
            reaction: self.clone(),
            intervals,
            k_bound: 0.0,
        };
        let mut min_f2 = 0.0f64;
        for &t in &ts {
            min_f2 = min_f2.min(split.big_f2(t)?);
        }
        split.k_bound = 1.1 * (-min_f2).max(0.0);
        Ok(split)
    }

    /// Sign change of `f` in `[a, b]` by bisection.
    fn crossing(&self, mut a: f64, mut b: f64) -> f64 {
        let fa_neg = self.eval_f(a) < 0.0;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if (self.eval_f(m) < 0.0) == fa_neg {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}

/// `f = f₁ − f₂` with `f₁, f₂ >= 0` and `f₂` compactly supported.
#[derive(Clone, Debug)]
pub struct ReactionSplit {
    reaction: Reaction,
    intervals: Vec<(f64, f64)>,
    k_bound: f64,
}

impl ReactionSplit {
    pub fn reaction(&self) -> &Reaction {
        &self.reaction
    }

    /// Intervals where `f < 0`.
    pub fn negative_intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// `f₂(t) = 0` for `t >= T₂`.
    pub fn support_end(&self) -> f64 {
        self.intervals.last().map_or(0.0, |iv| iv.1)
    }

    pub fn k_bound(&self) -> f64 {
        self.k_bound
    }

    pub fn f1(&self, t: f64) -> f64 {
        self.reaction.eval_f(t).max(0.0)
    }

    pub fn f2(&self, t: f64) -> f64 {
        (-self.reaction.eval_f(t)).max(0.0)
    }

    pub fn big_f2(&self, t: f64) -> Result<f64> {
        let mut acc = 0.0;
        for &(a, b) in &self.intervals {
            if t <= a {
                break;
            }
            let hi = b.min(t);
            acc -= self.reaction.eval_big_f(hi)? - self.reaction.eval_big_f(a)?;
        }
        Ok(acc)
    }

    pub fn big_f1(&self, t: f64) -> Result<f64> {
        Ok(self.reaction.eval_big_f(t)? + self.big_f2(t)?)
    }
}

fn argmax(ts: &[f64], vals: &[f64]) -> f64 {
    ts.iter()
        .zip(vals)
        .filter(|(_, v)| v.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or(ts[0], |p| *p.0)
}

/// Decay test over the last three decades of the sample: per-decade maxima
/// must decrease and the final one must be below `sample.tol`. Returns
/// `(ok, witness, margin)`.
fn decaying_tail(ts: &[f64], vals: &[f64], sample: &SampleSpec) -> (bool, Option<f64>, Option<f64>) {
    let mut env = Vec::with_capacity(3);
    for k in (0..3).rev() {
        let hi = sample.t_max / 10f64.powi(k);
        let lo = hi / 10.0;
        if let Some(p) = window_max(ts, vals, lo, hi) {
            env.push(p);
        }
    }
    let Some(&(t_last, last)) = env.last() else {
        return (false, None, None);
    };
    let decreasing = env.windows(2).all(|w| w[1].1 < w[0].1 || w[1].1 == 0.0);
    let ok = decreasing && last <= sample.tol;
    (ok, (!ok).then_some(t_last), Some(sample.tol - last))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, LN_2, PI};

    fn sub(f: Family, nu: f64) -> Reaction {
        Reaction::sublinear(f, nu).unwrap()
    }

    #[test]
    fn eval_f_examples() {
        assert!((sub(Family::Log1p, 2.0).eval_f(E - 1.0) - 2.0).abs() < 1e-15);
        assert!(sub(Family::SinA { a: 1.0 }, 1.0).eval_f(PI).abs() < 1e-15);
        let asym = Reaction::linear_growth(Family::AsymLinear { lambda: 5.0 }).unwrap();
        assert_eq!(asym.eval_f(1.0), 2.5);
        assert_eq!(asym.eval_f(-3.0), 0.0);
    }

    #[test]
    fn primitives_match_quadrature() {
        let fams = vec![
            Family::SinA { a: 2.0 },
            Family::PowerRatio { alpha: 1.5, beta: 2.0 },
            Family::MinPowers { alpha: 0.5, beta: 2.0 },
            Family::Log1p,
            Family::ExpLogPow { alpha: 0.5 },
            Family::ExpLogLog { shift: 3.0 },
            Family::AsymLinear { lambda: 5.0 },
            Family::Linear { lambda: 3.0 },
        ];
        for f in fams {
            let r = sub(f, 1.5);
            for t in [1e-5, 3e-3, 0.5, 1.0, 2.7, 40.0] {
                let q = quad::integrate(|s| r.eval_f(s), 0.0, t, 1e-13, 0.0).unwrap();
                let v = r.eval_big_f(t).unwrap();
                assert!((v - q).abs() <= 1e-9 * q.abs().max(1e-300) + 1e-300, "{} t={t}: {v} vs {q}", r.family().name());
            }
            assert_eq!(r.eval_big_f(0.0).unwrap(), 0.0);
        }
        let lin = Reaction::pure_linear(3.0).unwrap();
        assert_eq!(lin.eval_big_f(2.0).unwrap(), 6.0);
        let l = sub(Family::Log1p, 1.0);
        assert!((l.eval_big_f(1.0).unwrap() - (2.0 * LN_2 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn certificates() {
        assert_eq!(Family::Log1p.certificate(), Some(1.0));
        assert_eq!(Family::SinA { a: -2.0 }.certificate(), Some(2.0));
        assert_eq!(Family::PowerRatio { alpha: 1.0, beta: 3.0 }.certificate(), Some(1.0));
        assert_eq!(Family::PowerRatio { alpha: 0.5, beta: 3.0 }.certificate(), None);
        let c = Family::PowerRatio { alpha: 2.0, beta: 2.0 }.certificate().unwrap();
        // max of t/(1+t²) is 1/2 at t = 1
        assert!((c - 0.5).abs() < 1e-15);
        assert_eq!(Family::ExpLogPow { alpha: 0.5 }.certificate(), None);
    }

    #[test]
    fn sublinear_audits() {
        let s = SampleSpec::default();
        let log = sub(Family::Log1p, 1.0).audit_sublinear(&s);
        assert!(log.all_hold(), "{log:?}");
        let g3 = log.get("g3").unwrap();
        assert!(g3.margin.unwrap() >= 0.0);

        let sin = sub(Family::SinA { a: 2.0 }, 1.0).audit_sublinear(&s);
        assert!(sin.all_hold(), "{sin:?}");

        let lin = sub(Family::Linear { lambda: 1.0 }, 1.0).audit_sublinear(&s);
        let g1 = lin.get("g1").unwrap();
        assert!(!g1.verdict.holds());
        assert!((g1.margin.unwrap() - (s.tol - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn example_families_that_hold() {
        let s = SampleSpec::default();
        let families = [
            Family::SinA { a: 3.0 },
            Family::PowerRatio { alpha: 1.0, beta: 1.0 },
            Family::PowerRatio { alpha: 1.5, beta: 2.0 },
            Family::MinPowers { alpha: 0.5, beta: 2.0 },
            Family::Log1p,
            Family::ExpLogLog { shift: 3.0 },
        ];
        for f in families {
            let r = sub(f, 1.0);
            let rep = r.audit_sublinear(&s);
            assert!(rep.all_hold(), "{}: {rep:?}", r.family().name());
        }
    }

    #[test]
    fn example_families_that_fail_near_zero() {
        let s = SampleSpec::default();
        let rep = sub(Family::ExpLogPow { alpha: 0.5 }, 1.0).audit_sublinear(&s);
        assert!(rep.holds("g1"));
        assert!(!rep.holds("g3"));
        let rep = sub(Family::ExpLogLog { shift: 2.0 }, 1.0).audit_sublinear(&s);
        assert!(!rep.all_hold());
    }

    #[test]
    fn g2_witness_has_positive_primitive() {
        for f in [Family::Log1p, Family::SinA { a: 2.0 }] {
            let r = sub(f, 1.0);
            let t0 = r.g2_witness().unwrap();
            assert!(r.eval_big_f(t0).unwrap() > 0.0);
        }
    }

    #[test]
    fn linear_growth_audits() {
        let lambda1 = PI * PI;
        let s = SampleSpec::default();
        let g1 = GammaModel::constant(1.0).unwrap();
        let asym = Reaction::linear_growth(Family::AsymLinear { lambda: 2.0 * (1.0 + lambda1) }).unwrap();
        let rep = asym.audit_linear_growth(&g1, lambda1, &s);
        assert!(rep.all_hold(), "{rep:?}");
        let m3 = rep.get("f3").unwrap().margin.unwrap();
        assert!((m3 - (1.0 + lambda1)).abs() < 1e-3 * (1.0 + lambda1));

        let lin = Reaction::linear_growth(Family::Linear { lambda: 0.5 * (1.0 + lambda1) }).unwrap();
        let rep = lin.audit_linear_growth(&g1, lambda1, &s);
        assert!(rep.holds("f1"));
        assert!(!rep.holds("f3"));

        let sq = Reaction::linear_growth(Family::MinPowers { alpha: 2.0, beta: 2.0 }).unwrap();
        let rep = sq.audit_linear_growth(&g1, lambda1, &s);
        assert!(!rep.holds("f4"));
    }

    #[test]
    fn thresholds() {
        let c1 = GammaModel::constant(1.0).unwrap();
        let dp = GammaModel::double_phase(1.0, 1.0, 1.5).unwrap();
        assert_eq!(sub(Family::Log1p, 1.0).nonexistence_threshold(&c1).unwrap(), 1.0);
        assert_eq!(sub(Family::SinA { a: 2.0 }, 1.0).nonexistence_threshold(&c1).unwrap(), 0.5);
        assert_eq!(sub(Family::Log1p, 3.0).nonexistence_threshold(&dp).unwrap(), 1.0);
        let r = sub(Family::ExpLogPow { alpha: 0.5 }, 1.0);
        assert!(matches!(r.nonexistence_threshold(&c1), Err(Error::MissingCertificate(_))));
        let r = r.with_c_lin(4.0).unwrap();
        assert_eq!(r.nonexistence_threshold(&c1).unwrap(), 0.25);
    }

    #[test]
    fn split_of_nonnegative_reactions() {
        let s = SampleSpec::default();
        for f in [Family::Linear { lambda: 2.0 }, Family::AsymLinear { lambda: 5.0 }] {
            let sp = Reaction::linear_growth(f).unwrap().split(&s).unwrap();
            assert!(sp.negative_intervals().is_empty());
            assert_eq!(sp.k_bound(), 0.0);
            assert_eq!(sp.f2(3.0), 0.0);
        }
    }

    #[test]
    fn split_with_negative_dip() {
        let ts: Vec<f64> = (0..=2000).map(|k| k as f64 * 0.005).collect();
        let vals: Vec<f64> = ts.iter().map(|&t| 5.0 * t * t / (1.0 + t) - t.sin()).collect();
        let r = Reaction::linear_growth(Family::tabulated(ts, vals).unwrap()).unwrap();
        let sp = r.split(&SampleSpec::default()).unwrap();
        assert_eq!(sp.negative_intervals().len(), 1);
        let (a, b) = sp.negative_intervals()[0];
        assert_eq!(a, 0.0);
        // 5t²/(1+t) = sin t crosses near t ≈ 0.2
        assert!((b - 0.2).abs() < 0.05, "b = {b}");
        for t in [0.01, 0.1, 0.3, 1.0, 20.0] {
            assert_eq!(sp.f1(t) - sp.f2(t), r.eval_f(t));
            assert!(sp.big_f1(t).unwrap() >= -1e-15);
            assert!(sp.big_f2(t).unwrap() >= -sp.k_bound());
        }
        assert!(sp.big_f2(1.0).unwrap() > 0.0);
    }

    #[test]
    fn split_rejects_unbounded_negative_part() {
        let r = Reaction::linear_growth(Family::Linear { lambda: -1.0 }).unwrap();
        assert!(matches!(r.split(&SampleSpec::default()), Err(Error::Structural(_))));
        let r = Reaction::linear_growth(Family::SinA { a: 1.0 }).unwrap();
        assert!(matches!(r.split(&SampleSpec::default()), Err(Error::Structural(_))));
    }
}
