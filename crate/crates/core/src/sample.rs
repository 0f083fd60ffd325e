//! Sample grids and sample-based hypothesis verdicts.
//!
//! Every hypothesis about γ or f is a statement over all of `[0, ∞)`; the
//! audits here can only falsify on a finite grid, so each report carries the
//! grid it was computed on together with the witness of any violation.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub n: usize,
    /// Log-spaced when true, uniform otherwise.
    pub log: bool,
    /// Tolerance used by limit-style checks.
    pub tol: f64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self::log(1e-8, 1e8, 10_000)
    }
}

impl SampleSpec {
    pub fn log(t_min: f64, t_max: f64, n: usize) -> Self {
        Self {
            t_min,
            t_max,
            n,
            log: true,
            tol: 1e-2,
        }
    }

    pub fn uniform(t_min: f64, t_max: f64, n: usize) -> Self {
        Self {
            t_min,
            t_max,
            n,
            log: false,
            tol: 1e-2,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn points(&self) -> Vec<f64> {
        let n = self.n.max(2);
        if self.log {
            let (l0, l1) = (self.t_min.ln(), self.t_max.ln());
            (0..n)
                .map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp())
                .collect()
        } else {
            (0..n)
                .map(|i| self.t_min + (self.t_max - self.t_min) * i as f64 / (n - 1) as f64)
                .collect()
        }
    }
}

/// Evenly log-spaced values including both ends.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    SampleSpec::log(lo, hi, n).points()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "holds-on-sample")]
    HoldsOnSample,
    #[serde(rename = "violated-at-t")]
    ViolatedAt,
}

impl Verdict {
    pub fn holds(self) -> bool {
        self == Verdict::HoldsOnSample
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub hypothesis: String,
    pub verdict: Verdict,
    pub witness_t: Option<f64>,
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub note: String,
}

impl HypothesisCheck {
    pub fn holds(hypothesis: &str, margin: Option<f64>) -> Self {
        Self {
            hypothesis: hypothesis.to_string(),
            verdict: Verdict::HoldsOnSample,
            witness_t: None,
            margin,
            note: String::new(),
        }
    }

    pub fn violated(hypothesis: &str, witness_t: Option<f64>, margin: Option<f64>) -> Self {
        Self {
            hypothesis: hypothesis.to_string(),
            verdict: Verdict::ViolatedAt,
            witness_t,
            margin,
            note: String::new(),
        }
    }

    pub fn from_flag(hypothesis: &str, ok: bool, witness_t: Option<f64>, margin: Option<f64>) -> Self {
        if ok {
            Self {
                witness_t,
                ..Self::holds(hypothesis, margin)
            }
        } else {
            Self::violated(hypothesis, witness_t, margin)
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub subject: String,
    pub sample: SampleSpec,
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    pub fn new(subject: impl Into<String>, sample: SampleSpec) -> Self {
        Self {
            subject: subject.into(),
            sample,
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: HypothesisCheck) {
        self.checks.push(check);
    }

    pub fn get(&self, hypothesis: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.hypothesis == hypothesis)
    }

    pub fn holds(&self, hypothesis: &str) -> bool {
        self.get(hypothesis).is_some_and(|c| c.verdict.holds())
    }

    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.verdict.holds())
    }

    pub fn failures(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| !c.verdict.holds())
    }

    pub fn merge(&mut self, other: HypothesisReport) {
        self.checks.extend(other.checks);
    }
}

/// Maximum of `values` over points with `lo <= t < hi`.
pub(crate) fn window_max(ts: &[f64], values: &[f64], lo: f64, hi: f64) -> Option<(f64, f64)> {
    ts.iter()
        .zip(values)
        .filter(|(t, v)| **t >= lo && **t <= hi && v.is_finite())
        .map(|(t, v)| (*t, *v))
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

pub(crate) fn window_min(ts: &[f64], values: &[f64], lo: f64, hi: f64) -> Option<(f64, f64)> {
    ts.iter()
        .zip(values)
        .filter(|(t, v)| **t >= lo && **t <= hi && v.is_finite())
        .map(|(t, v)| (*t, *v))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_points_hit_both_ends() {
        let p = SampleSpec::log(1e-2, 1e2, 5).points();
        assert_eq!(p.len(), 5);
        assert!((p[0] - 1e-2).abs() < 1e-16);
        assert!((p[2] - 1.0).abs() < 1e-14);
        assert!((p[4] - 1e2).abs() < 1e-11);
    }

    #[test]
    fn verdict_serializes_with_report_names() {
        let c = HypothesisCheck::violated("q4", Some(2.0), Some(-1.0));
        let js = serde_json::to_value(&c).unwrap();
        assert_eq!(js["verdict"], "violated-at-t");
        assert_eq!(js["witness_t"], 2.0);
        assert!(js.get("note").is_none());
    }
}
