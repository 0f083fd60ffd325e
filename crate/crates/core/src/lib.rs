//! Finite-difference variational solver for quasilinear elliptic problems
//!
//! `−div[γ(s)∇u] + γ(s)u = f(u₊) + h`, `s = (u² + |∇u|²)/2`, `u = 0` on ∂Ω,
//!
//! on intervals and rectangles: energy minimization, mountain-pass saddles,
//! continuation in the μ-family, and sampled audits of the structural
//! hypotheses on γ and f.

pub mod error;
pub mod functional;
pub mod gamma;
pub mod grid;
pub mod interp;
pub mod linalg;
pub mod oracle;
pub mod quad;
pub mod reaction;
pub mod sample;
pub mod solver;

pub use error::{Error, Result};
pub use functional::{EnergyConfig, EnergyReport};
pub use gamma::{GammaKind, GammaModel};
pub use grid::{DomainSpec, EigenPair, Field, Grid};
pub use reaction::{Family, Reaction, ReactionKind, ReactionSplit};
pub use sample::{HypothesisCheck, HypothesisReport, SampleSpec, Verdict};
