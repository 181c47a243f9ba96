//! Resonance parameters (ε, δ, τ) and the level schedules δ_s, C_s, D_s.
//!
//! Validity requires τ > d−1 together with
//!
//! ```text
//! δ + d(d+τ+1)ε < 1,     ε(τ+1) ≤ δ,
//! ```
//!
//! and the level exponents follow δ_0 = δ, δ_{s+1} = δ_s + (d+τ+1)ε.
//! The threshold schedules start at C_0 = D_0 = 1; the higher constants are
//! free parameters that the geometry verifier may escalate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceParams {
    pub dim: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub tau: f64,
    /// C_0 .. C_{d-1}; C_0 = 1.
    pub c_schedule: Vec<f64>,
    /// D_0 .. D_{d-1}; D_0 = 1.
    pub d_schedule: Vec<f64>,
}

impl ResonanceParams {
    /// Default schedules C_s = D_s = 2^s.
    pub fn new(dim: usize, epsilon: f64, delta: f64, tau: f64) -> Result<Self> {
        let schedule: Vec<f64> = (0..dim.max(1)).map(|s| (1u64 << s) as f64).collect();
        let p = ResonanceParams {
            dim,
            epsilon,
            delta,
            tau,
            c_schedule: schedule.clone(),
            d_schedule: schedule,
        };
        p.validate()?;
        Ok(p)
    }

    /// Defaults per dimension. The d=2 set is the reference choice
    /// (ε=0.05, δ=0.5, τ=1.1). The d=1 set places the range cutoff's
    /// transition across desk-scale boxes, which makes the per-step
    /// remainder gain ⟨ξ+κ⟩^{-2δ} sharp there (each step multiplies the
    /// out-of-range leftover by 1−χ̃ ≈ ⟨ξ+κ⟩^{-2δ} on ‖ξ‖ ∈ [8, 40]).
    pub fn defaults(dim: usize) -> Result<Self> {
        match dim {
            1 => ResonanceParams::new(1, 0.12, 0.5, 0.1),
            2 => ResonanceParams::new(2, 0.05, 0.5, 1.1),
            3 => ResonanceParams::new(3, 0.027, 0.5, 2.1),
            _ => Err(Error::InvalidParams(format!(
                "no default parameter set for dimension {dim}"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim as f64;
        if self.dim == 0 {
            return Err(Error::InvalidParams("dimension must be positive".into()));
        }
        if !(self.epsilon > 0.0 && self.delta > 0.0) {
            return Err(Error::InvalidParams(
                "epsilon and delta must be positive".into(),
            ));
        }
        if self.tau <= d - 1.0 {
            return Err(Error::InvalidParams(format!(
                "tau = {} must exceed d-1 = {}",
                self.tau,
                d - 1.0
            )));
        }
        let lhs = self.delta + d * (d + self.tau + 1.0) * self.epsilon;
        if lhs >= 1.0 {
            return Err(Error::InvalidParams(format!(
                "delta + d(d+tau+1)epsilon = {lhs:.4} must be < 1"
            )));
        }
        if self.epsilon * (self.tau + 1.0) > self.delta {
            return Err(Error::InvalidParams(format!(
                "epsilon(tau+1) = {:.4} must be <= delta = {}",
                self.epsilon * (self.tau + 1.0),
                self.delta
            )));
        }
        if self.c_schedule.len() < self.dim || self.d_schedule.len() < self.dim {
            return Err(Error::InvalidParams(
                "schedules must have at least d entries".into(),
            ));
        }
        if (self.c_schedule[0] - 1.0).abs() > 1e-12 || (self.d_schedule[0] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams("C_0 and D_0 must equal 1".into()));
        }
        for w in self.c_schedule.windows(2).chain(self.d_schedule.windows(2)) {
            if w[1] < w[0] {
                return Err(Error::InvalidParams(
                    "schedules must be nondecreasing".into(),
                ));
            }
        }
        Ok(())
    }

    /// δ_s = δ + s(d+τ+1)ε.
    pub fn delta_level(&self, s: usize) -> f64 {
        self.delta + s as f64 * (self.dim as f64 + self.tau + 1.0) * self.epsilon
    }

    pub fn c_level(&self, s: usize) -> f64 {
        self.c_schedule[s.min(self.c_schedule.len() - 1)]
    }

    pub fn d_level(&self, s: usize) -> f64 {
        self.d_schedule[s.min(self.d_schedule.len() - 1)]
    }

    /// Doubled schedules above level 0, used when the geometry verifier
    /// detects an overlap.
    pub fn escalated(&self) -> Self {
        let mut p = self.clone();
        for s in 1..p.c_schedule.len() {
            p.c_schedule[s] *= 2.0;
        }
        for s in 1..p.d_schedule.len() {
            p.d_schedule[s] *= 2.0;
        }
        p
    }

    /// Same exponents transplanted to a lower dimension (for reduced
    /// operators). Fails when the constraints do not hold there.
    pub fn for_dimension(&self, dim: usize) -> Result<Self> {
        let mut p = self.clone();
        p.dim = dim;
        p.validate().map_err(|e| {
            Error::ParamsInvalidForSublattice(format!("dimension {dim}: {e}"))
        })?;
        Ok(p)
    }
}
