//! Gamma, Pochhammer symbols and the Mittag-Leffler family for real arguments.
//!
//! All Mittag-Leffler variants are evaluated from their power series,
//!
//! ```text
//! E_{α,β}(z)       = Σ z^k / Γ(αk+β)
//! E^γ_{α,β}(z)     = Σ (γ)_k z^k / (Γ(αk+β) k!)
//! E^{γ,q}_{α,β}(z) = Σ (γ)_{qk} z^k / (Γ(αk+β) k!)
//! ```
//!
//! with compensated summation in double precision. When the running error
//! bound shows that cancellation between large alternating terms has eaten
//! the result, the same series is re-summed in multiprecision arithmetic, up
//! to [`SeriesPolicy::max_precision_bits`].

mod gamma;
mod kahan;
mod mittag_leffler;
mod multiprec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use gamma::{
    gamma, generalized_pochhammer, is_gamma_pole, ln_gamma, ln_gamma_signed, pochhammer,
    reciprocal_gamma, GAMMA_MAX_ARG,
};
pub use kahan::CompensatedSum;
pub use mittag_leffler::{ml_one, ml_prabhakar, ml_shukla, ml_two};

/// Truncation and guard settings for series evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPolicy {
    /// Stop once two consecutive terms fall below `rel_tol·|sum| + abs_tol`.
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_terms: usize,
    /// Arguments with |z| above this are rejected.
    pub max_abs_arg: f64,
    /// Largest working precision (bits) the cancellation fallback may use.
    /// Values of 53 or less disable the fallback.
    pub max_precision_bits: u32,
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        Self {
            rel_tol: 1e-15,
            abs_tol: 1e-300,
            max_terms: 10_000,
            max_abs_arg: 100.0,
            max_precision_bits: 2048,
        }
    }
}

impl SeriesPolicy {
    /// Double precision only: cancellation that cannot be resolved in f64 is
    /// reported as [`Error::PrecisionLoss`].
    pub fn double_only() -> Self {
        Self {
            max_precision_bits: 53,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::Config("series tolerances must be positive".into()));
        }
        if self.max_terms < 1 {
            return Err(Error::Config("max_terms must be at least 1".into()));
        }
        if !(self.max_abs_arg > 0.0) {
            return Err(Error::Config("max_abs_arg must be positive".into()));
        }
        Ok(())
    }
}

/// Parameters (α, β) of the two-parameter function E_{α,β}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MLTwoParams {
    pub alpha: f64,
    pub beta: f64,
}

impl MLTwoParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha_beta(self.alpha, self.beta)
    }
}

/// Parameters (α, β, γ) of the three-parameter (Prabhakar) function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrabhakarParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl PrabhakarParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let p = Self { alpha, beta, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha_beta(self.alpha, self.beta)?;
        if !self.gamma.is_finite() || self.gamma == 0.0 {
            return Err(Error::Domain(format!(
                "gamma must be finite and non-zero, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Parameters (α, β, γ, q) of the four-parameter function with the
/// generalized Pochhammer weight (γ)_{qk}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShuklaParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub q: f64,
}

impl ShuklaParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, q: f64) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            gamma,
            q,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha_beta(self.alpha, self.beta)?;
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::Domain(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        let q = self.q;
        let admissible = (q > 0.0 && q < 1.0) || (q >= 1.0 && q == q.floor() && q.is_finite());
        if !admissible {
            return Err(Error::Domain(format!(
                "q must lie in (0,1) or be a positive integer, got {q}"
            )));
        }
        Ok(())
    }
}

fn check_alpha_beta(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}
