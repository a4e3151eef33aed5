//! Closed-form bit-error chain for the voltage-only detector.
//!
//! Everything is normalised to the smallest voltage level, so only
//! `(α, β, κ, N)` matter. The Gaussian form approximates the variance
//! estimator `σ̂² ~ σ²·χ²_N/N` by `N(σ², 2σ⁴/N)`; the `exact_*` functions use
//! the chi-square law instead and serve as an oracle for that approximation.

mod special;

pub use special::{gamma_p, gamma_q, ln_gamma};

use serde::{Deserialize, Serialize};

use crate::protocol::check_ordering;
use crate::{Error, Result};

/// Gaussian upper tail `P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticInputs {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub n: usize,
}

impl AnalyticInputs {
    pub fn new(alpha: f64, beta: f64, kappa: f64, n: usize) -> Result<Self> {
        let inputs = Self { alpha, beta, kappa, n };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 1.0) {
            return Err(Error::domain(format!("alpha must be > 1, got {}", self.alpha)));
        }
        if self.n == 0 {
            return Err(Error::domain("N must be at least 1"));
        }
        check_ordering(self.alpha, self.beta, self.kappa)
    }

    /// `2α/(1+α)`.
    pub fn m(&self) -> f64 {
        2.0 * self.alpha / (1.0 + self.alpha)
    }

    /// `√(2/N)`: relative standard deviation of the estimator.
    pub fn s(&self) -> f64 {
        (2.0 / self.n as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BepBreakdown {
    pub p: [f64; 8],
    pub p_mm: f64,
    pub p_bm: f64,
    pub p_b: f64,
}

impl BepBreakdown {
    fn from_p(p: [f64; 8]) -> Self {
        let p_mm = 0.5 * (p[0] + p[1] + p[4] + p[5]);
        let p_bm = 0.25 * (p[0] + p[1] + p[4] + p[5]);
        Self {
            p,
            p_mm,
            p_bm,
            p_b: p_mm + (1.0 - p_mm) * p_bm,
        }
    }
}

/// Expand the four distinct tails into `p₁…p₈` using the pair identities.
fn expand(p1: f64, p2: f64, p5: f64, p6: f64) -> [f64; 8] {
    [p1, p2, p2, p1, p5, p6, p6, p5]
}

/// Unchecked formula; callers validate first. Exposed to the crate for
/// boundary tests on the formula itself.
pub(crate) fn p_values_raw(alpha: f64, beta: f64, kappa: f64, n: usize) -> [f64; 8] {
    let m = 2.0 * alpha / (1.0 + alpha);
    let s = (2.0 / n as f64).sqrt();
    expand(
        q_function((beta - 1.0) / s),
        q_function((kappa - m) / (m * s)),
        q_function((m - beta) / (m * s)),
        q_function((alpha - kappa) / (alpha * s)),
    )
}

/// `p₁…p₈` under the Gaussian approximation.
pub fn p_values(inputs: &AnalyticInputs) -> Result<[f64; 8]> {
    inputs.validate()?;
    Ok(p_values_raw(inputs.alpha, inputs.beta, inputs.kappa, inputs.n))
}

pub fn bep_breakdown(inputs: &AnalyticInputs) -> Result<BepBreakdown> {
    Ok(BepBreakdown::from_p(p_values(inputs)?))
}

/// Probability that a matched exchange leaves the parties mismatched.
pub fn mismatch_probability(inputs: &AnalyticInputs) -> Result<f64> {
    Ok(bep_breakdown(inputs)?.p_mm)
}

/// Bit error probability of an exchange made in matched states.
pub fn match_bep(inputs: &AnalyticInputs) -> Result<f64> {
    Ok(bep_breakdown(inputs)?.p_bm)
}

/// Total bit error probability `P_mm + (1 − P_mm)·P_bm`.
pub fn total_bep(inputs: &AnalyticInputs) -> Result<f64> {
    Ok(bep_breakdown(inputs)?.p_b)
}

/// `3·P_bm − 2·P_bm²`, the same quantity with `P_mm = 2·P_bm` substituted.
pub fn total_bep_closed(p_bm: f64) -> f64 {
    3.0 * p_bm - 2.0 * p_bm * p_bm
}

/// `P(σ̂² > γ)` when `σ̂²` is the mean of `N` squared `N(0, σ²)` samples.
pub fn exact_tail_probability(gamma: f64, sigma2: f64, n: usize) -> Result<f64> {
    check_tail_args(gamma, sigma2, n)?;
    let k = n as f64;
    Ok(gamma_q(k / 2.0, k * gamma / (2.0 * sigma2)))
}

/// `P(σ̂² < γ)`, computed directly rather than as `1 − tail`.
pub fn exact_lower_probability(gamma: f64, sigma2: f64, n: usize) -> Result<f64> {
    check_tail_args(gamma, sigma2, n)?;
    let k = n as f64;
    Ok(gamma_p(k / 2.0, k * gamma / (2.0 * sigma2)))
}

fn check_tail_args(gamma: f64, sigma2: f64, n: usize) -> Result<()> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::domain(format!("gamma must be finite and >= 0, got {gamma}")));
    }
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::domain(format!("sigma2 must be finite and > 0, got {sigma2}")));
    }
    if n == 0 {
        return Err(Error::domain("N must be at least 1"));
    }
    Ok(())
}

/// `p₁…p₈` under the exact chi-square law of the estimator.
pub fn exact_p_values(inputs: &AnalyticInputs) -> Result<[f64; 8]> {
    inputs.validate()?;
    let AnalyticInputs { alpha, beta, kappa, n } = *inputs;
    let m = inputs.m();
    Ok(expand(
        exact_tail_probability(beta, 1.0, n)?,
        exact_tail_probability(kappa, m, n)?,
        exact_lower_probability(beta, m, n)?,
        exact_lower_probability(kappa, alpha, n)?,
    ))
}

/// The same chain as [`bep_breakdown`] with exact tails.
pub fn exact_bep_breakdown(inputs: &AnalyticInputs) -> Result<BepBreakdown> {
    Ok(BepBreakdown::from_p(exact_p_values(inputs)?))
}
