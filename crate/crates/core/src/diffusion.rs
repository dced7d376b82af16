//! Pseudo-time schedules and SDE coefficients of the diffusion model.
//!
//! The forward process is the linear SDE `dZ = b(τ) Z dτ + σ(τ) dW` on
//! `τ ∈ [0, 1]`, with
//!
//! ```text
//! ᾱ_τ  = 1 - τ (1 - ε_α)
//! β̄²_τ = ε_β + τ (1 - ε_β)
//! b(τ)  = d/dτ log ᾱ_τ                    = -(1 - ε_α) / ᾱ_τ
//! σ²(τ) = d/dτ β̄²_τ - 2 b(τ) β̄²_τ        = (1 - ε_β) + 2 (1 - ε_α) β̄²_τ / ᾱ_τ
//! ```
//!
//! so that `Z_τ | Z_0 = z_0 ~ N(ᾱ_τ z_0, β̄²_τ I)` exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSchedule {
    eps_alpha: f64,
    eps_beta: f64,
    steps: usize,
}

impl DiffusionSchedule {
    /// `eps_alpha, eps_beta ∈ (0, 1]`; the value 1 freezes the corresponding
    /// schedule and is accepted for degenerate test setups.
    pub fn new(eps_alpha: f64, eps_beta: f64, steps: usize) -> Result<Self> {
        let s = Self { eps_alpha, eps_beta, steps };
        match s.violations().into_iter().next() {
            None => Ok(s),
            Some(v) => Err(Error::InvalidConfig(v)),
        }
    }

    pub(crate) fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.eps_alpha > 0.0 && self.eps_alpha <= 1.0) {
            out.push(format!("eps_alpha must lie in (0, 1] (got {})", self.eps_alpha));
        }
        if !(self.eps_beta > 0.0 && self.eps_beta <= 1.0) {
            out.push(format!("eps_beta must lie in (0, 1] (got {})", self.eps_beta));
        }
        if self.steps == 0 {
            out.push("pseudo_steps must be at least 1".to_string());
        }
        out
    }

    pub fn eps_alpha(&self) -> f64 {
        self.eps_alpha
    }

    pub fn eps_beta(&self) -> f64 {
        self.eps_beta
    }

    /// Number of pseudo-time steps `K`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dtau(&self) -> f64 {
        1.0 / self.steps as f64
    }

    /// Partition point `τ_k = k / K`.
    pub fn tau(&self, k: usize) -> f64 {
        k as f64 / self.steps as f64
    }

    fn check(tau: f64) -> Result<f64> {
        if (0.0..=1.0).contains(&tau) {
            Ok(tau)
        } else {
            Err(Error::Domain(tau))
        }
    }

    pub fn alpha_bar(&self, tau: f64) -> Result<f64> {
        Self::check(tau).map(|t| self.alpha_bar_at(t))
    }

    pub fn beta_bar_sq(&self, tau: f64) -> Result<f64> {
        Self::check(tau).map(|t| self.beta_bar_sq_at(t))
    }

    pub fn drift_coef(&self, tau: f64) -> Result<f64> {
        Self::check(tau).map(|t| self.drift_coef_at(t))
    }

    pub fn diffusion_sq(&self, tau: f64) -> Result<f64> {
        Self::check(tau).map(|t| self.diffusion_sq_at(t))
    }

    // Unchecked variants for the sampler's inner loop, where τ comes from the
    // partition and is in range by construction.

    #[inline]
    pub(crate) fn alpha_bar_at(&self, tau: f64) -> f64 {
        // Convex-combination form keeps both endpoints bit-exact.
        (1.0 - tau) + tau * self.eps_alpha
    }

    #[inline]
    pub(crate) fn beta_bar_sq_at(&self, tau: f64) -> f64 {
        (1.0 - tau) * self.eps_beta + tau
    }

    #[inline]
    pub(crate) fn drift_coef_at(&self, tau: f64) -> f64 {
        -(1.0 - self.eps_alpha) / self.alpha_bar_at(tau)
    }

    #[inline]
    pub(crate) fn diffusion_sq_at(&self, tau: f64) -> f64 {
        (1.0 - self.eps_beta) + 2.0 * (1.0 - self.eps_alpha) * self.beta_bar_sq_at(tau) / self.alpha_bar_at(tau)
    }

    /// `log q(z_τ | z_0)` without its normalization constant:
    /// `-‖z - ᾱ_τ z0‖² / (2 β̄²_τ)`.
    pub fn gaussian_log_kernel(&self, z: &[f64], z0: &[f64], tau: f64) -> Result<f64> {
        let tau = Self::check(tau)?;
        if z.len() != z0.len() {
            return Err(Error::DimensionMismatch { expected: z.len(), actual: z0.len() });
        }
        Ok(log_kernel(z, z0, self.alpha_bar_at(tau), self.beta_bar_sq_at(tau)))
    }
}

#[inline]
pub(crate) fn log_kernel(z: &[f64], z0: &[f64], alpha: f64, beta_sq: f64) -> f64 {
    let sq: f64 = z
        .iter()
        .zip(z0)
        .map(|(&a, &b)| {
            let r = a - alpha * b;
            r * r
        })
        .sum();
    -sq / (2.0 * beta_sq)
}
