//! Training-free score estimation.
//!
//! The prior score of the diffused prediction density is a weighted average
//! over prediction samples `x̂_n`:
//!
//! ```text
//! S(z, τ) ≈ Σ_n -(z - ᾱ_τ x̂_n) / β̄²_τ · w̄_n,   w̄_n ∝ exp(-‖z - ᾱ_τ x̂_n‖² / 2β̄²_τ)
//! ```
//!
//! evaluated on a random mini-batch of the predictions. The posterior score
//! adds the observation log-likelihood gradient damped by `h(τ)`.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffusion::{log_kernel, DiffusionSchedule};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::ldyn::ObservationModel;
use crate::rng::Stream;

/// The likelihood damping function `h(τ)`: decreasing, `h(0) = 1`, `h(1) = 0`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Damping {
    /// `h(τ) = 1 - τ`.
    #[default]
    OneMinusTau,
    /// Values on a uniform grid over `[0, 1]`, linearly interpolated.
    Table(Vec<f64>),
}

impl Damping {
    pub fn violations(&self) -> Vec<String> {
        let Damping::Table(t) = self else { return Vec::new() };
        let mut out = Vec::new();
        if t.len() < 2 {
            out.push("damping table needs at least two entries".to_string());
            return out;
        }
        if t[0] != 1.0 {
            out.push(format!("damping table must start at h(0) = 1 (got {})", t[0]));
        }
        if t[t.len() - 1] != 0.0 {
            out.push(format!("damping table must end at h(1) = 0 (got {})", t[t.len() - 1]));
        }
        if t.windows(2).any(|w| w[1] > w[0]) {
            out.push("damping table must be non-increasing".to_string());
        }
        out
    }

    #[inline]
    pub fn eval(&self, tau: f64) -> f64 {
        match self {
            Damping::OneMinusTau => 1.0 - tau,
            Damping::Table(t) => {
                let pos = tau.clamp(0.0, 1.0) * (t.len() - 1) as f64;
                let i = (pos.floor() as usize).min(t.len() - 2);
                let frac = pos - i as f64;
                t[i] + frac * (t[i + 1] - t[i])
            }
        }
    }
}

/// Everything the score estimator needs besides the query point.
#[derive(Debug, Clone)]
pub struct ScoreContext<'a> {
    pub predictions: &'a Ensemble,
    pub schedule: DiffusionSchedule,
    pub batch_size: usize,
    pub damping: Damping,
}

impl<'a> ScoreContext<'a> {
    pub fn new(predictions: &'a Ensemble, schedule: DiffusionSchedule, batch_size: usize, damping: Damping) -> Result<Self> {
        if predictions.members() == 0 {
            return Err(Error::InvalidConfig("prediction ensemble is empty".into()));
        }
        if batch_size == 0 || batch_size > predictions.members() {
            return Err(Error::InvalidConfig(format!(
                "batch size {batch_size} must lie in 1..={}",
                predictions.members()
            )));
        }
        if let Some(v) = damping.violations().pop() {
            return Err(Error::InvalidConfig(v));
        }
        Ok(Self { predictions, schedule, batch_size, damping })
    }
}

/// `n` distinct indices drawn uniformly from `0..members`.
///
/// A full batch is returned in natural order; `n = 1` costs one draw.
pub fn sample_minibatch<R: Rng + ?Sized>(members: usize, n: usize, rng: &mut R) -> Result<Vec<usize>> {
    if n == 0 || n > members {
        return Err(Error::InvalidConfig(format!("batch size {n} must lie in 1..={members}")));
    }
    Ok(if n == members {
        (0..members).collect()
    } else if n == 1 {
        vec![rng.gen_range(0..members)]
    } else {
        index::sample(rng, members, n).into_vec()
    })
}

/// Normalized kernel weights `w̄_n` of the batch members at `(z, τ)`,
/// computed in the log domain with max subtraction.
pub fn normalized_weights(z: &[f64], tau: f64, ctx: &ScoreContext<'_>, batch: &[usize]) -> Result<Vec<f64>> {
    let alpha = ctx.schedule.alpha_bar(tau)?;
    let beta_sq = ctx.schedule.beta_bar_sq(tau)?;
    let mut w: Vec<f64> = batch
        .iter()
        .map(|&j| log_kernel(z, ctx.predictions.member(j), alpha, beta_sq))
        .collect();
    normalize_log_weights(&mut w)?;
    Ok(w)
}

fn normalize_log_weights(w: &mut [f64]) -> Result<()> {
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::NonFinite("score weights"));
    }
    let mut total = 0.0;
    for v in w.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    // `total >= 1` because the maximal term contributes exp(0).
    w.iter_mut().for_each(|v| *v /= total);
    Ok(())
}

/// Mini-batch estimate of the prior score at `(z, τ)`, written into `out`.
pub fn estimate_prior_score_into(
    z: &[f64],
    tau: f64,
    ctx: &ScoreContext<'_>,
    batch: &[usize],
    out: &mut [f64],
) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty mini-batch".into()));
    }
    let d = ctx.predictions.dim();
    if z.len() != d || out.len() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: z.len().min(out.len()) });
    }
    let alpha = ctx.schedule.alpha_bar(tau)?;
    let inv_beta_sq = 1.0 / ctx.schedule.beta_bar_sq(tau)?;

    if let [j] = batch {
        // Single-sample batch: the weight is identically one.
        let x = ctx.predictions.member(*j);
        for ((o, &zi), &xi) in out.iter_mut().zip(z).zip(x) {
            *o = -(zi - alpha * xi) * inv_beta_sq;
        }
    } else {
        // Σ_n w̄_n (z - ᾱ x̂_n) = z - ᾱ Σ_n w̄_n x̂_n, so accumulate the
        // weighted prediction mean and form the score once.
        let w = normalized_weights(z, tau, ctx, batch)?;
        out.iter_mut().for_each(|v| *v = 0.0);
        for (&j, &wn) in batch.iter().zip(&w) {
            if wn == 0.0 {
                continue;
            }
            for (o, &xi) in out.iter_mut().zip(ctx.predictions.member(j)) {
                *o += wn * xi;
            }
        }
        for (o, &zi) in out.iter_mut().zip(z) {
            *o = -(zi - alpha * *o) * inv_beta_sq;
        }
    }
    if out.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("estimate_prior_score"))
    }
}

pub fn estimate_prior_score(z: &[f64], tau: f64, ctx: &ScoreContext<'_>, batch: &[usize]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; z.len()];
    estimate_prior_score_into(z, tau, ctx, batch, &mut out)?;
    Ok(out)
}

pub fn damping(tau: f64, ctx: &ScoreContext<'_>) -> Result<f64> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Domain(tau));
    }
    Ok(ctx.damping.eval(tau))
}

/// Prior score plus `h(τ)` times the log-likelihood gradient.
pub fn posterior_score_into(
    z: &[f64],
    tau: f64,
    ctx: &ScoreContext<'_>,
    batch: &[usize],
    y: &[f64],
    obs: &ObservationModel,
    out: &mut [f64],
) -> Result<()> {
    if y.len() != z.len() {
        return Err(Error::DimensionMismatch { expected: z.len(), actual: y.len() });
    }
    estimate_prior_score_into(z, tau, ctx, batch, out)?;
    let h = damping(tau, ctx)?;
    if h != 0.0 {
        let inv_var = 1.0 / (obs.sigma_obs * obs.sigma_obs);
        let op = obs.operator;
        for ((o, &zi), &yi) in out.iter_mut().zip(z).zip(y) {
            *o += h * (-(op.apply(zi) - yi) * inv_var * op.derivative(zi));
        }
    }
    Ok(())
}

pub fn posterior_score(
    z: &[f64],
    tau: f64,
    ctx: &ScoreContext<'_>,
    batch: &[usize],
    y: &[f64],
    obs: &ObservationModel,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; z.len()];
    posterior_score_into(z, tau, ctx, batch, y, obs, &mut out)?;
    Ok(out)
}

/// A score field the backward sampler can be driven by.
pub trait ScoreFn: Sync {
    fn dim(&self) -> usize;

    /// Write the score at `(z, τ)` into `out`. `rng` is the calling member's
    /// private stream, used for any randomness in the estimate.
    fn eval(&self, z: &[f64], tau: f64, rng: &mut Stream, out: &mut [f64]) -> Result<()>;
}

/// The EnSF posterior score: fresh mini-batch per evaluation, prior estimate
/// plus damped likelihood gradient.
#[derive(Debug, Clone)]
pub struct PosteriorScore<'a> {
    pub ctx: ScoreContext<'a>,
    pub y: &'a [f64],
    pub obs: ObservationModel,
}

impl ScoreFn for PosteriorScore<'_> {
    fn dim(&self) -> usize {
        self.ctx.predictions.dim()
    }

    fn eval(&self, z: &[f64], tau: f64, rng: &mut Stream, out: &mut [f64]) -> Result<()> {
        let batch = sample_minibatch(self.ctx.predictions.members(), self.ctx.batch_size, rng)?;
        posterior_score_into(z, tau, &self.ctx, &batch, self.y, &self.obs, out)
    }
}

/// Exact score of the diffused law of `N(mean, std² I)`:
/// `-(z - ᾱ_τ mean) / (ᾱ_τ² std² + β̄²_τ)`.
#[derive(Debug, Clone)]
pub struct GaussianScore {
    pub mean: Vec<f64>,
    pub std: f64,
    pub schedule: DiffusionSchedule,
}

impl GaussianScore {
    pub fn at(&self, z: &[f64], tau: f64, out: &mut [f64]) {
        let a = self.schedule.alpha_bar_at(tau);
        let var = a * a * self.std * self.std + self.schedule.beta_bar_sq_at(tau);
        for ((o, &zi), &mi) in out.iter_mut().zip(z).zip(&self.mean) {
            *o = -(zi - a * mi) / var;
        }
    }
}

impl ScoreFn for GaussianScore {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn eval(&self, z: &[f64], tau: f64, _rng: &mut Stream, out: &mut [f64]) -> Result<()> {
        self.at(z, tau, out);
        Ok(())
    }
}
