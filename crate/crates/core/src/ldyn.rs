//! Lorenz-96 dynamics, the observation process and imperfect-model shocks.
//!
//! The right-hand side is
//!
//! ```text
//! dx_i/dt = (x_{i+1} - x_{i-2}) x_{i-1} - x_i + F
//! ```
//!
//! with cyclic indices. The `-x_i` damping term can be switched off to get
//! the undamped variant; the damped form is the default.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{fill_standard_normal, standard_normal};

/// Smallest ring the stencil `i-2 .. i+1` fits on.
pub const MIN_DIMENSION: usize = 4;

/// Burn-in steps used to move a random initial condition onto the attractor.
pub const BURN_IN_STEPS: usize = 1000;

/// Standard deviation of the pre-burn-in initial draw.
pub const INITIAL_STATE_STD: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lorenz96Params {
    pub dim: usize,
    #[serde(default = "default_forcing")]
    pub forcing: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Include the `-x_i` term.
    #[serde(default = "default_true")]
    pub damping_term: bool,
    #[serde(default = "default_clip")]
    pub clip_bound: f64,
}

fn default_forcing() -> f64 {
    8.0
}
fn default_dt() -> f64 {
    0.01
}
fn default_true() -> bool {
    true
}
fn default_clip() -> f64 {
    50.0
}

impl Lorenz96Params {
    /// Standard chaotic setting: F = 8, dt = 0.01, damped, clipped at 50.
    pub fn standard(dim: usize) -> Self {
        Self {
            dim,
            forcing: default_forcing(),
            dt: default_dt(),
            damping_term: true,
            clip_bound: default_clip(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.violations().into_iter().next().map_or(Ok(()), |v| {
            if self.dim < MIN_DIMENSION {
                Err(Error::InvalidDimension { dim: self.dim, min: MIN_DIMENSION })
            } else {
                Err(Error::InvalidConfig(v))
            }
        })
    }

    /// Every violated invariant, for config validation reports.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.dim < MIN_DIMENSION {
            out.push(format!("model.dim must be at least {MIN_DIMENSION} (got {})", self.dim));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            out.push(format!("model.dt must be positive and finite (got {})", self.dt));
        }
        if !(self.clip_bound > 0.0) {
            out.push(format!("model.clip_bound must be positive (got {})", self.clip_bound));
        }
        if !self.forcing.is_finite() {
            out.push("model.forcing must be finite".to_string());
        }
        out
    }
}

/// A deterministic one-step state map used to produce forecasts.
pub trait ForecastModel: Sync {
    fn dim(&self) -> usize;

    /// Advance `x` by one model step in place.
    fn step(&self, x: &mut [f64], work: &mut StepWorkspace) -> Result<()>;
}

/// Scratch buffers for one RK4 step, reused across steps.
#[derive(Debug, Default, Clone)]
pub struct StepWorkspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl StepWorkspace {
    pub fn new(dim: usize) -> Self {
        let mut w = Self::default();
        w.ensure(dim);
        w
    }

    fn ensure(&mut self, dim: usize) {
        for buf in [&mut self.k1, &mut self.k2, &mut self.k3, &mut self.k4, &mut self.stage] {
            buf.resize(dim, 0.0);
        }
    }
}

/// Write `dx/dt` for state `x` into `out`.
pub fn lorenz96_rhs_into(x: &[f64], params: &Lorenz96Params, out: &mut [f64]) -> Result<()> {
    let d = x.len();
    if d < MIN_DIMENSION {
        return Err(Error::InvalidDimension { dim: d, min: MIN_DIMENSION });
    }
    if out.len() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: out.len() });
    }
    let f = params.forcing;
    let damp = if params.damping_term { 1.0 } else { 0.0 };
    let rhs = |i: usize, ip1: usize, im1: usize, im2: usize| {
        (x[ip1] - x[im2]) * x[im1] - damp * x[i] + f
    };
    // Wrap-around entries first, then the contiguous interior.
    out[0] = rhs(0, 1, d - 1, d - 2);
    out[1] = rhs(1, 2, 0, d - 1);
    out[d - 1] = rhs(d - 1, 0, d - 2, d - 3);
    for i in 2..d - 1 {
        out[i] = (x[i + 1] - x[i - 2]) * x[i - 1] - damp * x[i] + f;
    }
    Ok(())
}

pub fn lorenz96_rhs(x: &[f64], params: &Lorenz96Params) -> Result<Vec<f64>> {
    let mut out = vec![0.0; x.len()];
    lorenz96_rhs_into(x, params, &mut out)?;
    Ok(out)
}

/// Clamp every component to `[-bound, bound]` in place.
pub fn clip_in_place(x: &mut [f64], bound: f64) {
    for v in x.iter_mut() {
        *v = v.clamp(-bound, bound);
    }
}

pub fn clip_magnitude(x: &[f64], bound: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    clip_in_place(&mut out, bound);
    out
}

/// One classical RK4 step of size `params.dt` followed by clipping.
pub fn rk4_step_in_place(x: &mut [f64], params: &Lorenz96Params, work: &mut StepWorkspace) -> Result<()> {
    let d = x.len();
    work.ensure(d);
    let h = params.dt;
    let StepWorkspace { k1, k2, k3, k4, stage } = work;

    lorenz96_rhs_into(x, params, k1)?;
    for i in 0..d {
        stage[i] = x[i] + 0.5 * h * k1[i];
    }
    lorenz96_rhs_into(stage, params, k2)?;
    for i in 0..d {
        stage[i] = x[i] + 0.5 * h * k2[i];
    }
    lorenz96_rhs_into(stage, params, k3)?;
    for i in 0..d {
        stage[i] = x[i] + h * k3[i];
    }
    lorenz96_rhs_into(stage, params, k4)?;

    let mut finite = true;
    for i in 0..d {
        let v = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        finite &= v.is_finite();
        x[i] = v;
    }
    if !finite {
        return Err(Error::NumericalOverflow("rk4_step"));
    }
    clip_in_place(x, params.clip_bound);
    Ok(())
}

pub fn rk4_step(x: &[f64], params: &Lorenz96Params) -> Result<Vec<f64>> {
    let mut out = x.to_vec();
    rk4_step_in_place(&mut out, params, &mut StepWorkspace::new(x.len()))?;
    Ok(out)
}

impl ForecastModel for Lorenz96Params {
    fn dim(&self) -> usize {
        self.dim
    }

    fn step(&self, x: &mut [f64], work: &mut StepWorkspace) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: x.len() });
        }
        rk4_step_in_place(x, self, work)
    }
}

/// Linear map `x <- A x` with row-major `A`; the linear-Gaussian test bed.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDynamics {
    dim: usize,
    matrix: Vec<f64>,
}

impl LinearDynamics {
    pub fn new(dim: usize, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, actual: matrix.len() });
        }
        Ok(Self { dim, matrix })
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }
}

impl ForecastModel for LinearDynamics {
    fn dim(&self) -> usize {
        self.dim
    }

    fn step(&self, x: &mut [f64], work: &mut StepWorkspace) -> Result<()> {
        let d = self.dim;
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: x.len() });
        }
        work.stage.clear();
        work.stage.extend_from_slice(x);
        for (i, xi) in x.iter_mut().enumerate() {
            let row = &self.matrix[i * d..(i + 1) * d];
            *xi = row.iter().zip(&work.stage).map(|(a, b)| a * b).sum();
        }
        Ok(())
    }
}

/// Draw `x ~ N(0, 9 I)` and spin it up with `BURN_IN_STEPS` RK4 steps.
pub fn init_true_state<R: Rng + ?Sized>(params: &Lorenz96Params, rng: &mut R) -> Result<Vec<f64>> {
    params.validate()?;
    let mut x = vec![0.0; params.dim];
    fill_standard_normal(rng, &mut x);
    for v in &mut x {
        *v *= INITIAL_STATE_STD;
    }
    let mut work = StepWorkspace::new(params.dim);
    for _ in 0..BURN_IN_STEPS {
        rk4_step_in_place(&mut x, params, &mut work)?;
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservationOperator {
    /// Component-wise `arctan`.
    Arctan,
    /// `g(x) = x`.
    LinearIdentity,
}

impl ObservationOperator {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ObservationOperator::Arctan => x.atan(),
            ObservationOperator::LinearIdentity => x,
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            ObservationOperator::Arctan => 1.0 / (1.0 + x * x),
            ObservationOperator::LinearIdentity => 1.0,
        }
    }
}

/// Full-state observation `y = g(x) + eps`, `eps ~ N(0, sigma_obs^2 I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationModel {
    #[serde(default = "default_operator")]
    pub operator: ObservationOperator,
    #[serde(default = "default_sigma_obs")]
    pub sigma_obs: f64,
}

fn default_operator() -> ObservationOperator {
    ObservationOperator::Arctan
}
fn default_sigma_obs() -> f64 {
    0.05
}

impl Default for ObservationModel {
    fn default() -> Self {
        Self { operator: default_operator(), sigma_obs: default_sigma_obs() }
    }
}

impl ObservationModel {
    pub fn arctan(sigma_obs: f64) -> Self {
        Self { operator: ObservationOperator::Arctan, sigma_obs }
    }

    pub fn identity(sigma_obs: f64) -> Self {
        Self { operator: ObservationOperator::LinearIdentity, sigma_obs }
    }

    pub fn violations(&self) -> Vec<String> {
        if self.sigma_obs > 0.0 && self.sigma_obs.is_finite() {
            Vec::new()
        } else {
            vec![format!("observation.sigma_obs must be positive and finite (got {})", self.sigma_obs)]
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().pop() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidConfig(v)),
        }
    }

    /// Apply `g` without noise.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = self.operator.apply(v);
        }
    }

    /// `log p(y | z)` up to the additive normalization constant.
    pub fn log_likelihood(&self, z: &[f64], y: &[f64]) -> Result<f64> {
        self.validate()?;
        check_same_len(z, y)?;
        let inv_var = 1.0 / (self.sigma_obs * self.sigma_obs);
        Ok(-0.5 * inv_var
            * z.iter()
                .zip(y)
                .map(|(&zi, &yi)| {
                    let r = self.operator.apply(zi) - yi;
                    r * r
                })
                .sum::<f64>())
    }
}

fn check_same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: a.len(), actual: b.len() })
    }
}

/// Noisy observation of state `x`.
pub fn observe<R: Rng + ?Sized>(x: &[f64], model: &ObservationModel, rng: &mut R) -> Result<Vec<f64>> {
    model.validate()?;
    let mut y = vec![0.0; x.len()];
    model.apply_into(x, &mut y);
    for v in &mut y {
        *v += model.sigma_obs * standard_normal(rng);
    }
    Ok(y)
}

/// `grad_z log p(y | z)` written into `out`. Hot path: no validation beyond
/// lengths, callers validate the model once.
#[inline]
pub fn grad_log_likelihood_into(z: &[f64], y: &[f64], model: &ObservationModel, out: &mut [f64]) {
    let inv_var = 1.0 / (model.sigma_obs * model.sigma_obs);
    let op = model.operator;
    for ((o, &zi), &yi) in out.iter_mut().zip(z).zip(y) {
        *o = -(op.apply(zi) - yi) * inv_var * op.derivative(zi);
    }
}

pub fn grad_log_likelihood(z: &[f64], y: &[f64], model: &ObservationModel) -> Result<Vec<f64>> {
    if model.sigma_obs == 0.0 {
        return Err(Error::InvalidConfig("sigma_obs must be non-zero".into()));
    }
    model.validate()?;
    check_same_len(z, y)?;
    let mut out = vec![0.0; z.len()];
    grad_log_likelihood_into(z, y, model, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockEvent {
    /// Chance of firing in one assimilation window.
    pub probability: f64,
    /// Perturbation size relative to `|x_i|`.
    pub size: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockModel {
    pub events: Vec<ShockEvent>,
}

impl ShockModel {
    /// Three-level mixture: 2%/5%, 1%/20%, 0.5%/50%.
    pub fn three_level() -> Self {
        Self {
            events: vec![
                ShockEvent { probability: 0.02, size: 0.05 },
                ShockEvent { probability: 0.01, size: 0.20 },
                ShockEvent { probability: 0.005, size: 0.50 },
            ],
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (k, e) in self.events.iter().enumerate() {
            if !(0.0..=1.0).contains(&e.probability) {
                out.push(format!("shock.events[{k}].probability must lie in [0, 1] (got {})", e.probability));
            }
            if !(e.size > 0.0 && e.size.is_finite()) {
                out.push(format!("shock.events[{k}].size must be positive (got {})", e.size));
            }
        }
        out
    }
}

/// Apply each shock event independently with its probability. Returns the
/// indices of the events that fired; `x` is clipped to `bound` afterwards.
///
/// One uniform is consumed per event; a Gaussian vector is drawn only when an
/// event fires.
pub fn apply_shocks_in_place<R: Rng + ?Sized>(
    x: &mut [f64],
    model: &ShockModel,
    bound: f64,
    rng: &mut R,
) -> Vec<usize> {
    let mut fired = Vec::new();
    for (k, event) in model.events.iter().enumerate() {
        let u: f64 = rng.gen();
        if u < event.probability {
            fired.push(k);
            for v in x.iter_mut() {
                *v += event.size * standard_normal(rng) * v.abs();
            }
        }
    }
    if !fired.is_empty() {
        clip_in_place(x, bound);
    }
    fired
}

pub fn apply_shocks<R: Rng + ?Sized>(x: &[f64], model: &ShockModel, bound: f64, rng: &mut R) -> (Vec<f64>, Vec<usize>) {
    let mut out = x.to_vec();
    let fired = apply_shocks_in_place(&mut out, model, bound, rng);
    (out, fired)
}
