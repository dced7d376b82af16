//! Local Ensemble Transform Kalman Filter on a periodic 1-D grid.
//!
//! Each state index is analysed independently in the `J`-dimensional
//! ensemble space using only the observations within a ring distance of it
//! (hard cutoff, no tapering). The analysis follows the symmetric square-root
//! formulation:
//!
//! ```text
//! P̃ = [(J-1) I + Yᵀ R⁻¹ Y]⁻¹
//! w̄ = P̃ Yᵀ R⁻¹ (y - ȳ)
//! W = [(J-1) P̃]^{1/2}
//! x_a^{(j)} = x̄ + X (w̄ + W_j)
//! ```
//!
//! Nonlinear observation operators are applied member-wise to build the
//! observation-space ensemble `Y`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::ldyn::ObservationModel;

/// Eigenvalues of the local ensemble-space matrix are floored here.
pub const EIGEN_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LetkfConfig {
    pub ensemble_size: usize,
    /// Multiplicative factor applied to forecast perturbations.
    pub inflation: f64,
    /// Localization factor: ring-distance radius of the local region.
    pub localization: f64,
}

impl Default for LetkfConfig {
    fn default() -> Self {
        Self { ensemble_size: 20, inflation: 1.1, localization: 4.0 }
    }
}

impl LetkfConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.ensemble_size < 2 {
            out.push(format!("letkf.ensemble_size must be at least 2 (got {})", self.ensemble_size));
        }
        if !(self.inflation >= 0.0 && self.inflation.is_finite()) {
            out.push(format!("letkf.inflation must be non-negative (got {})", self.inflation));
        }
        if !(self.localization >= 0.0 && self.localization.is_finite()) {
            out.push(format!("letkf.localization must be non-negative (got {})", self.localization));
        }
        out
    }

    /// Integer ring radius: `⌈c⌉`, except that `c < 1` gives 0.
    pub fn radius(&self) -> usize {
        if self.localization < 1.0 {
            0
        } else {
            self.localization.ceil() as usize
        }
    }

    /// Number of indices in a local region on a ring of size `d`.
    pub fn neighbor_size(&self, d: usize) -> usize {
        (2 * self.radius() + 1).min(d)
    }
}

/// Indices within ring distance `radius` of `i`, in ascending ring order
/// starting from `i - radius`.
pub fn local_region(i: usize, cfg: &LetkfConfig, d: usize) -> Vec<usize> {
    let r = cfg.radius();
    if 2 * r + 1 >= d {
        return (0..d).collect();
    }
    (0..=2 * r).map(|k| (i + d - r + k) % d).collect()
}

#[derive(Debug, Clone)]
pub struct LetkfAnalysis {
    pub ensemble: Ensemble,
    /// Number of eigenvalues that had to be floored across all local solves.
    pub floored_eigenvalues: usize,
}

pub fn letkf_analysis(forecast: &Ensemble, y: &[f64], obs: &ObservationModel, cfg: &LetkfConfig) -> Result<LetkfAnalysis> {
    let (j, d) = (forecast.members(), forecast.dim());
    if j < 2 {
        return Err(Error::InsufficientEnsemble { members: j, required: 2 });
    }
    if y.len() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: y.len() });
    }
    obs.validate()?;
    if let Some(v) = cfg.violations().into_iter().find(|v| !v.starts_with("letkf.ensemble_size")) {
        return Err(Error::InvalidConfig(v));
    }

    let mean = forecast.mean();
    // Inflated perturbations, stored state-major: pert[i * j + k].
    let mut pert = vec![0.0; d * j];
    for (k, row) in forecast.rows().enumerate() {
        for i in 0..d {
            pert[i * j + k] = cfg.inflation * (row[i] - mean[i]);
        }
    }
    // Observation ensemble of the inflated members, same layout.
    let mut obs_pert = vec![0.0; d * j];
    let mut obs_mean = vec![0.0; d];
    for i in 0..d {
        let slot = &mut obs_pert[i * j..(i + 1) * j];
        for (k, s) in slot.iter_mut().enumerate() {
            *s = obs.operator.apply(mean[i] + pert[i * j + k]);
        }
        obs_mean[i] = slot.iter().sum::<f64>() / j as f64;
        slot.iter_mut().for_each(|s| *s -= obs_mean[i]);
    }
    let inv_r = 1.0 / (obs.sigma_obs * obs.sigma_obs);

    let columns: Vec<(Vec<f64>, usize)> = (0..d)
        .into_par_iter()
        .map(|i| {
            let region = local_region(i, cfg, d);
            let mut a = DMatrix::<f64>::identity(j, j) * (j as f64 - 1.0);
            let mut c = DVector::<f64>::zeros(j);
            for &m in &region {
                let yp = &obs_pert[m * j..(m + 1) * j];
                let innov = (y[m] - obs_mean[m]) * inv_r;
                for p in 0..j {
                    c[p] += yp[p] * innov;
                    let sp = yp[p] * inv_r;
                    for q in 0..=p {
                        a[(p, q)] += sp * yp[q];
                    }
                }
            }
            for p in 0..j {
                for q in 0..p {
                    a[(q, p)] = a[(p, q)];
                }
            }
            let eig = SymmetricEigen::new(a);
            let mut floored = 0;
            let lambda: Vec<f64> = eig
                .eigenvalues
                .iter()
                .map(|&l| {
                    if l < EIGEN_FLOOR {
                        floored += 1;
                        EIGEN_FLOOR
                    } else {
                        l
                    }
                })
                .collect();
            let v = &eig.eigenvectors;
            // w̄ = V Λ⁻¹ Vᵀ c
            let vt_c = v.transpose() * &c;
            let scaled = DVector::from_iterator(j, vt_c.iter().zip(&lambda).map(|(x, l)| x / l));
            let w_mean = v * scaled;
            // W = V sqrt((J-1) Λ⁻¹) Vᵀ
            let mut vs = v.clone();
            for (col, &l) in lambda.iter().enumerate() {
                let s = ((j as f64 - 1.0) / l).sqrt();
                vs.column_mut(col).scale_mut(s);
            }
            let w = vs * v.transpose();

            let xp = &pert[i * j..(i + 1) * j];
            let column: Vec<f64> = (0..j)
                .map(|member| {
                    let mut inc = 0.0;
                    for k in 0..j {
                        inc += xp[k] * (w_mean[k] + w[(k, member)]);
                    }
                    mean[i] + inc
                })
                .collect();
            (column, floored)
        })
        .collect();

    let mut ensemble = Ensemble::zeros(j, d);
    let mut floored_eigenvalues = 0;
    for (i, (column, floored)) in columns.into_iter().enumerate() {
        floored_eigenvalues += floored;
        for (k, v) in column.into_iter().enumerate() {
            ensemble.member_mut(k)[i] = v;
        }
    }
    Ok(LetkfAnalysis { ensemble, floored_eigenvalues })
}
