use rand::Rng;

use crate::error::{Error, Result};
use crate::ldyn::{ForecastModel, StepWorkspace};
use crate::rng::fill_standard_normal;

/// `J` state samples of dimension `d`, stored row-major (one row per member).
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Ensemble {
    pub fn zeros(members: usize, dim: usize) -> Self {
        Self { members, dim, data: vec![0.0; members * dim] }
    }

    pub fn from_flat(members: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != members * dim {
            return Err(Error::DimensionMismatch { expected: members * dim, actual: data.len() });
        }
        Ok(Self { members, dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { members: rows.len(), dim, data })
    }

    /// `J` draws from `N(0, I_d)`.
    pub fn standard_normal<R: Rng + ?Sized>(members: usize, dim: usize, rng: &mut R) -> Self {
        let mut e = Self::zeros(members, dim);
        fill_standard_normal(rng, &mut e.data);
        e
    }

    pub fn members(&self) -> usize {
        self.members
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn member(&self, j: usize) -> &[f64] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn member_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        // `max(1)` keeps `chunks_exact` happy for the degenerate d = 0 case.
        self.data.chunks_exact(self.dim.max(1)).take(self.members)
    }

    pub fn rows_mut(&mut self) -> impl ExactSizeIterator<Item = &mut [f64]> {
        let members = self.members;
        self.data.chunks_exact_mut(self.dim.max(1)).take(members)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for row in self.rows() {
            for (a, b) in m.iter_mut().zip(row) {
                *a += b;
            }
        }
        let inv = 1.0 / self.members.max(1) as f64;
        m.iter_mut().for_each(|v| *v *= inv);
        m
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Advance every member `steps` model steps.
    pub fn propagate<M: ForecastModel + ?Sized>(&mut self, model: &M, steps: usize) -> Result<()> {
        if model.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: model.dim(), actual: self.dim });
        }
        let mut work = StepWorkspace::new(self.dim);
        for row in self.rows_mut() {
            for _ in 0..steps {
                model.step(row, &mut work)?;
            }
        }
        Ok(())
    }
}
