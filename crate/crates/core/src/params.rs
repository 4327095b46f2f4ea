//! Dense parameter vectors and the small set of reductions the simulator
//! needs.
//!
//! All reductions (sums, dots, means) accumulate strictly left to right, so
//! every result is a deterministic function of operand order. Anything that
//! aggregates per-client results must therefore feed them in ascending
//! client id, which the engine does.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParamError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("parameter vectors must have at least one coordinate")]
    Empty,
    #[error("mean over an empty set of vectors is undefined")]
    EmptyMean,
}

/// A flat `f64` model-parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    /// Wraps raw values; at least one coordinate is required.
    pub fn new(values: Vec<f64>) -> Result<Self, ParamError> {
        if values.is_empty() {
            Err(ParamError::Empty)
        } else {
            Ok(Self(values))
        }
    }

    /// All-zero vector of dimension `dim` (must be >= 1).
    pub fn zeros(dim: usize) -> Result<Self, ParamError> {
        Self::new(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    fn check_dim(&self, other: &Self) -> Result<(), ParamError> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(ParamError::DimMismatch {
                left: self.dim(),
                right: other.dim(),
            })
        }
    }

    /// In-place `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &Self) -> Result<(), ParamError> {
        self.check_dim(x)?;
        for (s, &v) in self.0.iter_mut().zip(&x.0) {
            *s += a * v;
        }
        Ok(())
    }

    /// Elementwise `self - rhs`.
    pub fn sub(&self, rhs: &Self) -> Result<Self, ParamError> {
        self.check_dim(rhs)?;
        Ok(Self(
            self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect(),
        ))
    }

    /// In-place multiplication by a scalar.
    pub fn scale(&mut self, a: f64) {
        for s in &mut self.0 {
            *s *= a;
        }
    }

    /// Returns `a * self` without mutating.
    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// Squared Euclidean norm, accumulated left to right.
    pub fn norm_sq(&self) -> f64 {
        let mut acc = 0.0;
        for &v in &self.0 {
            acc += v * v;
        }
        acc
    }

    /// Inner product, accumulated left to right.
    pub fn dot(&self, rhs: &Self) -> Result<f64, ParamError> {
        self.check_dim(rhs)?;
        let mut acc = 0.0;
        for (a, b) in self.0.iter().zip(&rhs.0) {
            acc += a * b;
        }
        Ok(acc)
    }

    /// Arithmetic mean of `vectors` in slice order: sum left to right, then
    /// one division by the count.
    pub fn mean(vectors: &[Self]) -> Result<Self, ParamError> {
        let first = vectors.first().ok_or(ParamError::EmptyMean)?;
        let mut acc = first.clone();
        for v in &vectors[1..] {
            acc.axpy(1.0, v)?;
        }
        let n = vectors.len() as f64;
        for s in &mut acc.0 {
            *s /= n;
        }
        Ok(acc)
    }

    /// True iff every coordinate has the identical bit pattern (distinguishes
    /// -0.0 from 0.0 and compares NaNs by payload, unlike `==`).
    pub fn bitwise_eq(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl std::ops::Index<usize> for ParamVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for ParamVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}
