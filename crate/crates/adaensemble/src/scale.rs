//! Affine min-max scaling for network inputs and targets.

use crate::error::{Error, Result};

/// Maps `[low, high]` onto `[target_lo, target_hi]` affinely.
///
/// The default target range `[0.1, 0.9]` keeps sigmoid-family activations
/// away from their saturated tails. Values outside the fitted range map
/// outside the target range; there is no clipping.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    pub low: f64,
    pub high: f64,
    pub target_lo: f64,
    pub target_hi: f64,
}

pub const DEFAULT_TARGET: (f64, f64) = (0.1, 0.9);

impl MinMaxScaler {
    /// Fit on training values only; the test period must not influence the range.
    pub fn fit(values: &[f64]) -> Result<Self> {
        Self::fit_with_target(values, DEFAULT_TARGET.0, DEFAULT_TARGET.1)
    }

    pub fn fit_with_target(values: &[f64], target_lo: f64, target_hi: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::data("cannot fit scaler on empty series"));
        }
        let low = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let high = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self::new(low, high, target_lo, target_hi)
    }

    pub fn new(low: f64, high: f64, target_lo: f64, target_hi: f64) -> Result<Self> {
        if !(high > low) {
            return Err(Error::data(format!(
                "degenerate range: high ({high}) must exceed low ({low})"
            )));
        }
        if !(target_hi > target_lo) {
            return Err(Error::invalid("target_hi must exceed target_lo"));
        }
        Ok(MinMaxScaler { low, high, target_lo, target_hi })
    }

    /// Identity scaler, for models that operate on raw values.
    pub fn identity() -> Self {
        MinMaxScaler { low: 0.0, high: 1.0, target_lo: 0.0, target_hi: 1.0 }
    }

    pub fn apply_one(&self, x: f64) -> f64 {
        (x - self.low) / (self.high - self.low) * (self.target_hi - self.target_lo)
            + self.target_lo
    }

    pub fn invert_one(&self, y: f64) -> f64 {
        (y - self.target_lo) / (self.target_hi - self.target_lo) * (self.high - self.low)
            + self.low
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&x| self.apply_one(x)).collect()
    }

    pub fn invert(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&y| self.invert_one(y)).collect()
    }
}
