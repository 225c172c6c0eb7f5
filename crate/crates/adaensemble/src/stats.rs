//! Moment-based descriptive statistics for ridership series.

use crate::error::{Error, Result};

/// Population moments (denominator N). Kurtosis is the raw fourth
/// standardized moment, not excess, so a normal sample reads near 3.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptiveStats {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

pub fn descriptive_stats(values: &[f64]) -> Result<DescriptiveStats> {
    if values.len() < 4 {
        return Err(Error::data("need at least 4 points for moment statistics"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if m2 == 0.0 {
        return Err(Error::data("constant series: skewness undefined"));
    }
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let std = m2.sqrt();
    Ok(DescriptiveStats {
        mean,
        std,
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
    })
}
