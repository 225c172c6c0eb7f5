//! Shared training plumbing for the neural forecasters: gradient-descent
//! hyperparameters, the chronological validation split, and lag selection.

use crate::error::{Error, Result};

/// Gradient-descent hyperparameters shared by both network kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            epochs: 500,
            batch_size: 32,
            momentum: 0.0,
            clip_norm: None,
        }
    }
}

/// Chronological 80/20 split of sample indices: the first 80% train, the
/// last 20% validate. Never shuffles, so no future sample leaks backwards.
pub fn validation_split(n_samples: usize) -> Result<(std::ops::Range<usize>, std::ops::Range<usize>)> {
    if n_samples < 5 {
        return Err(Error::data(format!(
            "need at least 5 samples for a validation split, got {n_samples}"
        )));
    }
    let cut = (n_samples * 4) / 5;
    Ok((0..cut, cut..n_samples))
}

/// Smallest index whose score ties the minimum. Scores tie when they agree
/// within a relative `1e-9`, so exact duplicates collapse while genuinely
/// better candidates still win.
pub fn pick_best(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &score) in scores.iter().enumerate().skip(1) {
        let tol = 1e-9 * scores[best].abs().max(1e-300);
        if score < scores[best] - tol {
            best = i;
        }
    }
    best
}

/// The `n_lags` lags in `1..=max_lag` with the largest absolute
/// autocorrelation, returned sorted ascending.
pub fn select_lags(values: &[f64], n_lags: usize, max_lag: usize) -> Result<Vec<usize>> {
    if n_lags == 0 || max_lag == 0 || n_lags > max_lag {
        return Err(Error::invalid("need 1 <= n_lags <= max_lag"));
    }
    if values.len() <= max_lag + 1 {
        return Err(Error::data("series too short for the requested lag window"));
    }
    let mut scored: Vec<(usize, f64)> = (1..=max_lag)
        .map(|lag| (lag, crate::sarima::autocorrelation(values, lag).abs()))
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut lags: Vec<usize> = scored.into_iter().take(n_lags).map(|(lag, _)| lag).collect();
    lags.sort_unstable();
    Ok(lags)
}

/// Build `(window, target)` pairs from a series: the window holds the
/// values at `lags` before the target, oldest lag first.
pub fn lagged_pairs(values: &[f64], lags: &[usize]) -> Vec<(Vec<f64>, f64)> {
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    let mut pairs = Vec::new();
    for t in max_lag..values.len() {
        let window: Vec<f64> =
            lags.iter().rev().map(|&lag| values[t - lag]).collect();
        pairs.push((window, values[t]));
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_chronological() {
        let (train, val) = validation_split(10).unwrap();
        assert_eq!(train, 0..8);
        assert_eq!(val, 8..10);
        assert!(validation_split(3).is_err());
    }

    #[test]
    fn pick_best_prefers_smallest_on_ties() {
        assert_eq!(pick_best(&[1.0, 1.0, 1.0]), 0);
        assert_eq!(pick_best(&[2.0, 1.0, 1.0 + 1e-12]), 1);
        assert_eq!(pick_best(&[2.0, 1.5, 0.5]), 2);
    }

    #[test]
    fn top_autocorrelation_lags_on_a_periodic_series() {
        let series: Vec<f64> = (0..400).map(|t| (t % 8) as f64).collect();
        let lags = select_lags(&series, 2, 10).unwrap();
        assert!(lags.contains(&8), "lags {lags:?} should contain the period");
    }

    #[test]
    fn lagged_pairs_orient_oldest_first() {
        let values = [10.0, 20.0, 30.0, 40.0, 50.0];
        let pairs = lagged_pairs(&values, &[1, 2]);
        assert_eq!(pairs.len(), 3);
        // Target 30: lags [2, 1] reversed -> [value@t-2, value@t-1].
        assert_eq!(pairs[0], (vec![10.0, 20.0], 30.0));
        assert_eq!(pairs[2], (vec![30.0, 40.0], 50.0));
    }
}
