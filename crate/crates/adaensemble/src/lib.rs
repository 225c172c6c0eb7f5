//! Decomposition-ensemble forecasting for interval ridership counts.
//!
//! The pipeline decomposes a series into a periodic trend, a deterministic
//! part and a volatility part with variational mode decomposition, fits a
//! seasonal ARIMA model, a peephole LSTM and an MLP to the respective
//! components, and recombines the component forecasts with another MLP.
//! The crate also ships the surrounding protocol: smart-card ingestion,
//! calendar splitting, leakage-safe train/test handling, component
//! measures, and a rolling-origin multi-horizon benchmark over six model
//! kinds.

pub mod error;
pub mod rng;

pub mod scale;
pub mod series;
pub mod stats;
pub mod synth;

pub mod poly;
pub mod vmd;

pub mod optim;
pub mod sertext;
pub mod sarima;
pub mod training;
pub mod mlp;
pub mod lstm;
pub mod ensemble;

pub use error::{Error, Result};

/// Binary entry point; returns the process exit code.
pub fn cli_main() -> i32 {
    0
}
