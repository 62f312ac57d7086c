//! Volatility workbench for Markov-switch smooth-transition long-memory
//! models: path simulation, second-moment stability analysis, regime
//! filtering and variance forecasting, Gibbs-sampling estimation and
//! value-at-risk backtesting.

pub mod backtest;
pub mod error;
pub mod filter;
pub mod fracdiff;
pub mod gibbs;
pub mod model;
pub mod stability;
pub mod stats;

pub use error::{Error, Result};
