pub mod analytics;
pub mod backtest;
pub mod error;
pub mod filters;
pub mod montecarlo;
pub mod simulation;
pub mod strategies;

pub use error::ParamError;
