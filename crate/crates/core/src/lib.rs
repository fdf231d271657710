//! Constant-product AMM laboratory.
//!
//! Exact pool arithmetic, BM/GBM price paths, impermanent loss (IL) and
//! loss-versus-rebalancing (LVR) accounting, a fee-band arbitrage engine,
//! closed-form and quadrature analytics for the IL distribution, and a
//! seed-reproducible campaign harness.
//!
//! All portfolio values are denominated in token-x units. Time is measured
//! in steps (`dt = 1`), so a per-step volatility `sigma` over `n` steps has
//! total variance `sigma^2 * n`.

pub mod analytics;
pub mod arbitrage;
pub mod cfmm;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod quadrature;
pub mod seeding;
pub mod stats;
pub mod stochastic;

pub use error::{Error, Result};
