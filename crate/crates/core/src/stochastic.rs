//! Discrete BM and GBM price paths and their continuum densities.
//!
//! Both processes are driven by standard-normal increments with `dt = 1`:
//!
//! * BM:  `P[t+1] = P[t] + P0 * sigma * dW` (additive, scale fixed by the initial price)
//! * GBM: `P[t+1] = P[t] * (1 + sigma * dW)` (multiplicative, zero drift)

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::seeding::{rng_from_seed, SimRng};

/// Multiplier used when `1 + sigma * dW` would not be positive.
pub const GBM_FLOOR_FACTOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProcessKind {
    Bm,
    Gbm,
}

impl std::fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProcessKind::Bm => "bm",
            ProcessKind::Gbm => "gbm",
        })
    }
}

impl std::str::FromStr for ProcessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bm" => Ok(ProcessKind::Bm),
            "gbm" => Ok(ProcessKind::Gbm),
            other => Err(Error::Domain(format!("unknown process kind '{other}' (expected bm or gbm)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceProcessSpec {
    pub kind: ProcessKind,
    pub p0: f64,
    /// Per-step relative volatility.
    pub sigma: f64,
    pub n_steps: usize,
    pub seed: u64,
}

impl PriceProcessSpec {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("p0", self.p0)?;
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Domain(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        if self.n_steps == 0 {
            return Err(Error::Domain("n_steps must be at least 1".into()));
        }
        Ok(())
    }

    /// Total variance `sigma^2 * n_steps` in relative units.
    pub fn total_variance(&self) -> f64 {
        self.sigma * self.sigma * self.n_steps as f64
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Streams `p0, P[1], ..., P[n_steps]` without allocating.
    pub fn prices(&self) -> PriceIter {
        PriceIter {
            spec: *self,
            rng: rng_from_seed(self.seed),
            current: self.p0,
            emitted: 0,
        }
    }
}

pub struct PriceIter {
    spec: PriceProcessSpec,
    rng: SimRng,
    current: f64,
    emitted: usize,
}

impl Iterator for PriceIter {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        if self.emitted > self.spec.n_steps {
            return None;
        }
        if self.emitted > 0 {
            let dw: f64 = self.rng.sample(StandardNormal);
            self.current = match self.spec.kind {
                ProcessKind::Bm => step_bm(self.current, self.spec.p0, self.spec.sigma, dw),
                ProcessKind::Gbm => step_gbm(self.current, self.spec.sigma, dw),
            };
        }
        self.emitted += 1;
        Some(self.current)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.spec.n_steps + 1 - self.emitted;
        (left, Some(left))
    }
}

impl ExactSizeIterator for PriceIter {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePath {
    pub prices: Vec<f64>,
    pub spec: PriceProcessSpec,
}

impl PricePath {
    /// Wraps externally supplied prices (e.g. deterministic test paths).
    pub fn from_prices(prices: Vec<f64>) -> Result<Self> {
        let p0 = *prices
            .first()
            .ok_or_else(|| Error::Domain("a price path needs at least one price".into()))?;
        ensure_positive("p0", p0)?;
        let spec = PriceProcessSpec {
            kind: ProcessKind::Gbm,
            p0,
            sigma: 0.0,
            n_steps: prices.len().saturating_sub(1),
            seed: 0,
        };
        Ok(Self { prices, spec })
    }

    pub fn n_steps(&self) -> usize {
        self.prices.len() - 1
    }

    pub fn initial(&self) -> f64 {
        self.prices[0]
    }

    pub fn last(&self) -> f64 {
        *self.prices.last().expect("non-empty path")
    }
}

#[inline]
pub fn step_bm(p_prev: f64, p0: f64, sigma: f64, dw: f64) -> f64 {
    p_prev + p0 * sigma * dw
}

#[inline]
pub fn step_gbm(p_prev: f64, sigma: f64, dw: f64) -> f64 {
    let factor = 1.0 + sigma * dw;
    p_prev * if factor > 0.0 { factor } else { GBM_FLOOR_FACTOR }
}

fn ensure_scale(sigma: f64, t: f64) -> Result<()> {
    ensure_positive("sigma", sigma)?;
    ensure_positive("t", t)
}

/// Gaussian density with mean `p0` and standard deviation `p0 * sigma * sqrt(t)`.
pub fn pdf_bm(p: f64, p0: f64, sigma: f64, t: f64) -> Result<f64> {
    ensure_positive("p0", p0)?;
    ensure_scale(sigma, t)?;
    let var = p0 * p0 * sigma * sigma * t;
    let d = p - p0;
    Ok((-d * d / (2.0 * var)).exp() / (2.0 * PI * var).sqrt())
}

/// Log-normal density: `log(p / p0)` has mean `-sigma^2 t / 2` and variance `sigma^2 t`.
pub fn pdf_gbm(p: f64, p0: f64, sigma: f64, t: f64) -> Result<f64> {
    ensure_positive("p", p)?;
    ensure_positive("p0", p0)?;
    ensure_scale(sigma, t)?;
    let var = sigma * sigma * t;
    let z = (p / p0).ln() + 0.5 * var;
    Ok((-z * z / (2.0 * var)).exp() / (p * (2.0 * PI * var).sqrt()))
}

pub fn pdf(kind: ProcessKind, p: f64, p0: f64, sigma: f64, t: f64) -> Result<f64> {
    match kind {
        ProcessKind::Bm => pdf_bm(p, p0, sigma, t),
        ProcessKind::Gbm => pdf_gbm(p, p0, sigma, t),
    }
}

pub fn generate_path(spec: &PriceProcessSpec) -> Result<PricePath> {
    spec.validate()?;
    Ok(PricePath {
        prices: spec.prices().collect(),
        spec: *spec,
    })
}
