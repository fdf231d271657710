//! Arbitrage between an external oracle price path and the pool.
//!
//! Without fees the pool is moved to the oracle price on every step. With a
//! fee `f` nothing happens while the oracle stays inside the no-trade band
//! `[p_amm (1 - f), p_amm / (1 - f)]`; once it leaves, the arbitrageur trades
//! the pool to the target price and pays `f` on the token-x leg.
//!
//! LVR is charged over executed jumps only (pre-trade to post-trade pool
//! price). IL is measured from the initial price to the final pool price.

use serde::{Deserialize, Serialize};

use crate::cfmm::Pool;
use crate::error::{Error, Result};
use crate::metrics::{il_between, lvr_step, RunMetrics};
use crate::stochastic::PricePath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArbMode {
    NoFee,
    FeeBand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BandRule {
    /// Upper edge `p / (1 - f)`.
    #[default]
    Exact,
    /// Upper edge `p (1 + f)`.
    Linearized,
}

/// Where the pool price lands after an arbitrage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ArbTarget {
    /// The arbitrageur trades until the marginal profit net of the fee is
    /// zero, leaving the oracle exactly on the band edge.
    #[default]
    BandEdge,
    /// The pool is moved onto the oracle price.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArbitrageConfig {
    pub fee: f64,
    pub band_rule: BandRule,
    pub target: ArbTarget,
    /// Keep per-event records (off for large campaigns).
    pub record_events: bool,
}

impl ArbitrageConfig {
    pub fn new(fee: f64) -> Self {
        Self {
            fee,
            band_rule: BandRule::default(),
            target: ArbTarget::default(),
            record_events: false,
        }
    }

    pub fn mode(&self) -> ArbMode {
        if self.fee == 0.0 {
            ArbMode::NoFee
        } else {
            ArbMode::FeeBand
        }
    }

    /// No-trade band `(lower, upper)` around the pool price.
    pub fn band(&self, p_amm: f64) -> (f64, f64) {
        let lower = p_amm * (1.0 - self.fee);
        let upper = match self.band_rule {
            BandRule::Exact => p_amm / (1.0 - self.fee),
            BandRule::Linearized => p_amm * (1.0 + self.fee),
        };
        (lower, upper)
    }

    /// Post-trade pool price for an oracle outside the band, `None` inside it.
    pub fn target_price(&self, p_amm: f64, p_oracle: f64) -> Option<f64> {
        let (lower, upper) = self.band(p_amm);
        let up = p_oracle > upper;
        if !up && p_oracle >= lower {
            return None;
        }
        Some(match self.target {
            ArbTarget::Oracle => p_oracle,
            ArbTarget::BandEdge if up => match self.band_rule {
                BandRule::Exact => p_oracle * (1.0 - self.fee),
                BandRule::Linearized => p_oracle / (1.0 + self.fee),
            },
            ArbTarget::BandEdge => p_oracle / (1.0 - self.fee),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArbEvent {
    pub step: usize,
    pub p_amm_before: f64,
    pub p_amm_after: f64,
    pub volume_x: f64,
    pub fee_x: f64,
    pub lvr_increment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArbOutcome {
    pub metrics: RunMetrics,
    /// Empty unless events were requested.
    pub events: Vec<ArbEvent>,
    pub final_pool: Pool,
}

fn oracle_price(path: &PricePath, step: usize) -> Result<f64> {
    let price = path.prices[step];
    if price > 0.0 && price.is_finite() {
        Ok(price)
    } else {
        Err(Error::NonPositivePrice { step, price })
    }
}

fn simulate(path: &PricePath, pool: Pool, cfg: &ArbitrageConfig) -> Result<ArbOutcome> {
    let liquidity = pool.liquidity();
    let p0 = oracle_price(path, 0)?;
    let mut pool = pool.swap_to_price(p0)?.pool;
    let mut p_amm = p0;
    let mut metrics = RunMetrics {
        final_price: p0,
        ..RunMetrics::default()
    };
    let mut events = Vec::new();
    for step in 1..path.prices.len() {
        let p_oracle = oracle_price(path, step)?;
        let target = match cfg.mode() {
            ArbMode::NoFee => Some(p_oracle),
            ArbMode::FeeBand => cfg.target_price(p_amm, p_oracle),
        };
        let Some(target) = target else { continue };
        if target == p_amm {
            continue;
        }
        let swap = pool.swap_to_price(target)?;
        let lvr = lvr_step(liquidity, p_amm, target)?;
        metrics.lvr += lvr;
        metrics.volume += swap.volume_x;
        metrics.fees += swap.fee_x;
        metrics.n_arb_events += 1;
        if cfg.record_events {
            events.push(ArbEvent {
                step,
                p_amm_before: p_amm,
                p_amm_after: target,
                volume_x: swap.volume_x,
                fee_x: swap.fee_x,
                lvr_increment: lvr,
            });
        }
        pool = swap.pool;
        p_amm = target;
    }
    metrics.final_price = p_amm;
    metrics.il = il_between(liquidity, p0, p_amm)?;
    Ok(ArbOutcome {
        metrics,
        events,
        final_pool: pool,
    })
}

/// Pool follows the oracle one step behind, with no fee.
pub fn run_no_fee(path: &PricePath, pool: Pool, record_events: bool) -> Result<ArbOutcome> {
    if pool.fee() != 0.0 {
        return Err(Error::Domain(format!("run_no_fee needs a fee-free pool, got f = {}", pool.fee())));
    }
    let cfg = ArbitrageConfig {
        record_events,
        ..ArbitrageConfig::new(0.0)
    };
    simulate(path, pool, &cfg)
}

/// Fee-band arbitrage; the pool's own fee is replaced by `cfg.fee`.
pub fn run_with_fees(path: &PricePath, pool: Pool, cfg: &ArbitrageConfig) -> Result<ArbOutcome> {
    if !(0.0..1.0).contains(&cfg.fee) {
        return Err(Error::Domain(format!("fee must lie in [0, 1), got {}", cfg.fee)));
    }
    let pool = Pool::at_price(pool.liquidity(), pool.spot_price(), cfg.fee)?;
    simulate(path, pool, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaitStatistics {
    pub mean_wait: f64,
    /// `counts[k]` is the number of waits of exactly `k + 1` steps.
    pub counts: Vec<u64>,
}

/// Steps between successive arbitrage events, the first measured from step 0.
pub fn arb_wait_statistics(events: &[ArbEvent], n_steps: usize) -> Result<WaitStatistics> {
    if events.is_empty() {
        return Err(Error::NoArbitrage);
    }
    let mut counts = Vec::new();
    let mut previous = 0;
    for event in events {
        if event.step <= previous || event.step > n_steps {
            return Err(Error::Domain(format!("event step {} out of order or beyond {n_steps}", event.step)));
        }
        let wait = event.step - previous;
        if counts.len() < wait {
            counts.resize(wait, 0);
        }
        counts[wait - 1] += 1;
        previous = event.step;
    }
    Ok(WaitStatistics {
        mean_wait: previous as f64 / events.len() as f64,
        counts,
    })
}
