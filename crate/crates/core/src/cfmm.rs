//! Constant-product pool arithmetic (`x * y = L^2`, spot price `p = y / x`).
//!
//! Values are in token-x units. Fees are tallied by the caller and never
//! deposited back into the reserves, so liquidity is constant for the
//! lifetime of a pool.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// `1 - sqrt(p / q)` without cancellation when `q` is close to `p`.
#[inline]
pub(crate) fn one_minus_sqrt_ratio(p: f64, q: f64) -> f64 {
    (q - p) / (q + (p * q).sqrt())
}

/// Token amounts `(x, y) = (L / sqrt(p), L * sqrt(p))` held by liquidity `L` at price `p`.
pub fn reserves_at_price(liquidity: f64, price: f64) -> Result<(f64, f64)> {
    ensure_positive("liquidity", liquidity)?;
    ensure_positive("price", price)?;
    let root = price.sqrt();
    Ok((liquidity / root, liquidity * root))
}

/// Value of the pool position at `price`: `2 L / sqrt(p)`.
pub fn position_value(liquidity: f64, price: f64) -> Result<f64> {
    ensure_positive("liquidity", liquidity)?;
    ensure_positive("price", price)?;
    Ok(2.0 * liquidity / price.sqrt())
}

/// Value at `price_now` of the reserves deposited at `price_entry`, held outside the pool.
pub fn hodl_value(liquidity: f64, price_entry: f64, price_now: f64) -> Result<f64> {
    ensure_positive("price_now", price_now)?;
    let (x0, y0) = reserves_at_price(liquidity, price_entry)?;
    Ok(x0 + y0 / price_now)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pool {
    liquidity: f64,
    reserve_x: f64,
    reserve_y: f64,
    fee: f64,
}

/// Result of moving a pool to a new spot price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Swap {
    pub pool: Pool,
    /// `|x(p_target) - x(p_before)|`.
    pub volume_x: f64,
    /// `fee * volume_x`, paid to the LP outside the reserves.
    pub fee_x: f64,
}

impl Pool {
    pub fn at_price(liquidity: f64, price: f64, fee: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&fee) {
            return Err(Error::Domain(format!("fee must lie in [0, 1), got {fee}")));
        }
        let (reserve_x, reserve_y) = reserves_at_price(liquidity, price)?;
        Ok(Self {
            liquidity,
            reserve_x,
            reserve_y,
            fee,
        })
    }

    pub fn liquidity(&self) -> f64 {
        self.liquidity
    }

    pub fn reserve_x(&self) -> f64 {
        self.reserve_x
    }

    pub fn reserve_y(&self) -> f64 {
        self.reserve_y
    }

    pub fn fee(&self) -> f64 {
        self.fee
    }

    pub fn spot_price(&self) -> f64 {
        self.reserve_y / self.reserve_x
    }

    pub fn value(&self) -> f64 {
        self.reserve_x + self.reserve_y / self.spot_price()
    }

    /// Trade along the curve until the spot price equals `target`.
    ///
    /// The direction follows `sign(target - spot)`; the reported volume is
    /// always the magnitude of the token-x leg.
    pub fn swap_to_price(&self, target: f64) -> Result<Swap> {
        ensure_positive("target price", target)?;
        let (reserve_x, reserve_y) = reserves_at_price(self.liquidity, target)?;
        let pool = Pool {
            reserve_x,
            reserve_y,
            ..*self
        };
        let volume_x = (reserve_x - self.reserve_x).abs();
        Ok(Swap {
            pool,
            volume_x,
            fee_x: self.fee * volume_x,
        })
    }
}
