//! Impermanent loss, loss-versus-rebalancing, shadow-portfolio rebalancing
//! quantities and arbitrage volume along a price trajectory.

use serde::{Deserialize, Serialize};

use crate::cfmm::one_minus_sqrt_ratio;
use crate::error::{ensure_positive, Result};
use crate::stochastic::PricePath;

/// Per-run accumulators, all in token-x units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub il: f64,
    pub lvr: f64,
    pub volume: f64,
    pub fees: f64,
    pub n_arb_events: u64,
    pub final_price: f64,
}

impl RunMetrics {
    /// LVR net of collected fees.
    pub fn lvr_net(&self) -> f64 {
        self.lvr - self.fees
    }

    /// IL net of collected fees; negative means a net positive markout.
    pub fn il_net(&self) -> f64 {
        self.il - self.fees
    }
}

fn check(liquidity: f64, p: f64, q: f64) -> Result<()> {
    ensure_positive("liquidity", liquidity)?;
    ensure_positive("price", p)?;
    ensure_positive("next price", q)
}

/// `(L / sqrt(p)) * (1 - sqrt(p / p_final))^2`, the HODL value minus the pool value.
pub fn il_between(liquidity: f64, p_entry: f64, p_final: f64) -> Result<f64> {
    check(liquidity, p_entry, p_final)?;
    let d = one_minus_sqrt_ratio(p_entry, p_final);
    Ok(liquidity / p_entry.sqrt() * d * d)
}

/// LVR of a single rebalancing interval. Over one step it coincides with IL.
pub fn lvr_step(liquidity: f64, p: f64, p_next: f64) -> Result<f64> {
    il_between(liquidity, p, p_next)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rebalance {
    /// Token-y bought by the shadow portfolio (negative when it sells).
    pub delta_y: f64,
    /// Token-x the shadow portfolio spends on `delta_y` at the post-move price.
    pub delta_x_bar: f64,
    /// Token-x the pool gives up over the same move.
    pub delta_x: f64,
}

impl Rebalance {
    /// `delta_x - delta_x_bar`, which equals `lvr_step` for the same move.
    pub fn savings(&self) -> f64 {
        self.delta_x - self.delta_x_bar
    }
}

pub fn rebalance_quantities(liquidity: f64, p: f64, p_next: f64) -> Result<Rebalance> {
    check(liquidity, p, p_next)?;
    let x = liquidity / p.sqrt();
    let root = (p / p_next).sqrt();
    let d = one_minus_sqrt_ratio(p, p_next);
    // sqrt(p'/p) - 1 = (1 - sqrt(p/p')) / sqrt(p/p')
    let delta_y = liquidity * p.sqrt() * (d / root);
    let delta_x_bar = x * root * d;
    let delta_x = x * d;
    Ok(Rebalance {
        delta_y,
        delta_x_bar,
        delta_x,
    })
}

/// Token-x flow `|x(p_next) - x(p)|` needed to move the pool between prices.
pub fn volume_step(liquidity: f64, p: f64, p_next: f64) -> Result<f64> {
    check(liquidity, p, p_next)?;
    Ok(liquidity / p.sqrt() * one_minus_sqrt_ratio(p, p_next).abs())
}

/// Cumulative metrics of a path at each requested step index.
///
/// LVR and volume sum the exact per-step expressions; IL is measured from the
/// first price to the checkpoint price. `n_arb_events` counts steps where the
/// price moved.
pub fn accumulate(path: &PricePath, liquidity: f64, checkpoints: &[usize]) -> Result<Vec<RunMetrics>> {
    ensure_positive("liquidity", liquidity)?;
    let prices = &path.prices;
    let p0 = prices[0];
    ensure_positive("p0", p0)?;
    let mut sorted: Vec<(usize, usize)> = checkpoints.iter().copied().enumerate().map(|(i, c)| (c, i)).collect();
    sorted.sort_unstable();
    if let Some(&(last, _)) = sorted.last() {
        if last >= prices.len() {
            return Err(crate::Error::Domain(format!(
                "checkpoint {last} beyond path of {} steps",
                prices.len() - 1
            )));
        }
    }
    let mut acc = RunMetrics {
        final_price: p0,
        ..RunMetrics::default()
    };
    let mut step = 0;
    let mut results = vec![RunMetrics::default(); checkpoints.len()];
    for (checkpoint, slot) in sorted {
        while step < checkpoint {
            let (p, q) = (prices[step], prices[step + 1]);
            if q <= 0.0 {
                return Err(crate::Error::NonPositivePrice { step: step + 1, price: q });
            }
            acc.lvr += lvr_step(liquidity, p, q)?;
            acc.volume += volume_step(liquidity, p, q)?;
            if q != p {
                acc.n_arb_events += 1;
            }
            step += 1;
        }
        acc.final_price = prices[checkpoint];
        acc.il = il_between(liquidity, p0, acc.final_price)?;
        results[slot] = acc;
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfmm::{hodl_value, position_value};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn il_examples() {
        assert_eq!(il_between(10_000.0, 100.0, 100.0).unwrap(), 0.0);
        let il = il_between(10_000.0, 100.0, 121.0).unwrap();
        let oracle = hodl_value(10_000.0, 100.0, 121.0).unwrap() - position_value(10_000.0, 121.0).unwrap();
        assert!(rel(il, oracle) < 1e-12);
        assert!(rel(il, 1000.0 / 121.0) < 1e-13);
        assert!(il_between(10_000.0, 100.0, 100.0 / 1.21).unwrap() > 0.0);
        assert!(rel(il_between(10_000.0, 100.0, 100.0 / 1.21).unwrap(), 1000.0 * 0.1 * 0.1) < 1e-12);
        assert!(il_between(-1.0, 100.0, 100.0).is_err());
    }

    #[test]
    fn lvr_step_examples() {
        assert_eq!(lvr_step(10_000.0, 100.0, 100.0).unwrap(), 0.0);
        assert_eq!(lvr_step(10_000.0, 100.0, 121.0).unwrap(), il_between(10_000.0, 100.0, 121.0).unwrap());
        let (l, p) = (10_000.0, 100.0);
        let delta = 1e-4 * p;
        let ratio = lvr_step(l, p, p + delta).unwrap() / (delta * delta);
        let limit = l / (4.0 * p.powf(2.5));
        assert!(rel(ratio, limit) < 1e-3);
    }

    #[test]
    fn rebalance_examples() {
        let r = rebalance_quantities(10_000.0, 100.0, 100.0).unwrap();
        assert_eq!((r.delta_y, r.delta_x_bar, r.delta_x), (0.0, 0.0, 0.0));

        let r = rebalance_quantities(10_000.0, 100.0, 121.0).unwrap();
        assert!(rel(r.delta_x, 1000.0 / 11.0) < 1e-12);
        // (L/sqrt p)(sqrt(p/p') - p/p') = 1000 * (10/11 - 100/121)
        assert!(rel(r.delta_x_bar, 1000.0 * (10.0 / 11.0 - 100.0 / 121.0)) < 1e-12);
        // L sqrt(p) (sqrt(p'/p) - 1) = 1e5 * 0.1
        assert!(rel(r.delta_y, 10_000.0) < 1e-12);
        assert!(rel(r.savings(), lvr_step(10_000.0, 100.0, 121.0).unwrap()) < 1e-12);

        let r = rebalance_quantities(10_000.0, 100.0, 81.0).unwrap();
        assert!(r.delta_y < 0.0);
        assert!(r.savings() > 0.0);
    }

    #[test]
    fn volume_examples() {
        assert_eq!(volume_step(10_000.0, 100.0, 100.0).unwrap(), 0.0);
        assert!(rel(volume_step(10_000.0, 100.0, 121.0).unwrap(), 1000.0 - 10_000.0 / 11.0) < 1e-12);
        let exact = volume_step(10_000.0, 100.0, 100.1).unwrap();
        let linear = 10_000.0 / (2.0 * 1000.0) * 0.1;
        assert!(rel(exact, linear) < 0.01);
        // linearization stays within 1% up to |dp| = 0.01 p
        for dp in [-1.0, -0.3, 0.3, 1.0] {
            let exact = volume_step(10_000.0, 100.0, 100.0 + dp).unwrap();
            let linear = 10_000.0 / (2.0 * 100f64.powf(1.5)) * f64::abs(dp);
            assert!(rel(exact, linear) < 0.01, "dp {dp}");
        }
    }

    #[test]
    fn accumulate_examples() {
        let flat = PricePath::from_prices(vec![100.0; 11]).unwrap();
        let m = accumulate(&flat, 10_000.0, &[10]).unwrap()[0];
        assert_eq!((m.il, m.lvr, m.volume, m.n_arb_events), (0.0, 0.0, 0.0, 0));

        let round_trip = PricePath::from_prices(vec![100.0, 121.0, 100.0]).unwrap();
        let m = accumulate(&round_trip, 10_000.0, &[2]).unwrap()[0];
        assert_eq!(m.il, 0.0);
        let expected = lvr_step(10_000.0, 100.0, 121.0).unwrap() + lvr_step(10_000.0, 121.0, 100.0).unwrap();
        assert_eq!(m.lvr, expected);
        assert!(m.lvr > 0.0);

        let monotone = PricePath::from_prices(vec![100.0, 110.0, 121.0]).unwrap();
        let ms = accumulate(&monotone, 10_000.0, &[0, 1, 2]).unwrap();
        let brute = il_between(10_000.0, 100.0, 110.0).unwrap() + il_between(10_000.0, 110.0, 121.0).unwrap();
        assert_eq!(ms[2].lvr, brute);
        assert_eq!(ms[0], RunMetrics { final_price: 100.0, ..Default::default() });
        assert_eq!(ms[1].il, il_between(10_000.0, 100.0, 110.0).unwrap());
        assert_eq!(ms[2].il, il_between(10_000.0, 100.0, 121.0).unwrap());
    }

    #[test]
    fn accumulate_rejects_bad_input() {
        let path = PricePath::from_prices(vec![100.0, -1.0]).unwrap();
        assert!(matches!(
            accumulate(&path, 1.0, &[1]),
            Err(crate::Error::NonPositivePrice { step: 1, .. })
        ));
        let path = PricePath::from_prices(vec![100.0, 101.0]).unwrap();
        assert!(accumulate(&path, 1.0, &[5]).is_err());
    }
}
