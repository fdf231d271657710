//! Exact distribution of impermanent loss at a fixed horizon.
//!
//! For a price density `rho(p, t)` the IL density picks up one term per
//! branch of the inverse map `p(IL)`. With `q = p0^{1/4} sqrt(IL / L)`:
//!
//! * below `p0`: `p = p0 / (1 + q)^2`
//! * above `p0`: `p = p0 / (1 - q)^2`, only while `q < 1`
//!
//! and the density is
//! `p0^{5/4} / (sqrt(L) sqrt(IL)) * [rho(p_below) / (1 + q)^3 + theta rho(p_above) / (1 - q)^3]`.
//!
//! Integrals are taken over `u = sqrt(IL)`, where the density
//! `g(u) = 2 u f(u^2)` stays bounded at the origin.

use serde::{Deserialize, Serialize};

use crate::cfmm::one_minus_sqrt_ratio;
use crate::error::{ensure_positive, Error, Result};
use crate::quadrature::integrate_with;
use crate::stats::{linear_fit, loglog_fit};
use crate::stochastic::{pdf, ProcessKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Below,
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ILDistParams {
    pub p0: f64,
    pub liquidity: f64,
    /// Relative volatility per unit time.
    pub sigma: f64,
    pub t: f64,
    pub process: ProcessKind,
}

/// Normalization and first two raw moments of the IL density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IlMoments {
    pub mass: f64,
    pub mean: f64,
    pub second: f64,
}

impl IlMoments {
    pub fn variance(&self) -> f64 {
        self.second - self.mean * self.mean
    }
}

impl ILDistParams {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("p0", self.p0)?;
        ensure_positive("liquidity", self.liquidity)?;
        ensure_positive("t", self.t)?;
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Domain(format!("sigma must be non-negative and finite, got {}", self.sigma)));
        }
        Ok(())
    }

    fn validate_strict(&self) -> Result<()> {
        self.validate()?;
        ensure_positive("sigma", self.sigma)
    }

    /// `L / sqrt(p0)`: the IL reached as the price tends to zero or infinity.
    /// The upper branch only exists below it.
    pub fn il_ceiling(&self) -> f64 {
        self.liquidity / self.p0.sqrt()
    }

    /// Relative spread `sigma sqrt(t)`.
    pub fn spread(&self) -> f64 {
        self.sigma * self.t.sqrt()
    }

    /// Typical size of `sqrt(IL)`, used to place quadrature breakpoints.
    pub fn u_scale(&self) -> f64 {
        0.5 * self.il_ceiling().sqrt() * self.spread()
    }

    /// Price density at the horizon; zero outside the positive half-line.
    pub fn price_density(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        pdf(self.process, p, self.p0, self.sigma, self.t).unwrap_or(0.0)
    }

    /// Price interval outside of which the density is treated as zero.
    ///
    /// BM keeps ten standard deviations on each side, cut off before the
    /// origin. GBM keeps twelve log-standard deviations around the log mean.
    pub fn price_domain(&self) -> (f64, f64) {
        let s = self.spread();
        match self.process {
            ProcessKind::Bm => ((self.p0 * (1.0 - 10.0 * s)).max(self.p0 * 1e-6), self.p0 * (1.0 + 10.0 * s)),
            ProcessKind::Gbm => {
                let m = -0.5 * s * s;
                (self.p0 * (m - 12.0 * s).exp(), self.p0 * (m + 12.0 * s).exp())
            }
        }
    }

    /// `sqrt(IL)` at the price-domain edges, as `(below, above)`.
    pub fn u_limits(&self) -> (f64, f64) {
        let (lo, hi) = self.price_domain();
        let root = self.il_ceiling().sqrt();
        (
            root * one_minus_sqrt_ratio(self.p0, lo).abs(),
            root * one_minus_sqrt_ratio(self.p0, hi).abs(),
        )
    }

    /// Integral of `u^{2k} g(u)` for `k = 0, 1, 2`.
    pub fn moments(&self) -> Result<IlMoments> {
        self.validate_strict()?;
        let m = |k: i32| integrate_u(self, |u| u.powi(2 * k));
        Ok(IlMoments {
            mass: m(0)?,
            mean: m(1)?,
            second: m(2)?,
        })
    }
}

/// Integrates `weight(u) g(u)` over both branches, splitting the range at
/// doubling multiples of the typical scale so the bulk is never skipped.
pub(crate) fn integrate_u<W: Fn(f64) -> f64>(params: &ILDistParams, weight: W) -> Result<f64> {
    let (ub, ua) = params.u_limits();
    let scale = params.u_scale();
    let mut total = 0.0;
    for (branch, limit) in [(Branch::Below, ub), (Branch::Above, ua)] {
        let f = |u: f64| {
            let (below, above) = il_pdf_branches_u(u, params);
            weight(u)
                * match branch {
                    Branch::Below => below,
                    Branch::Above => above,
                }
        };
        let mut a = 0.0;
        let mut b = scale.min(limit);
        while a < limit {
            let piece = integrate_with(&f, a, b, 1e-300, 1e-12)?;
            total += piece.value;
            a = b;
            b = (2.0 * b).min(limit);
        }
    }
    Ok(total)
}

/// Price with the given IL relative to `p0` on the requested branch.
pub fn invert_il(p0: f64, liquidity: f64, il: f64, branch: Branch) -> Result<f64> {
    ensure_positive("p0", p0)?;
    ensure_positive("liquidity", liquidity)?;
    if !(il >= 0.0 && il.is_finite()) {
        return Err(Error::Domain(format!("il must be non-negative and finite, got {il}")));
    }
    let q = p0.powf(0.25) * (il / liquidity).sqrt();
    match branch {
        Branch::Below => Ok(p0 / ((1.0 + q) * (1.0 + q))),
        Branch::Above => {
            if q >= 1.0 {
                Err(Error::Domain(format!(
                    "il {il} has no preimage above p0 (ceiling {})",
                    liquidity / p0.sqrt()
                )))
            } else {
                Ok(p0 / ((1.0 - q) * (1.0 - q)))
            }
        }
    }
}

/// Branch contributions `(below, above)` to the density of `u = sqrt(IL)`.
///
/// Each term is restricted to the branch's share of the price domain.
pub fn il_pdf_branches_u(u: f64, params: &ILDistParams) -> (f64, f64) {
    if u < 0.0 {
        return (0.0, 0.0);
    }
    let (lo, hi) = params.price_domain();
    let k = params.p0.powf(0.25) / params.liquidity.sqrt();
    let q = k * u;
    let pref = 2.0 * params.p0 * k;
    let p_below = params.p0 / ((1.0 + q) * (1.0 + q));
    let below = if p_below >= lo {
        pref * params.price_density(p_below) / (1.0 + q).powi(3)
    } else {
        0.0
    };
    let above = if q < 1.0 {
        let p_above = params.p0 / ((1.0 - q) * (1.0 - q));
        if p_above <= hi {
            pref * params.price_density(p_above) / (1.0 - q).powi(3)
        } else {
            0.0
        }
    } else {
        0.0
    };
    (below, above)
}

/// Density of `u = sqrt(IL)`; finite at `u = 0`.
pub fn il_density_u(u: f64, params: &ILDistParams) -> f64 {
    let (below, above) = il_pdf_branches_u(u, params);
    below + above
}

/// Density of IL at `il > 0`.
pub fn il_pdf(il: f64, params: &ILDistParams) -> Result<f64> {
    params.validate_strict()?;
    if !(il > 0.0 && il.is_finite()) {
        return Err(Error::Domain(format!("il_pdf needs il > 0, got {il}")));
    }
    let u = il.sqrt();
    Ok(il_density_u(u, params) / (2.0 * u))
}

/// Fitted small-IL behaviour `f(IL) ~ a / sqrt(IL) * exp(-c IL / (2 sigma^2 t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallIlLaw {
    /// Log-log slope of the density deep in the small-IL region.
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub amplitude: f64,
    pub decay: f64,
}

/// Fits the small-IL law. `scale` is `L sigma^2 t / (4 sqrt(p0))`; the exponent
/// comes from `IL in [1e-8, 1e-5] scale` and `(a, c)` from `IL in (0, scale / 2]`.
pub fn fit_small_il_law(params: &ILDistParams) -> Result<SmallIlLaw> {
    params.validate_strict()?;
    let scale = params.il_ceiling() * params.sigma * params.sigma * params.t / 4.0;
    let grid = |lo: f64, hi: f64, n: usize, log: bool| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                if log {
                    lo * (hi / lo).powf(s)
                } else {
                    lo + (hi - lo) * s
                }
            })
            .collect()
    };
    let xs = grid(1e-8 * scale, 1e-5 * scale, 40, true);
    let ys = xs.iter().map(|&x| il_pdf(x, params)).collect::<Result<Vec<_>>>()?;
    let slope = loglog_fit(&xs, &ys)?;

    let xs = grid(1e-4 * scale, 0.5 * scale, 60, false);
    let ys = xs
        .iter()
        .map(|&x| il_pdf(x, params).map(|f| (f * x.sqrt()).ln()))
        .collect::<Result<Vec<_>>>()?;
    let fit = linear_fit(&xs, &ys)?;
    Ok(SmallIlLaw {
        exponent: slope.slope,
        exponent_stderr: slope.slope_stderr,
        amplitude: fit.intercept.exp(),
        decay: -fit.slope * 2.0 * params.sigma * params.sigma * params.t,
    })
}
