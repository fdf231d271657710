//! Closed-form and semi-analytic results.
//!
//! Volatility conventions: `sigma` is relative (per unit time) unless a name
//! says `sigma_abs`. An absolute volatility `sigma_abs` on a price level `p0`
//! corresponds to `sigma = sigma_abs / p0`; liquidity relates to the initial
//! token-x reserve through `L = x0 * sqrt(p0)`.

mod first_passage;
mod il_dist;
mod sampling;

pub use first_passage::{barrier_distance, first_passage, BarrierSpec, FirstPassage, StepKind};
pub use il_dist::{
    fit_small_il_law, il_density_u, il_pdf, il_pdf_branches_u, invert_il, Branch, ILDistParams, IlMoments,
    SmallIlLaw,
};
pub use sampling::{clt_sum_experiment, sample_il, CltSumResult, IlSampler, MonotoneCubic, CDF_KNOTS};

use crate::error::{ensure_positive, Result};
use crate::metrics::il_between;
use crate::quadrature::{integrate_with, Integral};

/// `<LVR(T)> = L sigma^2 T / (4 sqrt(p0))`, valid while `sigma^2 T < 1`.
pub fn expected_lvr(liquidity: f64, p0: f64, sigma: f64, t: f64) -> Result<f64> {
    ensure_positive("liquidity", liquidity)?;
    ensure_positive("p0", p0)?;
    ensure_positive("t", t)?;
    if !(sigma >= 0.0) {
        return Err(crate::Error::Domain(format!("sigma must be non-negative, got {sigma}")));
    }
    let total = sigma * sigma * t;
    if total >= 1.0 {
        tracing::warn!(sigma_sq_t = total, "expected_lvr used outside the intermediate regime");
    }
    Ok(liquidity * total / (4.0 * p0.sqrt()))
}

/// Same expectation in the absolute-volatility convention: `x0 sigma_abs^2 t / (4 p0^2)`.
pub fn expected_lvr_absolute(x0: f64, p0: f64, sigma_abs: f64, t: f64) -> Result<f64> {
    expected_lvr(x0 * p0.sqrt(), p0, sigma_abs / p0, t)
}

/// Rate `dLVR/dt = L sigma_abs^2 / (4 p^{5/2})` along a trajectory.
pub fn lvr_ode_rhs(liquidity: f64, sigma_abs: f64, p: f64) -> Result<f64> {
    ensure_positive("liquidity", liquidity)?;
    ensure_positive("p", p)?;
    Ok(liquidity * sigma_abs * sigma_abs / (4.0 * p.powf(2.5)))
}

/// `<IL(t)>` by integrating `IL(p) rho(p, t)` over the price domain.
///
/// The BM density is cut at `p = 0`; both processes are truncated far in the
/// tails (see [`ILDistParams::price_domain`]).
pub fn expected_il_quadrature(params: &ILDistParams) -> Result<Integral> {
    params.validate()?;
    if params.sigma == 0.0 {
        return Ok(Integral { value: 0.0, error: 0.0 });
    }
    let (lo, hi) = params.price_domain();
    let p0 = params.p0;
    let integrand = |p: f64| il_between(params.liquidity, p0, p).unwrap_or(0.0) * params.price_density(p);
    let scale = params.liquidity / p0.sqrt() * params.sigma * params.sigma * params.t;
    let abs_tol = 1e-13 * scale;
    let below = integrate_with(integrand, lo, p0, abs_tol, 1e-11)?;
    let above = integrate_with(integrand, p0, hi, abs_tol, 1e-11)?;
    Ok(Integral {
        value: below.value + above.value,
        error: below.error + above.error,
    })
}
