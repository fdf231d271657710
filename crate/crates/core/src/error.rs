use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Quadrature or tabulation failed to converge.
    #[error("numerical failure: {what} (residual estimate {residual:.3e})")]
    Numerical { what: String, residual: f64 },

    /// A price path left the positive half-line where pool math is undefined.
    #[error("run aborted at step {step}: non-positive price {price}")]
    NonPositivePrice { step: usize, price: f64 },

    #[error("no arbitrage occurred")]
    NoArbitrage,

    /// Campaign would hold more per-run records than the memory budget allows.
    #[error("resource guard: {required} bytes of run records exceed budget of {budget} bytes (enable streaming)")]
    ResourceGuard { required: u64, budget: u64 },
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {value}")))
    }
}
