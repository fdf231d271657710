//! Inverse-CDF sampling of IL and the sum-of-draws experiment.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::il_dist::{il_density_u, ILDistParams, IlMoments};
use crate::error::{Error, Result};
use crate::quadrature::integrate_with;
use crate::seeding::{derive_seed, rng_from_seed, SimRng};
use crate::stats::{Histogram, RunningMoments, DEFAULT_BINS};

/// Number of log-spaced knots in `u = sqrt(IL)` (plus the origin).
pub const CDF_KNOTS: usize = 4096;

const CHUNK: usize = 1 << 16;

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch-Carlson).
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// `xs` must be strictly increasing and `ys` monotone.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::Domain(format!("need at least two matching knots, got {n} and {}", ys.len())));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("interpolation abscissae must be strictly increasing".into()));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = ys.windows(2).zip(&h).map(|(w, h)| (w[1] - w[0]) / h).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = delta[0];
        slopes[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            let (d0, d1) = (delta[i - 1], delta[i]);
            if d0 * d1 > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                slopes[i] = (w1 + w2) / (w1 / d0 + w2 / d1);
            }
        }
        Ok(Self { xs, ys, slopes })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.xs.partition_point(|&k| k <= x) - 1;
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

/// Tabulated CDF of IL with its inverse, built once and shared across threads.
#[derive(Debug, Clone)]
pub struct IlSampler {
    params: ILDistParams,
    moments: IlMoments,
    cdf_u: MonotoneCubic,
    inverse: MonotoneCubic,
}

impl IlSampler {
    pub fn new(params: &ILDistParams) -> Result<Self> {
        let moments = params.moments()?;
        let (ub, ua) = params.u_limits();
        let u_max = ub.max(ua);
        let u_min = 1e-7 * params.u_scale().min(u_max);
        let ratio = (u_max / u_min).ln();
        let mut knots = Vec::with_capacity(CDF_KNOTS + 1);
        knots.push(0.0);
        knots.extend((0..CDF_KNOTS).map(|i| u_min * (ratio * i as f64 / (CDF_KNOTS - 1) as f64).exp()));
        *knots.last_mut().expect("non-empty") = u_max;

        let g = |u: f64| il_density_u(u, params);
        let mut cum = Vec::with_capacity(knots.len());
        cum.push(0.0);
        let mut total = 0.0;
        for w in knots.windows(2) {
            total += integrate_with(g, w[0], w[1], 1e-300, 1e-10)?.value;
            cum.push(total);
        }
        if !(total.is_finite() && (total - 1.0).abs() < 1e-3) {
            return Err(Error::Numerical {
                what: "IL CDF table does not normalize".into(),
                residual: (total - 1.0).abs(),
            });
        }
        let mut fs = Vec::with_capacity(knots.len());
        let mut us = Vec::with_capacity(knots.len());
        for (&u, &c) in knots.iter().zip(&cum) {
            let f = c / total;
            if fs.last().is_none_or(|&last| f > last) {
                fs.push(f);
                us.push(u);
            }
        }
        if fs.len() < 2 {
            return Err(Error::Numerical {
                what: "IL CDF table is degenerate".into(),
                residual: 0.0,
            });
        }
        let cdf_u = MonotoneCubic::new(us.clone(), fs.clone())?;
        let inverse = MonotoneCubic::new(fs, us)?;
        Ok(Self {
            params: *params,
            moments,
            cdf_u,
            inverse,
        })
    }

    pub fn params(&self) -> &ILDistParams {
        &self.params
    }

    /// Moments of the exact density, from quadrature.
    pub fn moments(&self) -> IlMoments {
        self.moments
    }

    /// Tabulated `P(IL <= il)`.
    pub fn cdf(&self, il: f64) -> f64 {
        if il <= 0.0 {
            0.0
        } else {
            self.cdf_u.eval(il.sqrt()).clamp(0.0, 1.0)
        }
    }

    /// IL at cumulative probability `f`.
    pub fn quantile(&self, f: f64) -> f64 {
        let u = self.inverse.eval(f).max(0.0);
        u * u
    }

    pub fn draw(&self, rng: &mut SimRng) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// `n` draws; chunk `i` uses `derive_seed(seed, i)`, so the output does not
    /// depend on the thread count.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let n_chunks = n.div_ceil(CHUNK);
        let chunks: Vec<Vec<f64>> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let len = CHUNK.min(n - c * CHUNK);
                let mut rng = rng_from_seed(derive_seed(seed, c as u64));
                (0..len).map(|_| self.draw(&mut rng)).collect()
            })
            .collect();
        chunks.concat()
    }
}

pub fn sample_il(params: &ILDistParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Domain("sample_il needs n >= 1".into()));
    }
    Ok(IlSampler::new(params)?.sample(n, seed))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CltSumResult {
    pub sums: Vec<f64>,
    pub histogram: Histogram,
    /// Exact single-draw mean and variance.
    pub single_mean: f64,
    pub single_variance: f64,
}

impl CltSumResult {
    pub fn expected_mean(&self, n_per_sum: usize) -> f64 {
        n_per_sum as f64 * self.single_mean
    }

    pub fn expected_variance(&self, n_per_sum: usize) -> f64 {
        n_per_sum as f64 * self.single_variance
    }
}

/// Histogram of `n_repeats` sums of `n_per_sum` IL draws. Repeat `r` draws from
/// a generator seeded with `derive_seed(seed, r)`.
pub fn clt_sum_experiment(params: &ILDistParams, n_per_sum: usize, n_repeats: usize, seed: u64) -> Result<CltSumResult> {
    if n_per_sum == 0 || n_repeats == 0 {
        return Err(Error::Domain("clt_sum_experiment needs n_per_sum >= 1 and n_repeats >= 1".into()));
    }
    let sampler = IlSampler::new(params)?;
    let sums: Vec<f64> = (0..n_repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(seed, r as u64));
            (0..n_per_sum).map(|_| sampler.draw(&mut rng)).sum()
        })
        .collect();
    let moments: RunningMoments = sums.iter().copied().collect();
    let histogram = Histogram::uniform_with_moments(&sums, DEFAULT_BINS, &moments)?;
    let m = sampler.moments();
    Ok(CltSumResult {
        sums,
        histogram,
        single_mean: m.mean,
        single_variance: m.variance(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_critical, ks_statistic};
    use crate::stochastic::ProcessKind;

    fn sumil() -> ILDistParams {
        ILDistParams {
            p0: 100.0,
            liquidity: 10_000.0,
            sigma: 0.1,
            t: 1.0,
            process: ProcessKind::Gbm,
        }
    }

    #[test]
    fn monotone_cubic_interpolates_and_preserves_shape() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = vec![0.0, 0.1, 0.1, 0.9, 1.0];
        let m = MonotoneCubic::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(m.eval(*x), *y);
        }
        let mut last = -1.0;
        for i in 0..=400 {
            let v = m.eval(i as f64 / 100.0);
            assert!(v >= last - 1e-15);
            last = v;
        }
        assert!((m.eval(1.5) - 0.1).abs() < 1e-15);
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn table_matches_exact_cdf() {
        let s = IlSampler::new(&sumil()).unwrap();
        assert_eq!(s.cdf(0.0), 0.0);
        assert!(s.cdf(1e6) > 1.0 - 1e-12);
        for f in [1e-6, 0.01, 0.3, 0.5, 0.9, 0.999] {
            let il = s.quantile(f);
            assert!((s.cdf(il) - f).abs() < 1e-6, "f {f}");
        }
    }

    #[test]
    fn samples_are_nonnegative_and_unbiased() {
        let p = sumil();
        let sampler = IlSampler::new(&p).unwrap();
        let xs = sampler.sample(1_000_000, 11);
        assert!(xs.iter().all(|&x| x >= 0.0));
        let m: RunningMoments = xs.iter().copied().collect();
        let exact = sampler.moments().mean;
        assert!((m.mean() - exact).abs() < 3.0 * m.stderr(), "{} vs {exact}", m.mean());
        assert!((m.mean() / 2.5 - 1.0).abs() < 0.02);
        assert_eq!(xs, sampler.sample(1_000_000, 11));
    }

    #[test]
    fn ks_against_table() {
        let p = sumil();
        let sampler = IlSampler::new(&p).unwrap();
        let mut xs = sampler.sample(20_000, 3);
        xs.sort_by(f64::total_cmp);
        let d = ks_statistic(&xs, |x| sampler.cdf(x));
        assert!(d < ks_critical(xs.len(), 0.01), "D = {d}");
    }

    #[test]
    fn degenerate_sum_reproduces_density() {
        let p = sumil();
        let r = clt_sum_experiment(&p, 1, 20_000, 5).unwrap();
        let sampler = IlSampler::new(&p).unwrap();
        let mut xs = r.sums.clone();
        xs.sort_by(f64::total_cmp);
        assert!(ks_statistic(&xs, |x| sampler.cdf(x)) < ks_critical(xs.len(), 0.01));
        assert_eq!(r.histogram.counts.iter().sum::<u64>(), 20_000);
    }

    #[test]
    fn sums_have_expected_moments() {
        let p = sumil();
        let n = 400;
        let r = clt_sum_experiment(&p, n, 4000, 9).unwrap();
        let m: RunningMoments = r.sums.iter().copied().collect();
        assert!((m.mean() - r.expected_mean(n)).abs() < 3.0 * m.stderr());
        assert!((m.variance() / r.expected_variance(n) - 1.0).abs() < 0.1);
    }
}
