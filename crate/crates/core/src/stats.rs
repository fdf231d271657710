//! Histograms, moment accumulators, least-squares fits and goodness-of-fit
//! statistics used by the campaign harness and the test suites.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 50;

/// Streaming mean/variance/skewness (Welford with a third central moment).
///
/// Pushing the same values in the same order always gives bit-identical output.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMoments {
    n: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    min: f64,
    max: f64,
}

impl RunningMoments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        if self.n == 0 {
            self.min = x;
            self.max = x;
        } else {
            self.min = self.min.min(x);
            self.max = self.max.max(x);
        }
        let n0 = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let term = delta * delta_n * n0;
        self.mean += delta_n;
        self.m3 += term * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n as f64 - 1.0)
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    /// Sample skewness `g1 = m3 / m2^{3/2}`; zero for degenerate samples.
    pub fn skewness(&self) -> f64 {
        if self.n < 2 || self.m2 <= 0.0 {
            return 0.0;
        }
        let n = self.n as f64;
        (n.sqrt() * self.m3) / self.m2.powf(1.5)
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn moments(&self) -> Moments {
        Moments {
            mean: self.mean(),
            variance: self.variance(),
            skewness: self.skewness(),
        }
    }
}

impl FromIterator<f64> for RunningMoments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = RunningMoments::new();
        for x in iter {
            m.push(x);
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
}

impl From<&RunningMoments> for MeanStderr {
    fn from(m: &RunningMoments) -> Self {
        MeanStderr {
            mean: m.mean(),
            stderr: m.stderr(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub n_total: u64,
    pub moments: Moments,
}

impl Histogram {
    /// `bins` uniform bins over `[min, max]` of the data.
    ///
    /// A constant sample gets a unit-width range centred on its value.
    pub fn uniform(data: &[f64], bins: usize) -> Result<Self> {
        let moments: RunningMoments = data.iter().copied().collect();
        Self::uniform_with_moments(data, bins, &moments)
    }

    /// Same as [`Histogram::uniform`] but reuses precomputed moments and range.
    pub fn uniform_with_moments(data: &[f64], bins: usize, moments: &RunningMoments) -> Result<Self> {
        let mut hist = Self::empty_uniform(moments, bins)?;
        for &x in data {
            hist.insert(x);
        }
        Ok(hist)
    }

    /// Uniform bins spanning the range recorded in `moments`, with no counts yet.
    pub fn empty_uniform(moments: &RunningMoments, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::Domain("histogram needs at least one bin".into()));
        }
        if moments.count() == 0 {
            return Err(Error::Domain("histogram of an empty sample".into()));
        }
        let (mut lo, mut hi) = (moments.min(), moments.max());
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Domain("histogram of non-finite data".into()));
        }
        if hi <= lo {
            lo -= 0.5;
            hi += 0.5;
        }
        let width = (hi - lo) / bins as f64;
        let mut bin_edges: Vec<f64> = (0..bins).map(|i| lo + width * i as f64).collect();
        bin_edges.push(hi);
        Ok(Self {
            bin_edges,
            counts: vec![0; bins],
            n_total: 0,
            moments: moments.moments(),
        })
    }

    /// Histogram with caller-provided strictly increasing edges; values outside are dropped.
    pub fn with_edges(data: &[f64], bin_edges: Vec<f64>) -> Result<Self> {
        if bin_edges.len() < 2 || bin_edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("bin edges must be strictly increasing".into()));
        }
        let inside: Vec<f64> = data
            .iter()
            .copied()
            .filter(|&x| x >= bin_edges[0] && x <= *bin_edges.last().unwrap())
            .collect();
        let moments: RunningMoments = inside.iter().copied().collect();
        let mut hist = Self {
            counts: vec![0; bin_edges.len() - 1],
            bin_edges,
            n_total: 0,
            moments: moments.moments(),
        };
        for x in inside {
            hist.insert(x);
        }
        Ok(hist)
    }

    pub(crate) fn insert(&mut self, x: f64) {
        let edges = &self.bin_edges;
        let last = self.counts.len() - 1;
        let idx = match edges.partition_point(|&e| e <= x) {
            0 => 0,
            i => (i - 1).min(last),
        };
        self.counts[idx] += 1;
        self.n_total += 1;
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// Counts divided by `n_total * width`.
    pub fn density(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(&c, w)| c as f64 / (self.n_total as f64 * (w[1] - w[0])))
            .collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

/// Ordinary least squares `y = intercept + slope * x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Domain("linear fit needs at least two paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&a| (a - mx) * (a - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::Domain("linear fit needs distinct x values".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if x.len() > 2 {
        let rss: f64 = x.iter().zip(y).map(|(&a, &b)| (b - intercept - slope * a).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
    })
}

/// Power-law exponent: least squares on `(ln x, ln y)` over strictly positive pairs.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(&a, &b)| a > 0.0 && b > 0.0)
        .map(|(&a, &b)| (a.ln(), b.ln()))
        .unzip();
    linear_fit(&lx, &ly)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Cells left after pooling sparse ones.
    pub cells: usize,
}

impl ChiSquareTest {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

/// Pearson goodness-of-fit of observed counts against cell probabilities.
///
/// Adjacent cells are pooled left to right until every expected count is at
/// least `min_expected`. Probabilities need not sum to one; the remainder is
/// treated as an extra cell with zero observations only if `observed` does not
/// already account for it.
pub fn chi_square_gof(observed: &[u64], probabilities: &[f64], min_expected: f64) -> Result<ChiSquareTest> {
    if observed.len() != probabilities.len() || observed.is_empty() {
        return Err(Error::Domain("observed and probabilities must have equal, non-zero length".into()));
    }
    let n: u64 = observed.iter().sum();
    let n = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probabilities) {
        obs += o as f64;
        exp += p * n;
        if exp >= min_expected {
            cells.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 || obs > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => cells.push((obs, exp)),
        }
    }
    if cells.len() < 2 {
        return Err(Error::Domain("too few populated cells for a chi-square test".into()));
    }
    let statistic: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
        cells: cells.len(),
    })
}

/// One-sample Kolmogorov-Smirnov statistic of `sorted` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov-Smirnov statistic; both inputs must be sorted.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic one-sample KS critical value at significance `alpha`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / (n as f64).sqrt()
}
