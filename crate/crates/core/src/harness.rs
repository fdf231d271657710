//! Multi-run campaigns, summaries, regime labels and parameter sweeps.
//!
//! Run `i` of a campaign draws its path from `derive_seed(seed, i)`. Runs are
//! simulated in parallel blocks and folded into the accumulators in run order,
//! so every output is bit-identical for any worker count. Sweeps reuse the
//! campaign seed at every grid point (common random numbers).

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arbitrage::{run_with_fees, ArbTarget, ArbitrageConfig, BandRule};
use crate::cfmm::Pool;
use crate::error::{ensure_positive, Error, Result};
use crate::metrics::RunMetrics;
use crate::seeding::derive_seed;
use crate::stats::{loglog_fit, Histogram, LinearFit, RunningMoments, DEFAULT_BINS};
use crate::stochastic::{generate_path, PriceProcessSpec};

/// Default cap on the in-memory per-run table.
pub const DEFAULT_MEMORY_BUDGET: u64 = 256 << 20;

const BLOCK: usize = 4096;

/// Metric columns, in table and histogram order.
pub const METRIC_FIELDS: [&str; 7] = ["il", "lvr", "volume", "fees", "lvr_net", "il_net", "final_price"];

fn field_values(m: &RunMetrics) -> [f64; 7] {
    [m.il, m.lvr, m.volume, m.fees, m.lvr_net(), m.il_net(), m.final_price]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeLabel {
    Short,
    Intermediate,
    Long,
}

impl std::fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RegimeLabel::Short => "short",
            RegimeLabel::Intermediate => "intermediate",
            RegimeLabel::Long => "long",
        })
    }
}

/// `Short` for `sigma^2 N <= 0.01`, `Long` for `sigma^2 N >= 1`.
pub fn classify_regime(sigma: f64, n_steps: usize) -> RegimeLabel {
    let total = sigma * sigma * n_steps as f64;
    if total <= 0.01 {
        RegimeLabel::Short
    } else if total >= 1.0 {
        RegimeLabel::Long
    } else {
        RegimeLabel::Intermediate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Price process; its `seed` field is ignored in favour of per-run seeds.
    pub process: PriceProcessSpec,
    pub liquidity: f64,
    pub fee: f64,
    pub n_runs: usize,
    pub seed: u64,
    pub band_rule: BandRule,
    pub target: ArbTarget,
    pub bins: usize,
    /// Bytes allowed for the per-run table when not streaming.
    pub memory_budget: u64,
    /// Two passes over the runs without keeping a per-run table.
    pub streaming: bool,
}

impl ExperimentConfig {
    pub fn new(process: PriceProcessSpec, liquidity: f64, fee: f64, n_runs: usize, seed: u64) -> Self {
        Self {
            process,
            liquidity,
            fee,
            n_runs,
            seed,
            band_rule: BandRule::default(),
            target: ArbTarget::default(),
            bins: DEFAULT_BINS,
            memory_budget: DEFAULT_MEMORY_BUDGET,
            streaming: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.process.validate()?;
        ensure_positive("liquidity", self.liquidity)?;
        if !(0.0..1.0).contains(&self.fee) {
            return Err(Error::Domain(format!("fee must lie in [0, 1), got {}", self.fee)));
        }
        if self.n_runs == 0 {
            return Err(Error::Domain("n_runs must be at least 1".into()));
        }
        if self.bins == 0 {
            return Err(Error::Domain("bins must be at least 1".into()));
        }
        Ok(())
    }

    fn arbitrage(&self) -> ArbitrageConfig {
        ArbitrageConfig {
            fee: self.fee,
            band_rule: self.band_rule,
            target: self.target,
            record_events: false,
        }
    }

    /// Bytes the per-run table would occupy.
    pub fn table_bytes(&self) -> u64 {
        self.n_runs as u64 * std::mem::size_of::<RunMetrics>() as u64
    }

    /// Simulates run `index` of the campaign.
    pub fn run(&self, index: usize) -> Result<RunMetrics> {
        let spec = self.process.with_seed(derive_seed(self.seed, index as u64));
        let path = generate_path(&spec)?;
        let pool = Pool::at_price(self.liquidity, spec.p0, self.fee)?;
        Ok(run_with_fees(&path, pool, &self.arbitrage())?.metrics)
    }
}

/// Mean, standard error and shape of one metric across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub stderr: f64,
    pub variance: f64,
    pub skewness: f64,
}

impl From<&RunningMoments> for MetricSummary {
    fn from(m: &RunningMoments) -> Self {
        Self {
            mean: m.mean(),
            stderr: m.stderr(),
            variance: m.variance(),
            skewness: m.skewness(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_runs: usize,
    pub n_steps: usize,
    pub sigma: f64,
    pub fee: f64,
    pub regime: RegimeLabel,
    /// Keyed by [`METRIC_FIELDS`] plus `n_arb_events`.
    pub metrics: BTreeMap<String, MetricSummary>,
    /// Total steps divided by total arbitrage events; `None` without events.
    pub mean_wait: Option<f64>,
    /// Fraction of runs whose IL net of fees is negative.
    pub frac_il_net_negative: f64,
}

impl Summary {
    pub fn get(&self, field: &str) -> &MetricSummary {
        &self.metrics[field]
    }

    pub fn mean(&self, field: &str) -> f64 {
        self.get(field).mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub config: ExperimentConfig,
    /// Per-run records in run order; `None` in streaming mode.
    pub runs: Option<Vec<RunMetrics>>,
    /// One histogram per entry of [`METRIC_FIELDS`].
    pub histograms: BTreeMap<String, Histogram>,
    pub summary: Summary,
}

#[derive(Default)]
struct Accumulator {
    fields: [RunningMoments; 7],
    events: RunningMoments,
    total_events: u64,
    il_net_negative: usize,
}

impl Accumulator {
    fn push(&mut self, m: &RunMetrics) {
        for (acc, v) in self.fields.iter_mut().zip(field_values(m)) {
            acc.push(v);
        }
        self.events.push(m.n_arb_events as f64);
        self.total_events += m.n_arb_events;
        self.il_net_negative += (m.il_net() < 0.0) as usize;
    }

    fn summary(&self, cfg: &ExperimentConfig) -> Summary {
        let mut metrics: BTreeMap<String, MetricSummary> = METRIC_FIELDS
            .iter()
            .zip(&self.fields)
            .map(|(name, m)| (name.to_string(), MetricSummary::from(m)))
            .collect();
        metrics.insert("n_arb_events".into(), MetricSummary::from(&self.events));
        let n_steps = cfg.process.n_steps;
        Summary {
            n_runs: cfg.n_runs,
            n_steps,
            sigma: cfg.process.sigma,
            fee: cfg.fee,
            regime: classify_regime(cfg.process.sigma, n_steps),
            metrics,
            mean_wait: (self.total_events > 0)
                .then(|| (n_steps as f64 * cfg.n_runs as f64) / self.total_events as f64),
            frac_il_net_negative: self.il_net_negative as f64 / cfg.n_runs as f64,
        }
    }
}

/// Simulates all runs block by block, handing each block to `sink` in run order.
fn for_each_block<F: FnMut(&[RunMetrics])>(cfg: &ExperimentConfig, mut sink: F) -> Result<()> {
    let mut start = 0;
    while start < cfg.n_runs {
        let end = (start + BLOCK).min(cfg.n_runs);
        let block = (start..end).into_par_iter().map(|i| cfg.run(i)).collect::<Result<Vec<_>>>()?;
        sink(&block);
        start = end;
    }
    Ok(())
}

pub fn run_campaign(cfg: &ExperimentConfig) -> Result<Campaign> {
    cfg.validate()?;
    let required = cfg.table_bytes();
    if !cfg.streaming && required > cfg.memory_budget {
        return Err(Error::ResourceGuard {
            required,
            budget: cfg.memory_budget,
        });
    }
    tracing::debug!(n_runs = cfg.n_runs, streaming = cfg.streaming, "running campaign");
    let mut acc = Accumulator::default();
    let (runs, histograms) = if cfg.streaming {
        for_each_block(cfg, |block| block.iter().for_each(|m| acc.push(m)))?;
        let mut hists = acc
            .fields
            .iter()
            .map(|m| Histogram::empty_uniform(m, cfg.bins))
            .collect::<Result<Vec<_>>>()?;
        for_each_block(cfg, |block| {
            for m in block {
                for (h, v) in hists.iter_mut().zip(field_values(m)) {
                    h.insert(v);
                }
            }
        })?;
        (None, hists)
    } else {
        let mut runs = Vec::with_capacity(cfg.n_runs);
        for_each_block(cfg, |block| {
            block.iter().for_each(|m| acc.push(m));
            runs.extend_from_slice(block);
        })?;
        let hists = (0..METRIC_FIELDS.len())
            .map(|k| {
                let column: Vec<f64> = runs.iter().map(|m| field_values(m)[k]).collect();
                Histogram::uniform_with_moments(&column, cfg.bins, &acc.fields[k])
            })
            .collect::<Result<Vec<_>>>()?;
        (Some(runs), hists)
    };
    let histograms = METRIC_FIELDS.iter().map(|s| s.to_string()).zip(histograms).collect();
    Ok(Campaign {
        config: *cfg,
        runs,
        histograms,
        summary: acc.summary(cfg),
    })
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SweepAxis {
    Sigma(Vec<f64>),
    /// Step counts with the per-step volatility rescaled so `sigma^2 N` stays fixed.
    Steps { grid: Vec<usize>, total_variance: f64 },
    Fee(Vec<f64>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Sigma(_) => "sigma",
            SweepAxis::Steps { .. } => "n_steps",
            SweepAxis::Fee(_) => "fee",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: String,
    pub rows: Vec<SweepRow>,
    /// Log-log fits keyed by `<metric>_vs_<axis>`.
    pub fits: BTreeMap<String, LinearFit>,
    /// Fee at which the mean wait between arbitrages crosses two steps.
    pub crossover_fee: Option<f64>,
}

impl SweepTable {
    pub fn column(&self, field: &str) -> Vec<f64> {
        self.rows.iter().map(|r| r.summary.mean(field)).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value).collect()
    }
}

fn sweep_row(cfg: &ExperimentConfig, value: f64) -> Result<SweepRow> {
    let mut c = *cfg;
    c.streaming = true;
    Ok(SweepRow {
        value,
        summary: run_campaign(&c)?.summary,
    })
}

fn fit_into(fits: &mut BTreeMap<String, LinearFit>, key: &str, xs: &[f64], ys: &[f64]) {
    if let Ok(fit) = loglog_fit(xs, ys) {
        fits.insert(key.to_string(), fit);
    }
}

/// Mean volume (and LVR) as a function of per-step volatility at fixed `N`.
pub fn sweep_volume_vs_sigma(base: &ExperimentConfig, grid: &[f64]) -> Result<SweepTable> {
    let rows = grid
        .iter()
        .map(|&sigma| {
            let mut c = *base;
            c.process.sigma = sigma;
            sweep_row(&c, sigma)
        })
        .collect::<Result<Vec<_>>>()?;
    finish_sweep("sigma", rows, &["volume", "lvr"])
}

/// Mean volume and LVR as functions of `N` with `sigma^2 N = total_variance`.
pub fn sweep_volume_vs_steps(base: &ExperimentConfig, grid: &[usize], total_variance: f64) -> Result<SweepTable> {
    ensure_positive("total_variance", total_variance)?;
    let rows = grid
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::Domain("step grid values must be positive".into()));
            }
            let mut c = *base;
            c.process.n_steps = n;
            c.process.sigma = (total_variance / n as f64).sqrt();
            sweep_row(&c, n as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    finish_sweep("n_steps", rows, &["volume", "lvr"])
}

/// Per-fee means of every metric, with the large-fee tail fit
/// (`f / sigma >= 10`) and the `mean_wait = 2` crossover.
pub fn sweep_fee(base: &ExperimentConfig, grid: &[f64]) -> Result<SweepTable> {
    let rows = grid
        .iter()
        .map(|&fee| {
            let mut c = *base;
            c.fee = fee;
            sweep_row(&c, fee)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = finish_sweep("fee", rows, &[])?;
    let sigma = base.process.sigma;
    let tail: Vec<&SweepRow> = table.rows.iter().filter(|r| sigma > 0.0 && r.value / sigma >= 10.0).collect();
    let xs: Vec<f64> = tail.iter().map(|r| r.value).collect();
    for field in ["volume", "lvr", "fees", "n_arb_events"] {
        let ys: Vec<f64> = tail.iter().map(|r| r.summary.mean(field)).collect();
        fit_into(&mut table.fits, &format!("{field}_vs_fee_tail"), &xs, &ys);
    }
    table.crossover_fee = crossover(&table.rows, 2.0);
    Ok(table)
}

fn finish_sweep(axis: &str, rows: Vec<SweepRow>, fitted: &[&str]) -> Result<SweepTable> {
    let mut table = SweepTable {
        axis: axis.to_string(),
        rows,
        fits: BTreeMap::new(),
        crossover_fee: None,
    };
    let xs = table.values();
    for field in fitted {
        let ys = table.column(field);
        fit_into(&mut table.fits, &format!("{field}_vs_{axis}"), &xs, &ys);
    }
    Ok(table)
}

/// First grid interval where the mean wait crosses `level`, interpolated in `ln f`.
fn crossover(rows: &[SweepRow], level: f64) -> Option<f64> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.value > 0.0)
        .filter_map(|r| r.summary.mean_wait.map(|w| (r.value, w)))
        .collect();
    points.windows(2).find_map(|w| {
        let ((f0, w0), (f1, w1)) = (w[0], w[1]);
        if (w0 - level) * (w1 - level) <= 0.0 && w0 != w1 {
            let s = (level - w0) / (w1 - w0);
            Some((f0.ln() + s * (f1.ln() - f0.ln())).exp())
        } else {
            None
        }
    })
}
