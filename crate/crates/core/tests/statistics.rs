//! Monte Carlo behaviour of the price processes, the arbitrage engine and the
//! campaign harness.

use amm_lab::arbitrage::{arb_wait_statistics, run_no_fee, run_with_fees, ArbitrageConfig};
use amm_lab::cfmm::Pool;
use amm_lab::harness::{run_campaign, ExperimentConfig, METRIC_FIELDS};
use amm_lab::seeding::derive_seed;
use amm_lab::stats::{ks_two_sample, linear_fit, loglog_fit, RunningMoments};
use amm_lab::stochastic::{generate_path, PriceProcessSpec, ProcessKind};

fn spec(kind: ProcessKind, sigma: f64, n_steps: usize) -> PriceProcessSpec {
    PriceProcessSpec {
        kind,
        p0: 100.0,
        sigma,
        n_steps,
        seed: 0,
    }
}

fn final_prices(kind: ProcessKind, sigma: f64, n_steps: usize, runs: usize, seed: u64) -> Vec<f64> {
    (0..runs)
        .map(|i| spec(kind, sigma, n_steps).with_seed(derive_seed(seed, i as u64)).prices().last().unwrap())
        .collect()
}

#[test]
fn bm_and_gbm_agree_at_short_times() {
    let mut bm = final_prices(ProcessKind::Bm, 0.001, 200, 40_000, 11);
    let mut gbm = final_prices(ProcessKind::Gbm, 0.001, 200, 40_000, 11);
    bm.sort_by(f64::total_cmp);
    gbm.sort_by(f64::total_cmp);
    let d = ks_two_sample(&bm, &gbm);
    assert!(d < 0.02, "KS distance {d}");
    let sd = gbm.iter().copied().collect::<RunningMoments>().std_dev();
    let expected = 100.0 * 0.001 * 200f64.sqrt();
    assert!((sd / expected - 1.0).abs() < 0.02, "stdev {sd} vs {expected}");
}

#[test]
fn gbm_skews_at_long_times() {
    let n = 40_000;
    let bm: RunningMoments = final_prices(ProcessKind::Bm, 0.015, 200, n, 12).into_iter().collect();
    let gbm: RunningMoments = final_prices(ProcessKind::Gbm, 0.015, 200, n, 12).into_iter().collect();
    let skew_se = (6.0 / n as f64).sqrt();
    assert!(gbm.skewness() > 0.0);
    assert!(
        gbm.skewness() - bm.skewness() > 5.0 * skew_se * 2f64.sqrt(),
        "gbm {} bm {}",
        gbm.skewness(),
        bm.skewness()
    );
}

#[test]
fn bm_variance_grows_linearly() {
    let (sigma, n_steps, runs) = (0.002, 200, 40_000);
    let checkpoints: Vec<usize> = (1..=8).map(|k| 25 * k).collect();
    let mut acc = vec![RunningMoments::new(); checkpoints.len()];
    for i in 0..runs {
        let path: Vec<f64> = spec(ProcessKind::Bm, sigma, n_steps)
            .with_seed(derive_seed(13, i as u64))
            .prices()
            .collect();
        for (a, &c) in acc.iter_mut().zip(&checkpoints) {
            a.push(path[c]);
        }
    }
    let t: Vec<f64> = checkpoints.iter().map(|&c| c as f64).collect();
    let var: Vec<f64> = acc.iter().map(RunningMoments::variance).collect();
    let fit = linear_fit(&t, &var).unwrap();
    let expected = (100.0 * sigma) * (100.0 * sigma);
    assert!((fit.slope / expected - 1.0).abs() < 0.05, "slope {} vs {expected}", fit.slope);
}

#[test]
fn il_and_lvr_means_agree_in_intermediate_regime() {
    let mut cfg = ExperimentConfig::new(spec(ProcessKind::Gbm, 0.005, 1000), 1e4, 0.0, 10_000, 14);
    cfg.streaming = true;
    let s = run_campaign(&cfg).unwrap().summary;
    let (il, lvr) = (s.get("il"), s.get("lvr"));
    let combined = (il.stderr.powi(2) + lvr.stderr.powi(2)).sqrt();
    assert!((il.mean - lvr.mean).abs() < 3.0 * combined, "il {il:?} lvr {lvr:?}");
}

#[test]
fn round_trip_path_has_lvr_but_no_il() {
    use amm_lab::stochastic::PricePath;
    let path = PricePath::from_prices(vec![100.0, 121.0, 100.0]).unwrap();
    let m = run_no_fee(&path, Pool::at_price(1e4, 100.0, 0.0).unwrap(), false).unwrap().metrics;
    assert!(m.il.abs() < 1e-12);
    assert!(m.lvr > 0.0);
}

#[test]
fn engine_matches_metrics_on_simulated_paths() {
    for i in 0..200 {
        let path = generate_path(&spec(ProcessKind::Gbm, 0.01, 500).with_seed(derive_seed(15, i))).unwrap();
        let engine = run_no_fee(&path, Pool::at_price(1e4, 100.0, 0.0).unwrap(), false).unwrap().metrics;
        let direct = amm_lab::metrics::accumulate(&path, 1e4, &[500]).unwrap()[0];
        assert!((engine.lvr - direct.lvr).abs() <= 1e-10 * direct.lvr);
        assert!((engine.volume - direct.volume).abs() <= 1e-10 * direct.volume);
    }
}

fn fee_campaign(sigma: f64, n_steps: usize, fee: f64, runs: usize) -> amm_lab::harness::Summary {
    let mut cfg = ExperimentConfig::new(spec(ProcessKind::Gbm, sigma, n_steps), 1e4, fee, runs, 16);
    cfg.streaming = true;
    run_campaign(&cfg).unwrap().summary
}

#[test]
fn fees_stay_below_no_fee_lvr() {
    let baseline = fee_campaign(0.001, 1000, 0.0, 2000).mean("lvr");
    for ratio in [0.1, 1.0, 10.0] {
        let s = fee_campaign(0.001, 1000, ratio * 0.001, 2000);
        assert!(s.mean("fees") < baseline, "f/sigma {ratio}: fees {} lvr0 {baseline}", s.mean("fees"));
    }
}

#[test]
fn small_fee_limit_is_continuous() {
    let zero = fee_campaign(0.001, 1000, 0.0, 2000);
    let tiny = fee_campaign(0.001, 1000, 1e-9, 2000);
    for field in ["lvr", "volume", "il"] {
        let (a, b) = (zero.mean(field), tiny.mean(field));
        assert!((a - b).abs() < 1e-3 * a, "{field}: {a} vs {b}");
    }
}

#[test]
fn arbitrage_waits_grow_linearly_with_fee() {
    let sigma = 0.001;
    let ratios = [10.0, 14.0, 20.0, 28.0, 40.0];
    let mut waits = Vec::new();
    for r in ratios {
        let cfg = ArbitrageConfig {
            record_events: true,
            ..ArbitrageConfig::new(r * sigma)
        };
        let mut total = RunningMoments::new();
        for i in 0..100 {
            let path = generate_path(&spec(ProcessKind::Gbm, sigma, 50_000).with_seed(derive_seed(17, i))).unwrap();
            let out = run_with_fees(&path, Pool::at_price(1e4, 100.0, 0.0).unwrap(), &cfg).unwrap();
            if let Ok(w) = arb_wait_statistics(&out.events, 50_000) {
                total.push(w.mean_wait);
            }
        }
        waits.push(total.mean());
    }
    let fit = loglog_fit(&ratios, &waits).unwrap();
    assert!((fit.slope - 1.0).abs() <= 0.15, "exponent {} waits {waits:?}", fit.slope);
}

#[test]
fn every_step_arbitrages_without_fee() {
    let path = generate_path(&spec(ProcessKind::Gbm, 0.01, 300).with_seed(5)).unwrap();
    let cfg = ArbitrageConfig {
        record_events: true,
        ..ArbitrageConfig::new(0.0)
    };
    let out = run_with_fees(&path, Pool::at_price(1e4, 100.0, 0.0).unwrap(), &cfg).unwrap();
    assert_eq!(arb_wait_statistics(&out.events, 300).unwrap().mean_wait, 1.0);
}

fn small_config(runs: usize) -> ExperimentConfig {
    ExperimentConfig::new(spec(ProcessKind::Gbm, 0.002, 300), 1e4, 3e-4, runs, 18)
}

#[test]
fn campaigns_are_identical_for_any_worker_count() {
    let cfg = small_config(5000);
    let run_with = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_campaign(&cfg).unwrap())
    };
    let one = run_with(1);
    for threads in [2, 3, 8] {
        let other = run_with(threads);
        assert_eq!(one.runs, other.runs);
        assert_eq!(one.summary, other.summary);
        assert_eq!(one.histograms, other.histograms);
    }
}

#[test]
fn histograms_conserve_runs() {
    for streaming in [false, true] {
        let mut cfg = small_config(3000);
        cfg.streaming = streaming;
        let c = run_campaign(&cfg).unwrap();
        assert_eq!(c.histograms.len(), METRIC_FIELDS.len());
        for (name, h) in &c.histograms {
            assert_eq!(h.counts.iter().sum::<u64>(), 3000, "{name}");
            assert_eq!(h.n_total, 3000);
        }
    }
}

#[test]
fn stderr_halves_when_runs_quadruple() {
    let small = run_campaign(&small_config(2000)).unwrap().summary;
    let large = run_campaign(&small_config(8000)).unwrap().summary;
    for field in ["il", "lvr", "volume", "fees"] {
        let ratio = small.get(field).stderr / large.get(field).stderr;
        assert!((ratio / 2.0 - 1.0).abs() < 0.2, "{field}: ratio {ratio}");
    }
}
