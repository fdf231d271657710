//! Command bodies: each turns a resolved config into an output bundle.

use amm_lab::analytics::{
    self, clt_sum_experiment, expected_il_quadrature, first_passage, il_pdf_branches_u, BarrierSpec, ILDistParams,
    IlSampler,
};
use amm_lab::arbitrage::{ArbTarget, BandRule};
use amm_lab::harness::{
    run_campaign, sweep_fee, sweep_volume_vs_sigma, sweep_volume_vs_steps, ExperimentConfig,
    SweepTable, METRIC_FIELDS,
};
use amm_lab::stats::{ks_statistic, Histogram, RunningMoments};
use amm_lab::stochastic::{PriceProcessSpec, ProcessKind};
use anyhow::{bail, Result};

use crate::bundle::{Bundle, Cell, Table};
use crate::config::{Config, ConfigError};

/// Schema of every CSV table, printed by `amm-lab schema`.
pub const SCHEMA: &str = include_str!("../schema.md");

fn domain(field: &str, message: impl Into<String>) -> anyhow::Error {
    ConfigError::new("config", None, Some(field), message).into()
}

fn process(cfg: &Config) -> Result<ProcessKind> {
    Ok(cfg.choice("process").parse()?)
}

fn experiment(cfg: &Config) -> Result<ExperimentConfig> {
    let spec = PriceProcessSpec {
        kind: process(cfg)?,
        p0: cfg.float("p0"),
        sigma: cfg.float("sigma"),
        n_steps: cfg.usize("steps"),
        seed: 0,
    };
    let mut e = ExperimentConfig::new(spec, cfg.float("L"), cfg.float("fee"), cfg.usize("runs"), cfg.uint("seed"));
    e.band_rule = match cfg.choice("band_rule").as_str() {
        "linearized" => BandRule::Linearized,
        _ => BandRule::Exact,
    };
    e.target = match cfg.choice("target").as_str() {
        "oracle" => ArbTarget::Oracle,
        _ => ArbTarget::BandEdge,
    };
    e.bins = cfg.usize("bins");
    e.streaming = cfg.flag("streaming");
    e.memory_budget = cfg.uint("memory_budget");
    e.validate().map_err(|err| domain("experiment", err.to_string()))?;
    Ok(e)
}

fn il_params(cfg: &Config) -> Result<ILDistParams> {
    let params = ILDistParams {
        p0: cfg.float("p0"),
        liquidity: cfg.float("L"),
        sigma: cfg.float("sigma"),
        t: cfg.opt_float("T").unwrap_or(cfg.uint("steps") as f64),
        process: process(cfg)?,
    };
    params.validate().map_err(|err| domain("analytic", err.to_string()))?;
    Ok(params)
}

pub fn simulate(cfg: &Config) -> Result<Bundle> {
    let e = experiment(cfg)?;
    let campaign = run_campaign(&e)?;
    let mut b = Bundle::new(&["simulate"], cfg);
    let s = &campaign.summary;
    b.result("regime", s.regime.to_string());
    b.result("mean_wait", s.mean_wait);
    b.result("frac_il_net_negative", s.frac_il_net_negative);
    b.result(
        "expected_lvr_closed_form",
        e.liquidity * e.process.sigma.powi(2) * e.process.n_steps as f64 / (4.0 * e.process.p0.sqrt()),
    );

    let mut summary = Table::new(&["metric", "mean", "stderr", "variance", "skewness"]);
    for (name, m) in &s.metrics {
        summary.push(vec![
            Cell::S(name.clone()),
            Cell::F(m.mean),
            Cell::F(m.stderr),
            Cell::F(m.variance),
            Cell::F(m.skewness),
        ]);
    }
    b.tables.insert("summary".into(), summary);

    if let Some(runs) = &campaign.runs {
        let mut header = vec!["run"];
        header.extend(METRIC_FIELDS);
        header.push("n_arb_events");
        let mut table = Table::new(&header);
        for (i, m) in runs.iter().enumerate() {
            table.push(vec![
                Cell::I(i as u64),
                Cell::F(m.il),
                Cell::F(m.lvr),
                Cell::F(m.volume),
                Cell::F(m.fees),
                Cell::F(m.lvr_net()),
                Cell::F(m.il_net()),
                Cell::F(m.final_price),
                Cell::I(m.n_arb_events),
            ]);
        }
        b.tables.insert("runs".into(), table);
    }
    b.histograms = campaign.histograms;
    Ok(b)
}

fn sweep_table(t: &SweepTable) -> Table {
    let mut header = vec!["value".to_string(), "sigma".into(), "n_steps".into(), "fee".into()];
    for f in METRIC_FIELDS.iter().chain(["n_arb_events"].iter()) {
        header.push(format!("{f}_mean"));
        header.push(format!("{f}_stderr"));
    }
    header.extend(["mean_wait".into(), "frac_il_net_negative".into(), "regime".into()]);
    let mut table = Table::new(&header);
    for row in &t.rows {
        let s = &row.summary;
        let mut cells = vec![
            Cell::F(row.value),
            Cell::F(s.sigma),
            Cell::I(s.n_steps as u64),
            Cell::F(s.fee),
        ];
        for f in METRIC_FIELDS.iter().chain(["n_arb_events"].iter()) {
            let m = s.get(f);
            cells.push(Cell::F(m.mean));
            cells.push(Cell::F(m.stderr));
        }
        cells.push(Cell::F(s.mean_wait.unwrap_or(f64::NAN)));
        cells.push(Cell::F(s.frac_il_net_negative));
        cells.push(Cell::S(s.regime.to_string()));
        table.push(cells);
    }
    table
}

pub fn sweep(axis: &str, cfg: &Config) -> Result<Bundle> {
    let e = experiment(cfg)?;
    let sigma = e.process.sigma;
    let table = match axis {
        "fee" => {
            let grid = cfg.float_list("grid").unwrap_or_else(|| {
                std::iter::once(0.0)
                    .chain([0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0, 20.0, 30.0, 50.0].map(|r| r * sigma))
                    .collect()
            });
            if let Some(f) = grid.iter().find(|f| !(0.0..1.0).contains(*f)) {
                return Err(domain("grid", format!("fee {f} outside [0, 1)")));
            }
            sweep_fee(&e, &grid)?
        }
        "sigma" => {
            let grid = cfg
                .float_list("grid")
                .unwrap_or_else(|| [0.25, 0.5, 1.0, 2.0, 4.0].map(|r| r * sigma).to_vec());
            if let Some(s) = grid.iter().find(|s| !(**s >= 0.0)) {
                return Err(domain("grid", format!("sigma {s} is negative")));
            }
            sweep_volume_vs_sigma(&e, &grid)?
        }
        "steps" => {
            let grid: Vec<usize> = cfg
                .uint_list("step_grid")
                .map(|g| g.into_iter().map(|n| n as usize).collect())
                .unwrap_or_else(|| vec![4, 16, 64, 256, 1024]);
            let total = cfg
                .opt_float("total_variance")
                .unwrap_or(sigma * sigma * e.process.n_steps as f64);
            if grid.contains(&0) {
                return Err(domain("step_grid", "step counts must be positive"));
            }
            if !(total > 0.0) {
                return Err(domain("total_variance", "must be positive"));
            }
            sweep_volume_vs_steps(&e, &grid, total)?
        }
        other => bail!(ConfigError::new("command line", None, Some("axis"), format!("unknown sweep axis '{other}'"))),
    };
    let mut b = Bundle::new(&["sweep", axis], cfg);
    b.result("fits", &table.fits);
    b.result("crossover_fee", table.crossover_fee);
    b.tables.insert("sweep".into(), sweep_table(&table));
    Ok(b)
}

pub fn analytic(kind: &str, cfg: &Config) -> Result<Bundle> {
    let mut b = Bundle::new(&["analytic", kind], cfg);
    match kind {
        "lvr-mean" => {
            let p = il_params(cfg)?;
            let v = analytics::expected_lvr(p.liquidity, p.p0, p.sigma, p.t)?;
            b.result("lvr_mean", v);
            b.result("regime_sigma_sq_t", p.sigma * p.sigma * p.t);
        }
        "il-mean" => {
            let p = il_params(cfg)?;
            let q = expected_il_quadrature(&p)?;
            b.result("il_mean", q.value);
            b.result("il_mean_error", q.error);
            b.result("lvr_mean", analytics::expected_lvr(p.liquidity, p.p0, p.sigma, p.t)?);
        }
        "il-pdf" => {
            let p = il_params(cfg)?;
            let m = p.moments()?;
            let points = cfg.usize("points").max(2);
            let (ub, ua) = p.u_limits();
            let u_max = ub.max(ua);
            let mut table = Table::new(&["il", "pdf", "u", "u_density"]);
            for i in 0..points {
                let u = u_max * i as f64 / (points - 1) as f64;
                let (below, above) = il_pdf_branches_u(u, &p);
                let g = below + above;
                let il = u * u;
                let pdf = if u > 0.0 { g / (2.0 * u) } else { f64::INFINITY };
                table.push(vec![Cell::F(il), Cell::F(pdf), Cell::F(u), Cell::F(g)]);
            }
            b.tables.insert("il_pdf".into(), table);
            b.result("mass", m.mass);
            b.result("mean", m.mean);
            b.result("variance", m.variance());
            b.result("small_il_law", analytics::fit_small_il_law(&p)?);
        }
        "sample-il" => {
            let p = il_params(cfg)?;
            let n = cfg.usize("n");
            if n == 0 {
                return Err(domain("n", "must be at least 1"));
            }
            let sampler = IlSampler::new(&p)?;
            let mut xs = sampler.sample(n, cfg.uint("seed"));
            let m: RunningMoments = xs.iter().copied().collect();
            b.histograms
                .insert("il".into(), Histogram::uniform_with_moments(&xs, cfg.usize("bins").max(1), &m)?);
            xs.sort_by(f64::total_cmp);
            b.result("mean", m.mean());
            b.result("stderr", m.stderr());
            b.result("analytic_mean", sampler.moments().mean);
            b.result("ks_statistic", ks_statistic(&xs, |x| sampler.cdf(x)));
        }
        "clt-sum" => {
            let p = il_params(cfg)?;
            let (n, r) = (cfg.usize("n_per_sum"), cfg.usize("repeats"));
            if n == 0 || r == 0 {
                return Err(domain("n_per_sum", "n_per_sum and repeats must be at least 1"));
            }
            let res = clt_sum_experiment(&p, n, r, cfg.uint("seed"))?;
            let m: RunningMoments = res.sums.iter().copied().collect();
            b.result("mean", m.mean());
            b.result("stderr", m.stderr());
            b.result("variance", m.variance());
            b.result("skewness", m.skewness());
            b.result("expected_mean", res.expected_mean(n));
            b.result("expected_variance", res.expected_variance(n));
            let mut table = Table::new(&["repeat", "sum"]);
            for (i, s) in res.sums.iter().enumerate() {
                table.push(vec![Cell::I(i as u64), Cell::F(*s)]);
            }
            b.tables.insert("sums".into(), table);
            b.histograms.insert("sums".into(), res.histogram);
        }
        "first-passage" => {
            let spec = BarrierSpec {
                lower: cfg.float("lower"),
                upper: cfg.float("upper"),
                step_kind: cfg.choice("step").parse()?,
            };
            spec.validate().map_err(|err| domain("lower", err.to_string()))?;
            let walks = cfg.usize("walks");
            if walks == 0 {
                return Err(domain("walks", "must be at least 1"));
            }
            let r = first_passage(&spec, walks, cfg.uint("seed"))?;
            b.result("mean_steps", r.mean_steps);
            b.result("stderr", r.stderr);
            b.result("frac_lower", r.frac_lower);
            if spec.step_kind == analytics::StepKind::Unit {
                b.result("gamblers_ruin_mean", (-spec.lower).ceil() * spec.upper.ceil());
            }
        }
        other => bail!(ConfigError::new(
            "command line",
            None,
            Some("analytic"),
            format!("unknown analytic command '{other}'")
        )),
    }
    Ok(b)
}
