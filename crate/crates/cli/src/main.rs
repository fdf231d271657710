//! `amm-lab`: campaigns, sweeps and analytic results for constant-product AMMs.
//!
//! Every command resolves a flat config (preset, then `--config` file, then
//! `--set key=value` and dedicated flags, later sources winning) and writes a
//! bundle to the output directory: `--out`, else `$AMM_LAB_OUT`, else
//! `amm-lab-out/<command>`.
//!
//! Exit codes: 0 success, 1 other failure, 2 config error, 3 resource guard,
//! 4 numerical failure.

mod bundle;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use bundle::{Bundle, Manifest};
use config::{Config, ConfigError, KEYS, PRESETS};

#[derive(Parser)]
#[command(name = "amm-lab", version, about = "Impermanent loss, LVR and fee-band experiments for constant-product AMMs")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory (overrides AMM_LAB_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo campaign.
    Simulate(ConfigArgs),
    /// Closed-form and semi-analytic results.
    Analytic {
        #[command(subcommand)]
        kind: AnalyticKind,
    },
    /// Sweep one parameter and fit scaling laws.
    Sweep {
        #[command(subcommand)]
        axis: SweepAxis,
    },
    /// List the named presets, or print one.
    Presets {
        /// Preset to print.
        name: Option<String>,
    },
    /// Print the config keys and the CSV schema of every table.
    Schema,
    /// Re-run the command recorded in a bundle manifest.
    Replay {
        /// Path to manifest.json.
        manifest: PathBuf,
    },
}

#[derive(Subcommand)]
enum AnalyticKind {
    /// Density of IL on a grid in u = sqrt(IL).
    IlPdf(ConfigArgs),
    /// Expected IL by quadrature.
    IlMean(ConfigArgs),
    /// Closed-form expected LVR.
    LvrMean(ConfigArgs),
    /// Inverse-CDF samples of IL.
    SampleIl(ConfigArgs),
    /// Sums of IL draws.
    CltSum(ConfigArgs),
    /// Random-walk exit times between two barriers.
    FirstPassage(ConfigArgs),
}

#[derive(Subcommand)]
enum SweepAxis {
    /// Fee grid (`grid`).
    Fee(ConfigArgs),
    /// Volatility grid (`grid`) at fixed steps.
    Sigma(ConfigArgs),
    /// Step grid (`step_grid`) at fixed sigma^2 * steps.
    Steps(ConfigArgs),
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Named preset applied first.
    #[arg(long)]
    preset: Option<String>,
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` assignments (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    process: Option<String>,
    #[arg(long)]
    p0: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long = "L")]
    liquidity: Option<String>,
    #[arg(long = "T")]
    horizon: Option<String>,
    #[arg(long)]
    fee: Option<String>,
    #[arg(long)]
    runs: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    bins: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    step_grid: Option<String>,
    /// Fix sigma^2 * steps for the steps sweep; without a value the base config's is used.
    #[arg(long, num_args = 0..=1, default_missing_value = "")]
    fixed_total_vol: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lower: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    upper: Option<String>,
    #[arg(long)]
    step: Option<String>,
    #[arg(long)]
    walks: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    n_per_sum: Option<String>,
    #[arg(long)]
    repeats: Option<String>,
    #[arg(long)]
    points: Option<String>,
    #[arg(long)]
    streaming: bool,
    #[arg(long)]
    memory_budget: Option<String>,
    #[arg(long)]
    band_rule: Option<String>,
    #[arg(long)]
    target: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<Config> {
        let mut cfg = Config::default();
        if let Some(name) = &self.preset {
            let preset = config::preset(name).ok_or_else(|| {
                ConfigError::new("command line", None, Some("preset"), format!("unknown preset '{name}'"))
            })?;
            cfg.merge(&Config::parse(preset.text, name)?);
        }
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| {
                ConfigError::new(&path.display().to_string(), None, None, format!("cannot read: {e}"))
            })?;
            cfg.merge(&Config::parse(&text, &path.display().to_string())?);
        }
        for item in &self.set {
            let (k, v) = item.split_once('=').ok_or_else(|| {
                ConfigError::new("--set", None, Some(item), "expected KEY=VALUE")
            })?;
            cfg.set(k.trim(), v, "--set", None)?;
        }
        let flags = [
            ("process", &self.process),
            ("p0", &self.p0),
            ("sigma", &self.sigma),
            ("steps", &self.steps),
            ("L", &self.liquidity),
            ("T", &self.horizon),
            ("fee", &self.fee),
            ("runs", &self.runs),
            ("seed", &self.seed),
            ("bins", &self.bins),
            ("grid", &self.grid),
            ("step_grid", &self.step_grid),
            ("lower", &self.lower),
            ("upper", &self.upper),
            ("step", &self.step),
            ("walks", &self.walks),
            ("n", &self.n),
            ("n_per_sum", &self.n_per_sum),
            ("repeats", &self.repeats),
            ("points", &self.points),
            ("memory_budget", &self.memory_budget),
            ("band_rule", &self.band_rule),
            ("target", &self.target),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v, &format!("--{key}"), None)?;
            }
        }
        if let Some(v) = &self.fixed_total_vol {
            if !v.is_empty() {
                cfg.set("total_variance", v, "--fixed-total-vol", None)?;
            } else if !cfg.is_set("total_variance") {
                let total = cfg.float("sigma").powi(2) * cfg.uint("steps") as f64;
                cfg.set("total_variance", &total.to_string(), "--fixed-total-vol", None)?;
            }
        }
        if self.streaming {
            cfg.set("streaming", "true", "--streaming", None)?;
        }
        Ok(cfg)
    }
}

fn run_words(words: &[String], cfg: &Config) -> Result<Bundle> {
    let words: Vec<&str> = words.iter().map(String::as_str).collect();
    match words.as_slice() {
        ["simulate"] => commands::simulate(cfg),
        ["sweep", axis] => commands::sweep(axis, cfg),
        ["analytic", kind] => commands::analytic(kind, cfg),
        other => Err(ConfigError::new("manifest", None, Some("command"), format!("unknown command {other:?}")).into()),
    }
}

fn out_dir(cli_out: &Option<PathBuf>, words: &[String]) -> PathBuf {
    cli_out
        .clone()
        .or_else(|| std::env::var_os("AMM_LAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("amm-lab-out").join(words.join("-")))
}

fn print_results(bundle: &Bundle, dir: &std::path::Path) {
    for (k, v) in &bundle.results {
        println!("{k} = {v}");
    }
    println!("bundle written to {}", dir.display());
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let (words, cfg): (Vec<String>, Config) = match &cli.command {
        Command::Simulate(args) => (vec!["simulate".into()], args.resolve()?),
        Command::Sweep { axis } => {
            let (name, args) = match axis {
                SweepAxis::Fee(a) => ("fee", a),
                SweepAxis::Sigma(a) => ("sigma", a),
                SweepAxis::Steps(a) => ("steps", a),
            };
            (vec!["sweep".into(), name.into()], args.resolve()?)
        }
        Command::Analytic { kind } => {
            let (name, args) = match kind {
                AnalyticKind::IlPdf(a) => ("il-pdf", a),
                AnalyticKind::IlMean(a) => ("il-mean", a),
                AnalyticKind::LvrMean(a) => ("lvr-mean", a),
                AnalyticKind::SampleIl(a) => ("sample-il", a),
                AnalyticKind::CltSum(a) => ("clt-sum", a),
                AnalyticKind::FirstPassage(a) => ("first-passage", a),
            };
            (vec!["analytic".into(), name.into()], args.resolve()?)
        }
        Command::Replay { manifest } => {
            let text = std::fs::read_to_string(manifest).with_context(|| format!("reading {}", manifest.display()))?;
            let m: Manifest = serde_json::from_str(&text).map_err(|e| {
                ConfigError::new(&manifest.display().to_string(), Some(e.line()), None, e.to_string())
            })?;
            let mut cfg = Config::default();
            for (k, v) in &m.config {
                cfg.set(k, v, "manifest", None)?;
            }
            (m.command, cfg)
        }
        Command::Presets { name: None } => {
            for p in PRESETS {
                println!("{:<22} {:<24} {}", p.name, p.command, p.description);
            }
            return Ok(());
        }
        Command::Presets { name: Some(name) } => {
            let p = config::preset(name)
                .ok_or_else(|| ConfigError::new("command line", None, Some("preset"), format!("unknown preset '{name}'")))?;
            println!("# amm-lab {} --preset {}", p.command, p.name);
            print!("{}", p.text);
            return Ok(());
        }
        Command::Schema => {
            println!("Config keys:");
            for k in KEYS {
                println!("  {:<15} default {:<10} {}", k.name, k.default.unwrap_or("-"), k.help);
            }
            println!();
            print!("{}", commands::SCHEMA);
            return Ok(());
        }
    };
    let bundle = run_words(&words, &cfg)?;
    let dir = out_dir(&cli.out, &words);
    bundle.write(&dir)?;
    print_results(&bundle, &dir);
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<amm_lab::Error>() {
        Some(amm_lab::Error::Domain(_)) => 2,
        Some(amm_lab::Error::ResourceGuard { .. }) => 3,
        Some(amm_lab::Error::Numerical { .. }) | Some(amm_lab::Error::NonPositivePrice { .. }) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
