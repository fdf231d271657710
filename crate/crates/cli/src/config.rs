//! Flat `key = value` experiment configs and the named presets.
//!
//! Lines are `key = value`; `#` starts a comment and blank lines are ignored.
//! Lists are comma separated. Only keys that were set explicitly are stored,
//! so echoing a config and reading it back gives the same config.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    UInt,
    Bool,
    Choice(&'static [&'static str]),
    FloatList,
    UIntList,
}

pub struct KeySpec {
    pub name: &'static str,
    pub kind: Kind,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

const PROCESSES: &[&str] = &["bm", "gbm"];
const BAND_RULES: &[&str] = &["exact", "linearized"];
const TARGETS: &[&str] = &["band_edge", "oracle"];
const STEP_KINDS: &[&str] = &["unit", "gaussian"];

pub const KEYS: &[KeySpec] = &[
    KeySpec { name: "process", kind: Kind::Choice(PROCESSES), default: Some("gbm"), help: "price process" },
    KeySpec { name: "p0", kind: Kind::Float, default: Some("100"), help: "initial price" },
    KeySpec { name: "sigma", kind: Kind::Float, default: Some("0.001"), help: "relative volatility per step" },
    KeySpec { name: "steps", kind: Kind::UInt, default: Some("1000"), help: "steps per run" },
    KeySpec { name: "L", kind: Kind::Float, default: Some("10000"), help: "pool liquidity" },
    KeySpec { name: "T", kind: Kind::Float, default: None, help: "analytic horizon (defaults to steps)" },
    KeySpec { name: "fee", kind: Kind::Float, default: Some("0"), help: "pool fee in [0, 1)" },
    KeySpec { name: "runs", kind: Kind::UInt, default: Some("10000"), help: "Monte Carlo runs" },
    KeySpec { name: "seed", kind: Kind::UInt, default: Some("1"), help: "campaign seed" },
    KeySpec { name: "bins", kind: Kind::UInt, default: Some("50"), help: "histogram bins" },
    KeySpec { name: "band_rule", kind: Kind::Choice(BAND_RULES), default: Some("exact"), help: "upper band edge rule" },
    KeySpec { name: "target", kind: Kind::Choice(TARGETS), default: Some("band_edge"), help: "post-arbitrage pool price" },
    KeySpec { name: "streaming", kind: Kind::Bool, default: Some("false"), help: "two-pass mode without a per-run table" },
    KeySpec { name: "memory_budget", kind: Kind::UInt, default: Some("268435456"), help: "bytes allowed for the per-run table" },
    KeySpec { name: "grid", kind: Kind::FloatList, default: None, help: "sweep values (fee or sigma)" },
    KeySpec { name: "step_grid", kind: Kind::UIntList, default: None, help: "sweep values for steps" },
    KeySpec { name: "total_variance", kind: Kind::Float, default: None, help: "fixed sigma^2 * steps for the steps sweep" },
    KeySpec { name: "lower", kind: Kind::Float, default: Some("-10"), help: "lower barrier" },
    KeySpec { name: "upper", kind: Kind::Float, default: Some("10"), help: "upper barrier" },
    KeySpec { name: "step", kind: Kind::Choice(STEP_KINDS), default: Some("unit"), help: "random-walk step kind" },
    KeySpec { name: "walks", kind: Kind::UInt, default: Some("20000"), help: "random walks" },
    KeySpec { name: "n", kind: Kind::UInt, default: Some("100000"), help: "IL samples" },
    KeySpec { name: "n_per_sum", kind: Kind::UInt, default: Some("10000"), help: "draws per sum" },
    KeySpec { name: "repeats", kind: Kind::UInt, default: Some("10000"), help: "number of sums" },
    KeySpec { name: "points", kind: Kind::UInt, default: Some("4001"), help: "il-pdf grid points" },
];

pub fn key_spec(name: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.name == name)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    UInt(u64),
    Bool(bool),
    Choice(String),
    FloatList(Vec<f64>),
    UIntList(Vec<u64>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join<T: fmt::Display>(xs: &[T]) -> String {
            xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        match self {
            Value::Float(x) => write!(f, "{x}"),
            Value::UInt(x) => write!(f, "{x}"),
            Value::Bool(x) => write!(f, "{x}"),
            Value::Choice(s) => f.write_str(s),
            Value::FloatList(xs) => f.write_str(&join(xs)),
            Value::UIntList(xs) => f.write_str(&join(xs)),
        }
    }
}

/// Where a config problem was found.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error in {}", self.source)?;
        if let Some(line) = self.line {
            write!(f, " line {line}")?;
        }
        if let Some(field) = &self.field {
            write!(f, " field '{field}'")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    pub fn new(source: &str, line: Option<usize>, field: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            source: source.to_string(),
            line,
            field: field.map(str::to_string),
            message: message.into(),
        }
    }
}

fn parse_float(raw: &str) -> Result<f64, String> {
    let x: f64 = raw.parse().map_err(|_| format!("'{raw}' is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("'{raw}' is not finite"))
    }
}

fn parse_uint(raw: &str) -> Result<u64, String> {
    raw.parse().map_err(|_| format!("'{raw}' is not a non-negative integer"))
}

pub fn parse_value(kind: Kind, raw: &str) -> Result<Value, String> {
    let raw = raw.trim();
    let list = |raw: &str| -> Vec<String> { raw.split(',').map(|s| s.trim().to_string()).collect() };
    match kind {
        Kind::Float => parse_float(raw).map(Value::Float),
        Kind::UInt => parse_uint(raw).map(Value::UInt),
        Kind::Bool => match raw {
            "true" | "1" | "yes" => Ok(Value::Bool(true)),
            "false" | "0" | "no" => Ok(Value::Bool(false)),
            _ => Err(format!("'{raw}' is not a boolean")),
        },
        Kind::Choice(options) => {
            let v = raw.to_ascii_lowercase();
            if options.contains(&v.as_str()) {
                Ok(Value::Choice(v))
            } else {
                Err(format!("'{raw}' is not one of {}", options.join(", ")))
            }
        }
        Kind::FloatList => list(raw)
            .iter()
            .map(|s| parse_float(s))
            .collect::<Result<_, _>>()
            .map(Value::FloatList),
        Kind::UIntList => list(raw)
            .iter()
            .map(|s| parse_uint(s))
            .collect::<Result<_, _>>()
            .map(Value::UIntList),
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, Value>,
}

impl Config {
    pub fn parse(text: &str, source: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::new(source, Some(i + 1), None, "expected 'key = value'"));
            };
            cfg.set(key.trim(), value, source, Some(i + 1))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, raw: &str, source: &str, line: Option<usize>) -> Result<(), ConfigError> {
        let spec = key_spec(key).ok_or_else(|| ConfigError::new(source, line, Some(key), "unknown key"))?;
        let value = parse_value(spec.kind, raw).map_err(|m| ConfigError::new(source, line, Some(key), m))?;
        self.values.insert(key.to_string(), value);
        Ok(())
    }

    /// Values of `other` take precedence.
    pub fn merge(&mut self, other: &Config) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn explicit(&self) -> &BTreeMap<String, Value> {
        &self.values
    }

    fn resolved(&self, key: &str) -> Option<Value> {
        if let Some(v) = self.values.get(key) {
            return Some(v.clone());
        }
        let spec = key_spec(key).expect("known key");
        spec.default.map(|d| parse_value(spec.kind, d).expect("valid default"))
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.resolved(key) {
            Some(Value::Float(x)) => x,
            other => panic!("key {key} has no float value: {other:?}"),
        }
    }

    pub fn opt_float(&self, key: &str) -> Option<f64> {
        match self.resolved(key) {
            Some(Value::Float(x)) => Some(x),
            _ => None,
        }
    }

    pub fn uint(&self, key: &str) -> u64 {
        match self.resolved(key) {
            Some(Value::UInt(x)) => x,
            other => panic!("key {key} has no integer value: {other:?}"),
        }
    }

    pub fn usize(&self, key: &str) -> usize {
        self.uint(key) as usize
    }

    pub fn flag(&self, key: &str) -> bool {
        matches!(self.resolved(key), Some(Value::Bool(true)))
    }

    pub fn choice(&self, key: &str) -> String {
        match self.resolved(key) {
            Some(Value::Choice(s)) => s,
            other => panic!("key {key} has no choice value: {other:?}"),
        }
    }

    pub fn float_list(&self, key: &str) -> Option<Vec<f64>> {
        match self.resolved(key) {
            Some(Value::FloatList(xs)) => Some(xs),
            _ => None,
        }
    }

    pub fn uint_list(&self, key: &str) -> Option<Vec<u64>> {
        match self.resolved(key) {
            Some(Value::UIntList(xs)) => Some(xs),
            _ => None,
        }
    }

    /// Explicit values as a config document.
    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

pub struct Preset {
    pub name: &'static str,
    pub command: &'static str,
    pub description: &'static str,
    pub text: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig-bm-vs-gbm-short",
        command: "simulate",
        description: "short-horizon BM campaign; rerun with process = gbm to compare",
        text: "process = bm\np0 = 100\nL = 10000\nsigma = 0.001\nsteps = 1000\nruns = 40000\nfee = 0\n",
    },
    Preset {
        name: "fig-lvril-nofee",
        command: "simulate",
        description: "no-fee IL and LVR distributions in the intermediate regime",
        text: "process = gbm\np0 = 100\nL = 10000\nsigma = 0.001\nsteps = 1000\nruns = 40000\nfee = 0\n",
    },
    Preset {
        name: "fig-lvr-longtime",
        command: "simulate",
        description: "long-horizon campaign where mean IL and LVR separate",
        text: "process = gbm\np0 = 100\nL = 10000\nsigma = 0.02\nsteps = 1000\nruns = 10000\nfee = 0\n",
    },
    Preset {
        name: "abs-vol-crosscheck",
        command: "simulate",
        description: "absolute-volatility check: x0 = 100, sigma_abs = 0.01, t = 5000",
        text: "process = bm\np0 = 100\nL = 1000\nsigma = 0.0001\nsteps = 5000\nruns = 20000\nfee = 0\n",
    },
    Preset {
        name: "fig-sumil",
        command: "analytic clt-sum",
        description: "sums of 10000 IL draws",
        text: "process = gbm\np0 = 100\nL = 10000\nsigma = 0.1\nT = 1\nn_per_sum = 10000\nrepeats = 10000\n",
    },
    Preset {
        name: "fig-rwbarrier",
        command: "analytic first-passage",
        description: "symmetric unit-step barriers at +-10",
        text: "lower = -10\nupper = 10\nstep = unit\nwalks = 20000\n",
    },
    Preset {
        name: "fig-lvrfee",
        command: "simulate",
        description: "fee-band campaign at f = 0.02%",
        text: "process = gbm\np0 = 100\nL = 10000\nsigma = 0.001\nsteps = 1000\nruns = 10000\nfee = 0.0002\n",
    },
    Preset {
        name: "fig-volvsfee",
        command: "sweep fee",
        description: "fee sweep at sigma = 0.004",
        text: "process = gbm\np0 = 100\nL = 10000\nsigma = 0.004\nsteps = 1000\nruns = 1000\ngrid = 0,0.00004,0.0001,0.0004,0.001,0.004,0.01,0.04,0.08,0.12,0.2\n",
    },
    Preset {
        name: "fig-lvr-vs-fee",
        command: "sweep fee",
        description: "fee sweep at sigma = 0.0002",
        text: "process = gbm\np0 = 100\nL = 10000\nsigma = 0.0002\nsteps = 1000\nruns = 1000\ngrid = 0,0.000002,0.000005,0.00002,0.00005,0.0002,0.0005,0.002,0.004,0.006,0.01\n",
    },
    Preset {
        name: "fig-volsim",
        command: "sweep sigma",
        description: "volume against volatility at fixed steps",
        text: "process = gbm\np0 = 100\nL = 10000\nsteps = 1000\nruns = 2000\ngrid = 0.0005,0.001,0.002,0.004,0.008\n",
    },
    Preset {
        name: "fig-volsteps",
        command: "sweep steps",
        description: "volume against step count at fixed total variance",
        text: "process = gbm\np0 = 100\nL = 10000\nruns = 2000\ntotal_variance = 0.001\nstep_grid = 4,16,64,256,1024\n",
    },
];

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_echo_round_trip() {
        let text = "# comment\nsigma = 0.001\n\nruns=20 # trailing\ngrid = 0, 1e-4,0.5\nprocess = BM\n";
        let cfg = Config::parse(text, "test").unwrap();
        assert_eq!(cfg.float("sigma"), 0.001);
        assert_eq!(cfg.uint("runs"), 20);
        assert_eq!(cfg.choice("process"), "bm");
        assert_eq!(cfg.float_list("grid").unwrap(), vec![0.0, 1e-4, 0.5]);
        assert_eq!(cfg.float("p0"), 100.0);
        assert_eq!(Config::parse(&cfg.to_text(), "echo").unwrap(), cfg);
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let err = Config::parse("sigma = 0.1\nruns = many\n", "a.cfg").unwrap_err();
        assert_eq!((err.line, err.field.as_deref()), (Some(2), Some("runs")));
        let err = Config::parse("bogus = 1\n", "a.cfg").unwrap_err();
        assert_eq!((err.line, err.field.as_deref()), (Some(1), Some("bogus")));
        let err = Config::parse("sigma 0.1\n", "a.cfg").unwrap_err();
        assert_eq!(err.line, Some(1));
        assert!(err.to_string().contains("a.cfg line 1"));
    }

    #[test]
    fn presets_parse() {
        for p in PRESETS {
            Config::parse(p.text, p.name).unwrap();
        }
        assert!(preset("fig-lvril-nofee").is_some());
    }
}
