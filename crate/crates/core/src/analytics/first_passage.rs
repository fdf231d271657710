//! Exit times of a driftless random walk between two absorbing barriers.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{derive_seed, rng_from_seed, SimRng};
use crate::stats::RunningMoments;

const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    /// Steps of `+1` or `-1` with equal probability.
    Unit,
    /// Standard-normal steps, as in the price engine.
    Gaussian,
}

impl std::fmt::Display for StepKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StepKind::Unit => "unit",
            StepKind::Gaussian => "gaussian",
        })
    }
}

impl std::str::FromStr for StepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unit" => Ok(StepKind::Unit),
            "gaussian" => Ok(StepKind::Gaussian),
            other => Err(Error::Domain(format!("unknown step kind '{other}' (expected unit or gaussian)"))),
        }
    }
}

/// Barriers in units of the elementary step, on either side of the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    pub lower: f64,
    pub upper: f64,
    pub step_kind: StepKind,
}

impl BarrierSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lower < 0.0 && self.upper > 0.0 && self.lower.is_finite() && self.upper.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "barriers must satisfy lower < 0 < upper, got ({}, {})",
                self.lower, self.upper
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstPassage {
    pub mean_steps: f64,
    pub stderr: f64,
    pub frac_lower: f64,
}

/// Barrier distance `f / (sigma sqrt(dt))` in elementary-step units.
pub fn barrier_distance(fee: f64, sigma: f64, dt: f64) -> f64 {
    fee / (sigma * dt.sqrt())
}

fn walk(spec: &BarrierSpec, rng: &mut SimRng) -> (u64, bool) {
    let mut x = 0.0;
    let mut steps = 0u64;
    match spec.step_kind {
        StepKind::Unit => {
            // integer positions are exact in f64
            loop {
                let mut bits = rng.next_u64();
                for _ in 0..64 {
                    x += if bits & 1 == 1 { 1.0 } else { -1.0 };
                    bits >>= 1;
                    steps += 1;
                    if x <= spec.lower {
                        return (steps, true);
                    }
                    if x >= spec.upper {
                        return (steps, false);
                    }
                }
            }
        }
        StepKind::Gaussian => loop {
            x += rng.sample::<f64, _>(StandardNormal);
            steps += 1;
            if x <= spec.lower {
                return (steps, true);
            }
            if x >= spec.upper {
                return (steps, false);
            }
        },
    }
}

/// Monte Carlo exit time from the origin and the fraction of walks that
/// leave through the lower barrier.
pub fn first_passage(spec: &BarrierSpec, n_walks: usize, seed: u64) -> Result<FirstPassage> {
    spec.validate()?;
    if n_walks == 0 {
        return Err(Error::Domain("first_passage needs n_walks >= 1".into()));
    }
    let n_chunks = n_walks.div_ceil(CHUNK);
    let chunks: Vec<Vec<(u64, bool)>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from_seed(derive_seed(seed, c as u64));
            let len = CHUNK.min(n_walks - c * CHUNK);
            (0..len).map(|_| walk(spec, &mut rng)).collect()
        })
        .collect();
    let mut moments = RunningMoments::new();
    let mut lower = 0usize;
    for &(steps, hit_lower) in chunks.iter().flatten() {
        moments.push(steps as f64);
        lower += hit_lower as usize;
    }
    Ok(FirstPassage {
        mean_steps: moments.mean(),
        stderr: moments.stderr(),
        frac_lower: lower as f64 / n_walks as f64,
    })
}
