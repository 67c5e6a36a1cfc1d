//! Experiment configuration, read from TOML and overlaid on per-experiment defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::korobov::{MMode, SpaceParams};
use crate::shifts::primes::{is_prime, nearest_prime};

/// The four experiments the harness knows how to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Which {
    ShiftGrowth,
    Stability,
    KorobovF1,
    Pde,
}

impl Which {
    pub const ALL: [Which; 4] = [
        Which::ShiftGrowth,
        Which::Stability,
        Which::KorobovF1,
        Which::Pde,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Which::ShiftGrowth => "shift_growth",
            Which::Stability => "stability",
            Which::KorobovF1 => "korobov_f1",
            Which::Pde => "pde",
        }
    }
}

impl fmt::Display for Which {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Which {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Which::ALL
            .into_iter()
            .find(|w| w.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

/// Shift construction used by the convergence experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyChoice {
    Adaptive,
    /// Shared i.i.d. uniform shifts with the 99% count.
    Probabilistic,
}

impl StrategyChoice {
    pub fn name(self) -> &'static str {
        match self {
            StrategyChoice::Adaptive => "adaptive",
            StrategyChoice::Probabilistic => "probabilistic",
        }
    }
}

/// Global shift `delta` applied to every sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(try_from = "DeltaInput")]
pub enum DeltaMode {
    Zero,
    Random { count: usize, seed: u64 },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DeltaInput {
    Named(String),
    Random { count: usize, seed: u64 },
}

impl TryFrom<DeltaInput> for DeltaMode {
    type Error = String;

    fn try_from(raw: DeltaInput) -> std::result::Result<Self, String> {
        match raw {
            DeltaInput::Named(s) if s == "zero" => Ok(DeltaMode::Zero),
            DeltaInput::Named(s) => Err(format!(
                "delta must be \"zero\" or {{ count, seed }}, got \"{s}\""
            )),
            DeltaInput::Random { count: 0, .. } => Err("delta count must be at least 1".into()),
            DeltaInput::Random { count, seed } => Ok(DeltaMode::Random { count, seed }),
        }
    }
}

/// Fully resolved settings for one experiment. `n` holds primes only.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dims: Vec<usize>,
    pub alpha: f64,
    /// `gamma_j = 2^{(1-j)/decay}` unless `gamma` is given.
    pub gamma_decay: f64,
    pub gamma: Option<Vec<f64>>,
    pub t: f64,
    pub n: Vec<u64>,
    pub m_mode: MMode,
    pub strategy: StrategyChoice,
    pub delta: DeltaMode,
    pub error_budget: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub emit_gnuplot: bool,
}

/// Optional overrides as they appear in a config file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dims: Option<Vec<usize>>,
    pub alpha: Option<f64>,
    pub gamma_decay: Option<f64>,
    pub gamma: Option<Vec<f64>>,
    pub t: Option<f64>,
    pub n: Option<Vec<u64>>,
    pub m_mode: Option<MMode>,
    pub strategy: Option<StrategyChoice>,
    pub delta: Option<DeltaMode>,
    pub error_budget: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub emit_gnuplot: Option<bool>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn powers_of_two(lo: u32, hi: u32) -> Vec<u64> {
    (lo..=hi).map(|e| 1u64 << e).collect()
}

impl ExperimentConfig {
    /// Default settings per experiment, sized for a workstation.
    pub fn defaults(which: Which) -> Self {
        let base = Self {
            dims: vec![2, 4],
            alpha: 1.0,
            gamma_decay: 10.0,
            gamma: None,
            t: 0.95,
            n: powers_of_two(7, 12),
            m_mode: MMode::Bisection,
            strategy: StrategyChoice::Adaptive,
            delta: DeltaMode::Zero,
            error_budget: 1 << 14,
            seed: 1,
            out: PathBuf::from("results"),
            emit_gnuplot: false,
        };
        let cfg = match which {
            Which::ShiftGrowth => Self {
                dims: vec![2, 10, 50],
                n: powers_of_two(10, 20),
                ..base
            },
            Which::Stability => Self {
                dims: vec![2, 5, 10],
                n: powers_of_two(10, 14),
                ..base
            },
            Which::KorobovF1 => Self { alpha: 2.5, ..base },
            Which::Pde => Self { alpha: 1.5, ..base },
        };
        cfg.resolved().expect("defaults are valid")
    }

    /// Applies file overrides, then nudges and validates.
    pub fn with_overrides(self, file: ConfigFile) -> Result<Self> {
        Self {
            dims: file.dims.unwrap_or(self.dims),
            alpha: file.alpha.unwrap_or(self.alpha),
            gamma_decay: file.gamma_decay.unwrap_or(self.gamma_decay),
            gamma: file.gamma.or(self.gamma),
            t: file.t.unwrap_or(self.t),
            n: file.n.unwrap_or(self.n),
            m_mode: file.m_mode.unwrap_or(self.m_mode),
            strategy: file.strategy.unwrap_or(self.strategy),
            delta: file.delta.unwrap_or(self.delta),
            error_budget: file.error_budget.unwrap_or(self.error_budget),
            seed: file.seed.unwrap_or(self.seed),
            out: file.out.unwrap_or(self.out),
            emit_gnuplot: file.emit_gnuplot.unwrap_or(self.emit_gnuplot),
        }
        .resolved()
    }

    /// Replaces every `N` by its nearest prime (deduplicated, ascending) and
    /// checks the remaining invariants.
    pub fn resolved(mut self) -> Result<Self> {
        if !(self.t > 0.0 && self.t < 1.0) {
            return Err(Error::Config(format!("t = {} must lie in (0, 1)", self.t)));
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::Config(
                "dims must be a nonempty list of positive integers".into(),
            ));
        }
        if self.n.is_empty() || self.n.iter().any(|&n| n < 2) {
            return Err(Error::Config(
                "n must be a nonempty list of integers >= 2".into(),
            ));
        }
        if self.error_budget == 0 {
            return Err(Error::Config("error_budget must be at least 1".into()));
        }
        if let Some(g) = &self.gamma {
            let need = self.dims.iter().copied().max().unwrap_or(0);
            if g.len() < need {
                return Err(Error::Config(format!(
                    "gamma lists {} weights, dims need {need}",
                    g.len()
                )));
            }
        }
        self.n = self.n.iter().map(|&n| nearest_prime(n)).collect();
        self.n.sort_unstable();
        self.n.dedup();
        debug_assert!(self.n.iter().all(|&n| is_prime(n)));
        self.params(self.dims[0])?;
        Ok(self)
    }

    pub fn params(&self, d: usize) -> Result<SpaceParams> {
        match &self.gamma {
            Some(g) => SpaceParams::new(self.alpha, g[..d].to_vec()),
            None => SpaceParams::with_power_weights(d, self.alpha, self.gamma_decay),
        }
    }
}
