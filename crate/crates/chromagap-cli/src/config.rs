use std::path::Path;

use anyhow::{bail, Context, Result};
use chromagap::colouring::Tolerances;

pub const THREADS_VAR: &str = "CHROMAGAP_THREADS";

/// Run configuration; every random choice is derived from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub seed: u64,
    /// Node budget for exact searches.
    pub budget: Option<u64>,
    /// Checks drawn by sampled verification.
    pub sample: usize,
    pub full: bool,
    pub threads: usize,
    pub tolerances: Tolerances,
    pub max_vertices: Option<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            budget: Some(1_000_000),
            sample: 100_000,
            full: false,
            threads: 1,
            tolerances: Tolerances::default(),
            max_vertices: Some(2_000_000),
        }
    }
}

fn optional<T: std::str::FromStr>(v: &str) -> std::result::Result<Option<T>, T::Err> {
    match v {
        "none" | "unbounded" => Ok(None),
        _ => v.parse().map(Some),
    }
}

impl Config {
    /// `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Config::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').with_context(|| format!("line {}: expected key = value", no + 1))?;
            let (key, value) = (key.trim(), value.trim().trim_matches('"'));
            let bad = || format!("line {}: bad value `{value}` for `{key}`", no + 1);
            match key {
                "seed" => c.seed = value.parse().with_context(bad)?,
                "budget" => c.budget = optional(value).with_context(bad)?,
                "sample" => c.sample = value.parse().with_context(bad)?,
                "full" => c.full = value.parse().with_context(bad)?,
                "threads" => c.threads = value.parse().with_context(bad)?,
                "spectral_gap" => c.tolerances.spectral_gap = value.parse().with_context(bad)?,
                "sinkhorn_residual" => c.tolerances.row = value.parse().with_context(bad)?,
                "max_vertices" => c.max_vertices = optional(value).with_context(bad)?,
                _ => bail!("line {}: unknown key `{key}`", no + 1),
            }
        }
        if c.threads == 0 {
            bail!("threads must be positive");
        }
        Ok(c)
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut c = match path {
            Some(p) => Self::parse(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
            None => Config::default(),
        };
        if let Ok(v) = std::env::var(THREADS_VAR) {
            c.threads = v.parse().with_context(|| format!("{THREADS_VAR}={v}"))?;
        }
        Ok(c)
    }
}
