//! Parameter grids run as independent episodes.
//!
//! A grid file lists one field per line, `section.key = v1 v2 ...`, with `#`
//! starting a comment. Points are the Cartesian product of the lines, the
//! last line varying fastest.

use rayon::prelude::*;

use crate::config::apply_value;
use crate::error::{ConfigError, SimError};
use crate::harness::{run_episode, EpisodeResult};
use crate::params::{SimConfig, ValidatedConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub overrides: Vec<(String, String)>,
    pub config: ValidatedConfig,
}

pub fn parse_grid(text: &str) -> Result<Vec<SweepAxis>, ConfigError> {
    let mut axes = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, values) = line.split_once('=').ok_or_else(|| {
            ConfigError::Parse(format!(
                "grid line {}: expected `section.key = values`",
                i + 1
            ))
        })?;
        let values: Vec<String> = values.split_whitespace().map(str::to_string).collect();
        if values.is_empty() {
            return Err(ConfigError::Parse(format!(
                "grid line {}: no values",
                i + 1
            )));
        }
        axes.push(SweepAxis {
            key: key.trim().to_string(),
            values,
        });
    }
    Ok(axes)
}

/// Expands the grid over `base`, validating every point before any runs.
pub fn expand(base: &SimConfig, axes: &[SweepAxis]) -> Result<Vec<SweepPoint>, ConfigError> {
    let mut combos: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for axis in axes {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                axis.values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.push((axis.key.clone(), v.clone()));
                    c
                })
            })
            .collect();
    }
    combos
        .into_iter()
        .enumerate()
        .map(|(index, overrides)| {
            let cfg = overrides
                .iter()
                .try_fold(*base, |c, (k, v)| apply_value(&c, k, v))?;
            Ok(SweepPoint {
                index,
                overrides,
                config: cfg.validate()?,
            })
        })
        .collect()
}

/// Runs every point on a pool of `jobs` threads. Results keep point order.
pub fn run_points(points: &[SweepPoint], jobs: usize) -> Vec<Result<EpisodeResult, SimError>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| points.par_iter().map(|p| run_episode(&p.config)).collect())
}
