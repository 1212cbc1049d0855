pub mod design;
pub mod hologram;
pub mod propagate;
pub mod sweep;

use std::path::Path;

use anyhow::{Context, Result};
use metascreen::duct::UnitCellGeometry;
use metascreen::library::{load_or_build, CellResponseTable, SweepGrid};
use metascreen::wave::Medium;

use crate::config::RunConfig;

/// How a command that ran to completion fared against its tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Met,
    ToleranceFailed,
}

impl Outcome {
    pub fn from_checks(checks: &[Check]) -> Self {
        if checks.iter().all(|c| c.pass) {
            Outcome::Met
        } else {
            Outcome::ToleranceFailed
        }
    }
}

/// One tolerance test recorded in a report.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value < limit,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value >= limit,
        }
    }
}


/// Rejects grids whose extreme points break the cell's geometric invariants.
pub fn check_grid(geometry: &UnitCellGeometry, medium: &Medium, grid: &SweepGrid) -> Result<()> {
    grid.validate().context("invalid grid")?;
    Medium::new(medium.density, medium.sound_speed).context("invalid medium")?;
    geometry.validate().context("invalid geometry")?;
    let ends = |axis: &[f64]| [axis[0], axis[axis.len() - 1]];
    for h1 in ends(&grid.h1) {
        for w2 in ends(&grid.w2) {
            for w in ends(&grid.w) {
                geometry
                    .with_h1(h1)
                    .with_w2(w2)
                    .with_w(w)
                    .validate()
                    .with_context(|| {
                        format!(
                            "grid point h1 = {:.4} mm, w2 = {:.4} mm, w = {:.4} mm is not a valid cell",
                            h1 * 1e3,
                            w2 * 1e3,
                            w * 1e3
                        )
                    })?;
            }
        }
    }
    Ok(())
}

/// Grid from the config with `extra` frequencies merged in.
pub fn grid_with(cfg: &RunConfig, extra: &[f64]) -> SweepGrid {
    extra
        .iter()
        .fold(cfg.grid.clone(), |g, &f| g.with_frequency(f))
}

pub fn table(cfg: &RunConfig, grid: SweepGrid, cache: &Path) -> Result<CellResponseTable> {
    check_grid(&cfg.geometry, &cfg.medium, &grid)?;
    let table = load_or_build(cfg.geometry, grid, cfg.medium, cache)
        .with_context(|| format!("building cell table (cache {})", cache.display()))?;
    if !table.failures().is_empty() {
        eprintln!(
            "warning: {} grid points failed to solve; see failures in the sweep output",
            table.failures().len()
        );
    }
    Ok(table)
}
