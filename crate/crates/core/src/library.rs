//! Swept cell responses and their inversion.
//!
//! A [`CellResponseTable`] holds the scattering of every cell on the
//! Cartesian grid `h1 × w2 × w × frequency`. [`select_cell`] inverts it: for
//! a pair of target phases it returns the grid cell whose reflection and
//! transmission phases are jointly closest.

use std::f64::consts::TAU;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::duct::{scattering, ScatteringResult, UnitCellGeometry};
use crate::error::{domain, Error, Result};
use crate::wave::{arc, wrap, Medium, WaveContext};

const MM: f64 = 1e-3;

/// Allowed deviation of `|t|^2` from a requested amplitude split.
pub const SPLIT_TOLERANCE: f64 = 0.1;

/// Header of the table cache file.
pub const TABLE_CSV_HEADER: [&str; 8] = [
    "h1_mm", "w2_mm", "w_mm", "freq_hz", "re_r", "im_r", "re_t", "im_t",
];

/// Frequencies closer than this are the same table frequency.
const FREQ_MATCH_HZ: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Reflection,
    Transmission,
}

/// Sample points of a sweep. Lengths in metres, frequencies in hertz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub h1: Vec<f64>,
    pub w2: Vec<f64>,
    pub w: Vec<f64>,
    pub frequencies: Vec<f64>,
}

/// `start, start + step, …` up to and including `stop` (within rounding).
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| start + step * i as f64).collect()
}

impl SweepGrid {
    /// Design grid: h1 in [1, 35] mm by 0.5, w2 in [1, 5] mm by 0.1, w fixed
    /// at 8 mm, 4–8 kHz in 500 Hz steps.
    pub fn design_default() -> Self {
        Self {
            h1: linspace_step(1.0, 35.0, 0.5).into_iter().map(|v| v * MM).collect(),
            w2: linspace_step(1.0, 5.0, 0.1).into_iter().map(|v| v * MM).collect(),
            w: vec![8.0 * MM],
            frequencies: linspace_step(4000.0, 8000.0, 500.0),
        }
    }

    /// Slit widths of the amplitude sweep, 0.5 to 14.3 mm by 0.2 mm.
    pub fn default_w_axis() -> Vec<f64> {
        linspace_step(0.5, 14.3, 0.2).into_iter().map(|v| v * MM).collect()
    }

    /// Adds a frequency, keeping the axis sorted and free of duplicates.
    pub fn with_frequency(mut self, f: f64) -> Self {
        if !self.frequencies.iter().any(|&g| (g - f).abs() < FREQ_MATCH_HZ) {
            self.frequencies.push(f);
            self.frequencies.sort_by(f64::total_cmp);
        }
        self
    }

    pub fn len(&self) -> usize {
        self.h1.len() * self.w2.len() * self.w.len() * self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [
            ("h1", &self.h1),
            ("w2", &self.w2),
            ("w", &self.w),
            ("frequencies", &self.frequencies),
        ] {
            if axis.is_empty() {
                return Err(domain(format!("{name} grid is empty")));
            }
            if axis.iter().any(|v| !v.is_finite()) {
                return Err(domain(format!("{name} grid has non-finite values")));
            }
            if axis.windows(2).any(|p| p[1] <= p[0]) {
                return Err(domain(format!("{name} grid is not strictly increasing")));
            }
        }
        if self.frequencies[0] <= 0.0 {
            return Err(domain("frequencies must be positive"));
        }
        Ok(())
    }
}

/// A grid point whose geometry or solve failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedPoint {
    pub index: [usize; 4],
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResponseTable {
    defaults: UnitCellGeometry,
    medium: Medium,
    grid: SweepGrid,
    /// Row-major over (frequency, w, w2, h1); `None` marks a failed point.
    entries: Vec<Option<ScatteringResult>>,
    failures: Vec<FailedPoint>,
}

impl CellResponseTable {
    pub fn defaults(&self) -> &UnitCellGeometry {
        &self.defaults
    }

    pub fn medium(&self) -> &Medium {
        &self.medium
    }

    pub fn grid(&self) -> &SweepGrid {
        &self.grid
    }

    pub fn failures(&self) -> &[FailedPoint] {
        &self.failures
    }

    fn offset(&self, fi: usize, wi: usize, w2i: usize, h1i: usize) -> usize {
        let g = &self.grid;
        ((fi * g.w.len() + wi) * g.w2.len() + w2i) * g.h1.len() + h1i
    }

    pub fn entry(&self, fi: usize, wi: usize, w2i: usize, h1i: usize) -> Option<&ScatteringResult> {
        self.entries[self.offset(fi, wi, w2i, h1i)].as_ref()
    }

    pub fn frequency_index(&self, frequency: f64) -> Option<usize> {
        self.grid
            .frequencies
            .iter()
            .position(|&f| (f - frequency).abs() < FREQ_MATCH_HZ)
    }

    /// Index of the grid value closest to `value` on one geometry axis.
    pub fn nearest(axis: &[f64], value: f64) -> usize {
        axis.iter()
            .enumerate()
            .min_by(|a, b| (a.1 - value).abs().total_cmp(&(b.1 - value).abs()))
            .map(|(i, _)| i)
            .expect("axes are non-empty")
    }

    /// Responses along h1 with the other axes fixed; failed points skipped.
    pub fn sweep_h1(&self, fi: usize, w2i: usize, wi: usize) -> Vec<ScatteringResult> {
        (0..self.grid.h1.len())
            .filter_map(|h| self.entry(fi, wi, w2i, h).copied())
            .collect()
    }

    pub fn sweep_w2(&self, fi: usize, h1i: usize, wi: usize) -> Vec<ScatteringResult> {
        (0..self.grid.w2.len())
            .filter_map(|k| self.entry(fi, wi, k, h1i).copied())
            .collect()
    }

    pub fn sweep_w(&self, fi: usize, h1i: usize, w2i: usize) -> Vec<ScatteringResult> {
        (0..self.grid.w.len())
            .filter_map(|k| self.entry(fi, k, w2i, h1i).copied())
            .collect()
    }

    /// Geometry of the grid point `(h1i, w2i, wi)`.
    pub fn geometry(&self, h1i: usize, w2i: usize, wi: usize) -> UnitCellGeometry {
        self.defaults
            .with_h1(self.grid.h1[h1i])
            .with_w2(self.grid.w2[w2i])
            .with_w(self.grid.w[wi])
    }

    /// Identity of the table contents: defaults, medium and grid.
    pub fn content_hash(&self) -> String {
        content_hash(&self.defaults, &self.grid, &self.medium)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(TABLE_CSV_HEADER)?;
        let g = &self.grid;
        for (fi, &f) in g.frequencies.iter().enumerate() {
            for (wi, &w) in g.w.iter().enumerate() {
                for (w2i, &w2) in g.w2.iter().enumerate() {
                    for (h1i, &h1) in g.h1.iter().enumerate() {
                        let Some(e) = self.entry(fi, wi, w2i, h1i) else {
                            continue;
                        };
                        out.write_record(
                            [h1 / MM, w2 / MM, w / MM, f, e.r.re, e.r.im, e.t.re, e.t.im]
                                .iter()
                                .map(|v| sig12(*v)),
                        )?;
                    }
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a cache file produced for exactly this grid.
    pub fn read_csv<R: Read>(
        reader: R,
        defaults: UnitCellGeometry,
        grid: SweepGrid,
        medium: Medium,
    ) -> Result<Self> {
        grid.validate()?;
        let mut input = csv::Reader::from_reader(reader);
        let header: Vec<String> = input.headers()?.iter().map(str::to_owned).collect();
        if header != TABLE_CSV_HEADER {
            return Err(Error::Format(format!("unexpected table header {header:?}")));
        }
        let mut entries = vec![None; grid.len()];
        let mut table = Self {
            defaults,
            medium,
            grid,
            entries: Vec::new(),
            failures: Vec::new(),
        };
        let locate = |axis: &[f64], v: f64, name: &str| -> Result<usize> {
            let i = Self::nearest(axis, v);
            if (axis[i] - v).abs() > 1e-9 * axis[i].abs().max(1e-3) {
                return Err(Error::Format(format!("{name} = {v} is not on the grid")));
            }
            Ok(i)
        };
        for record in input.records() {
            let record = record?;
            let vals: Vec<f64> = record
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("bad number in table row: {e}")))?;
            if vals.len() != 8 {
                return Err(Error::Format(format!("expected 8 columns, got {}", vals.len())));
            }
            let g = &table.grid;
            let h1i = locate(&g.h1, vals[0] * MM, "h1")?;
            let w2i = locate(&g.w2, vals[1] * MM, "w2")?;
            let wi = locate(&g.w, vals[2] * MM, "w")?;
            let fi = locate(&g.frequencies, vals[3], "frequency")?;
            let off = table.offset(fi, wi, w2i, h1i);
            entries[off] = Some(ScatteringResult {
                r: Complex64::new(vals[4], vals[5]),
                t: Complex64::new(vals[6], vals[7]),
            });
        }
        table.entries = entries;
        table.failures = table.missing_points();
        Ok(table)
    }

    fn missing_points(&self) -> Vec<FailedPoint> {
        let g = &self.grid;
        let mut out = Vec::new();
        for fi in 0..g.frequencies.len() {
            for wi in 0..g.w.len() {
                for w2i in 0..g.w2.len() {
                    for h1i in 0..g.h1.len() {
                        if self.entry(fi, wi, w2i, h1i).is_none() {
                            out.push(FailedPoint {
                                index: [h1i, w2i, wi, fi],
                                reason: "missing from cache".into(),
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// Formats with 12 significant digits.
fn sig12(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn content_hash(defaults: &UnitCellGeometry, grid: &SweepGrid, medium: &Medium) -> String {
    #[derive(Serialize)]
    struct Key<'a> {
        defaults: &'a UnitCellGeometry,
        grid: &'a SweepGrid,
        medium: &'a Medium,
    }
    let bytes = serde_json::to_vec(&Key {
        defaults,
        grid,
        medium,
    })
    .expect("plain data serializes");
    hex::encode(Sha256::digest(bytes))
}

/// Solves every grid point. Points whose geometry is invalid are recorded
/// as failures rather than aborting the sweep.
pub fn build_table(
    defaults: UnitCellGeometry,
    grid: SweepGrid,
    medium: Medium,
) -> Result<CellResponseTable> {
    grid.validate()?;
    let waves = grid
        .frequencies
        .iter()
        .map(|&f| WaveContext::new(f, &medium))
        .collect::<Result<Vec<_>>>()?;
    let (nh, nw2, nw) = (grid.h1.len(), grid.w2.len(), grid.w.len());
    let results: Vec<std::result::Result<ScatteringResult, String>> = (0..grid.len())
        .into_par_iter()
        .map(|off| {
            let h1i = off % nh;
            let w2i = (off / nh) % nw2;
            let wi = (off / (nh * nw2)) % nw;
            let fi = off / (nh * nw2 * nw);
            let g = defaults
                .with_h1(grid.h1[h1i])
                .with_w2(grid.w2[w2i])
                .with_w(grid.w[wi]);
            g.discretize()
                .and_then(|chain| scattering(&chain, waves[fi].wavenumber))
                .map_err(|e| e.to_string())
        })
        .collect();

    let mut entries = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (off, res) in results.into_iter().enumerate() {
        match res {
            Ok(r) => entries.push(Some(r)),
            Err(reason) => {
                entries.push(None);
                failures.push(FailedPoint {
                    index: [
                        off % nh,
                        (off / nh) % nw2,
                        (off / (nh * nw2)) % nw,
                        off / (nh * nw2 * nw),
                    ],
                    reason,
                });
            }
        }
    }
    Ok(CellResponseTable {
        defaults,
        medium,
        grid,
        entries,
        failures,
    })
}

/// Loads the table from `cache_dir` when present, otherwise builds it and
/// writes the cache atomically. Either way the values are those stored in
/// the cache file.
pub fn load_or_build(
    defaults: UnitCellGeometry,
    grid: SweepGrid,
    medium: Medium,
    cache_dir: &Path,
) -> Result<CellResponseTable> {
    let path = cache_path(cache_dir, &content_hash(&defaults, &grid, &medium));
    if path.exists() {
        let file = fs::File::open(&path)?;
        return CellResponseTable::read_csv(file, defaults, grid, medium);
    }
    let table = build_table(defaults, grid, medium)?;
    fs::create_dir_all(cache_dir)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    write_atomic(&path, &buf)?;
    // hand back the stored values so a cache hit gives identical results
    CellResponseTable::read_csv(buf.as_slice(), table.defaults, table.grid, table.medium)
}

pub fn cache_path(cache_dir: &Path, hash: &str) -> PathBuf {
    cache_dir.join(format!("table-{}.csv", &hash[..16]))
}

/// Writes to a sibling temporary file then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Length of the shortest arc of the circle that holds every phase.
pub fn coverage_span(phases: &[f64]) -> Result<f64> {
    if phases.len() < 2 {
        return Err(domain("coverage span needs at least two samples"));
    }
    let mut p: Vec<f64> = phases.iter().map(|&v| v.rem_euclid(TAU)).collect();
    p.sort_by(f64::total_cmp);
    let mut max_gap = p[0] + TAU - p[p.len() - 1];
    for w in p.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    Ok((TAU - max_gap).max(0.0))
}

pub fn side_phases(results: &[ScatteringResult], side: Side) -> Vec<f64> {
    results
        .iter()
        .map(|r| match side {
            Side::Reflection => r.phase_r(),
            Side::Transmission => r.phase_t(),
        })
        .collect()
}

/// Coverage span of one side's phases over a sweep.
pub fn sweep_coverage(results: &[ScatteringResult], side: Side) -> Result<f64> {
    coverage_span(&side_phases(results, side))
}

/// Sum of wrapped phase steps along a sweep.
pub fn total_variation(phases: &[f64]) -> f64 {
    phases.windows(2).map(|w| arc(w[1], w[0])).sum()
}

/// A selected grid cell and how well it hits the requested phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSelection {
    pub h1: f64,
    pub w2: f64,
    pub w: f64,
    /// Grid indices `(h1, w2, w)` in the table.
    pub grid_index: [usize; 3],
    pub achieved_r: Complex64,
    pub achieved_t: Complex64,
    pub phase_error_r: f64,
    pub phase_error_t: f64,
}

/// Exhaustive joint search at one table frequency.
///
/// Minimises `d(target_r, arg r) + d(target_t, arg t)` over every grid cell;
/// ties go to smaller h1, then smaller w2, then smaller w. With an
/// `amplitude_split`, only cells with `| |t|^2 - split | <= 0.1` qualify.
pub fn select_cell(
    table: &CellResponseTable,
    frequency: f64,
    target_phi_r: f64,
    target_phi_t: f64,
    amplitude_split: Option<f64>,
) -> Result<CellSelection> {
    if !(target_phi_r.is_finite() && target_phi_t.is_finite()) {
        return Err(domain("target phases must be finite"));
    }
    let fi = table
        .frequency_index(frequency)
        .ok_or_else(|| domain(format!("table has no entries at {frequency} Hz")))?;
    let g = table.grid();
    let (tr, tt) = (wrap(target_phi_r), wrap(target_phi_t));

    let mut best: Option<(f64, [usize; 3], ScatteringResult)> = None;
    let mut nearest_split: Option<f64> = None;
    for h1i in 0..g.h1.len() {
        for w2i in 0..g.w2.len() {
            for wi in 0..g.w.len() {
                let Some(e) = table.entry(fi, wi, w2i, h1i) else {
                    continue;
                };
                if let Some(split) = amplitude_split {
                    let power = e.t.norm_sqr();
                    if nearest_split.is_none_or(|n: f64| (power - split).abs() < (n - split).abs()) {
                        nearest_split = Some(power);
                    }
                    if (power - split).abs() > SPLIT_TOLERANCE {
                        continue;
                    }
                }
                let cost = arc(tr, e.phase_r()) + arc(tt, e.phase_t());
                if best.as_ref().is_none_or(|b| cost < b.0) {
                    best = Some((cost, [h1i, w2i, wi], *e));
                }
            }
        }
    }
    match best {
        Some((_, idx, e)) => Ok(CellSelection {
            h1: g.h1[idx[0]],
            w2: g.w2[idx[1]],
            w: g.w[idx[2]],
            grid_index: idx,
            achieved_r: e.r,
            achieved_t: e.t,
            phase_error_r: arc(tr, e.phase_r()),
            phase_error_t: arc(tt, e.phase_t()),
        }),
        None => match (amplitude_split, nearest_split) {
            (Some(requested), Some(nearest)) => Err(Error::Infeasible {
                requested,
                tolerance: SPLIT_TOLERANCE,
                nearest,
            }),
            _ => Err(domain("table has no valid entries at this frequency")),
        },
    }
}
