//! Field prediction for line-array designs.
//!
//! Cells become piecewise-constant complex boundary values on a finely
//! sampled line embedded in a wide zero-valued window. The transmitted side
//! propagates forward; the reflected side propagates forward in a mirrored
//! frame. Foci are read off x–z intensity maps and steering angles off the
//! far-field angular spectrum.

use std::f64::consts::FRAC_PI_2;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::library::CellSelection;
use crate::profiles::{ArrayLayout, FocalPoint};
use crate::spectrum::{propagate_with, ComplexField, Padding};
use crate::wave::WaveContext;

const MM: f64 = 1e-3;

/// Focus peaks weaker than this multiple of the mean boundary intensity are
/// treated as plain aperture diffraction.
pub const FOCAL_GAIN_THRESHOLD: f64 = 3.0;

/// Sampling of the rendered maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderGrid {
    /// Boundary samples per cell.
    pub supersample: usize,
    /// Half-width of the computational window along x.
    pub window_half_width: f64,
    /// Half-width of the stored maps along x.
    pub map_half_width: f64,
    pub z_start: f64,
    pub z_stop: f64,
    pub z_step: f64,
}

impl Default for RenderGrid {
    fn default() -> Self {
        Self {
            supersample: 7,
            window_half_width: 600.0 * MM,
            map_half_width: 300.0 * MM,
            z_start: 10.0 * MM,
            z_stop: 400.0 * MM,
            z_step: 2.0 * MM,
        }
    }
}

impl RenderGrid {
    pub fn zs(&self) -> Vec<f64> {
        let n = ((self.z_stop - self.z_start) / self.z_step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.z_start + self.z_step * i as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.supersample == 0 {
            return Err(domain("supersample must be at least 1"));
        }
        if !(self.z_step > 0.0 && self.z_stop >= self.z_start && self.z_start > 0.0) {
            return Err(domain("z range must be positive and increasing"));
        }
        if !(self.window_half_width > 0.0 && self.map_half_width > 0.0) {
            return Err(domain("window widths must be positive"));
        }
        Ok(())
    }
}

/// Intensity on an x–z grid, `values[[iz, ix]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMap {
    pub xs: Vec<f64>,
    pub zs: Vec<f64>,
    pub values: Array2<f64>,
}

/// Unit-amplitude boundary values carrying the given phases.
pub fn ideal_boundary(phases: &[f64]) -> Vec<Complex64> {
    phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect()
}

/// Piecewise-constant boundary field of a line array.
pub fn line_boundary(
    values: &[Complex64],
    layout: &ArrayLayout,
    wave: &WaveContext,
    grid: &RenderGrid,
) -> Result<ComplexField> {
    if layout.ny != 1 || values.len() != layout.n_cells() {
        return Err(domain("boundary values must match a line layout"));
    }
    grid.validate()?;
    let pitch = layout.cell_pitch;
    let dx = pitch / grid.supersample as f64;
    let n = ((2.0 * grid.window_half_width / dx).ceil() as usize).next_power_of_two();
    let first_edge = layout.positions[0][0] - pitch / 2.0;
    let samples: Vec<Complex64> = crate::spectrum::centred_axis(n, dx)
        .into_iter()
        .map(|x| {
            let cell = ((x - first_edge) / pitch).floor();
            if cell >= 0.0 && (cell as usize) < values.len() {
                values[cell as usize]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    ComplexField::line(samples, dx, 0.0, *wave)
}

/// Intensity of a line field at each distance in `zs`.
pub fn render_map(boundary: &ComplexField, zs: &[f64], map_half_width: f64) -> IntensityMap {
    let xs_all = boundary.xs();
    let keep: Vec<usize> = (0..xs_all.len())
        .filter(|&i| xs_all[i].abs() <= map_half_width)
        .collect();
    let rows: Vec<Vec<f64>> = zs
        .par_iter()
        .map(|&z| {
            let f = propagate_with(boundary, z, Padding::None);
            keep.iter().map(|&i| f.samples()[[0, i]].norm_sqr()).collect()
        })
        .collect();
    let values = Array2::from_shape_fn((zs.len(), keep.len()), |(iz, ix)| rows[iz][ix]);
    IntensityMap {
        xs: keep.iter().map(|&i| xs_all[i]).collect(),
        zs: zs.to_vec(),
        values,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocusPeak {
    pub x: f64,
    pub z: f64,
    pub value: f64,
    /// Another sample shares the maximum value.
    pub tie: bool,
}

fn parabolic_offset(lo: f64, mid: f64, hi: f64) -> f64 {
    let denom = lo - 2.0 * mid + hi;
    if denom >= 0.0 {
        return 0.0;
    }
    (0.5 * (lo - hi) / denom).clamp(-0.5, 0.5)
}

/// Maximum of an intensity map with parabolic refinement along both axes.
/// The first maximum in row-major order wins ties. `None` for a flat map.
pub fn locate_focus(values: &Array2<f64>, xs: &[f64], zs: &[f64]) -> Option<FocusPeak> {
    let (nz, nx) = values.dim();
    if nz == 0 || nx == 0 || xs.len() != nx || zs.len() != nz {
        return None;
    }
    let mut best = (0, 0);
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    for ((iz, ix), &v) in values.indexed_iter() {
        if v > max {
            max = v;
            best = (iz, ix);
        }
        min = min.min(v);
    }
    // flat maps, and maps where every value was NaN, have no peak
    if max <= min || max == f64::NEG_INFINITY {
        return None;
    }
    let tol = max.abs() * 1e-12;
    let tie = values
        .indexed_iter()
        .any(|(idx, &v)| idx != best && (v - max).abs() <= tol);

    let (iz, ix) = best;
    let refine = |axis: &[f64], i: usize, lo: Option<f64>, hi: Option<f64>| match (lo, hi) {
        (Some(l), Some(h)) => axis[i] + parabolic_offset(l, max, h) * (axis[i + 1] - axis[i - 1]) / 2.0,
        _ => axis[i],
    };
    let x = refine(
        xs,
        ix,
        ix.checked_sub(1).map(|j| values[[iz, j]]),
        (ix + 1 < nx).then(|| values[[iz, ix + 1]]),
    );
    let z = refine(
        zs,
        iz,
        iz.checked_sub(1).map(|j| values[[j, ix]]),
        (iz + 1 < nz).then(|| values[[iz + 1, ix]]),
    );
    Some(FocusPeak { x, z, value: max, tie })
}

/// Far-field intensity of a line boundary versus angle, `kx = k sin θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FarField {
    pub angles: Vec<f64>,
    pub intensity: Vec<f64>,
}

pub const FAR_FIELD_STEP_DEG: f64 = 0.05;

/// Evaluates the boundary's angular spectrum on the propagating band.
pub fn far_field(boundary: &ComplexField) -> FarField {
    let k = boundary.wave().wavenumber;
    let (dx, _) = boundary.spacing();
    let xs = boundary.xs();
    let lit: Vec<(f64, Complex64)> = xs
        .iter()
        .zip(boundary.samples().row(0))
        .filter(|(_, v)| v.norm_sqr() > 0.0)
        .map(|(x, v)| (*x, *v))
        .collect();
    let n = (180.0 / FAR_FIELD_STEP_DEG).round() as usize;
    let angles: Vec<f64> = (0..=n)
        .map(|i| (-90.0 + i as f64 * FAR_FIELD_STEP_DEG).to_radians())
        .collect();
    let intensity = angles
        .par_iter()
        .map(|&theta| {
            let kx = k * theta.sin();
            let sum: Complex64 = lit
                .iter()
                .map(|(x, v)| v * Complex64::from_polar(1.0, -kx * x))
                .sum();
            (sum * dx).norm_sqr()
        })
        .collect();
    FarField { angles, intensity }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lobe {
    /// Main-lobe direction, radians.
    pub angle: f64,
    pub peak: f64,
    /// Strongest secondary lobe over the main lobe, in `[0, 1]`.
    pub side_lobe_ratio: f64,
}

/// Main lobe and side-lobe ratio; `None` when the pattern is all zero.
pub fn steering_lobe(angles: &[f64], intensity: &[f64]) -> Option<Lobe> {
    let n = intensity.len();
    if n == 0 || n != angles.len() {
        return None;
    }
    let (main, &peak) = intensity
        .iter()
        .enumerate()
        .fold(None::<(usize, &f64)>, |acc, (i, v)| match acc {
            Some((_, b)) if *v <= *b => acc,
            _ => Some((i, v)),
        })?;
    if !(peak > 0.0 && peak.is_finite()) {
        return None;
    }
    let is_peak = |i: usize| {
        let left = i == 0 || intensity[i] > intensity[i - 1];
        let right = i + 1 == n || intensity[i] >= intensity[i + 1];
        left && right
    };
    // skip the shoulders of the main lobe
    let mut lo = main;
    while lo > 0 && intensity[lo - 1] <= intensity[lo] {
        lo -= 1;
    }
    let mut hi = main;
    while hi + 1 < n && intensity[hi + 1] <= intensity[hi] {
        hi += 1;
    }
    let floor = peak * 1e-6;
    let side = (0..n)
        .filter(|&i| (i < lo || i > hi) && is_peak(i) && intensity[i] > floor)
        .map(|i| intensity[i])
        .fold(0.0, f64::max);
    let angle = if main > 0 && main + 1 < n {
        angles[main]
            + parabolic_offset(intensity[main - 1], peak, intensity[main + 1])
                * (angles[main + 1] - angles[main - 1])
                / 2.0
    } else {
        angles[main]
    };
    Some(Lobe {
        angle: angle.clamp(-FRAC_PI_2, FRAC_PI_2),
        peak,
        side_lobe_ratio: (side / peak).clamp(0.0, 1.0),
    })
}

/// Predicted fields and figures of merit of a line-array design.
#[derive(Debug, Clone)]
pub struct DesignReport {
    pub frequency: f64,
    pub reflection: IntensityMap,
    pub transmission: IntensityMap,
    /// Transmission-side maximum; `None` for a flat map.
    pub focus: Option<FocusPeak>,
    /// Distance from `focus` to the requested focal point.
    pub focus_error: Option<f64>,
    /// Focus peak over mean boundary intensity.
    pub focal_gain: f64,
    /// Peak too weak to be a focus (see [`FOCAL_GAIN_THRESHOLD`]).
    pub diffraction_only: bool,
    /// Reflection-side far-field main lobe.
    pub steering: Option<Lobe>,
    pub reflection_far_field: FarField,
}

/// Predicts both sides from per-cell boundary values.
pub fn predict_from_boundary(
    boundary_r: &[Complex64],
    boundary_t: &[Complex64],
    layout: &ArrayLayout,
    wave: &WaveContext,
    grid: &RenderGrid,
    focal_target: Option<&FocalPoint>,
) -> Result<DesignReport> {
    let zs = grid.zs();
    let field_r = line_boundary(boundary_r, layout, wave, grid)?;
    let field_t = line_boundary(boundary_t, layout, wave, grid)?;
    let (reflection, transmission) = rayon::join(
        || render_map(&field_r, &zs, grid.map_half_width),
        || render_map(&field_t, &zs, grid.map_half_width),
    );
    let focus = locate_focus(&transmission.values, &transmission.xs, &transmission.zs);
    let mean_boundary =
        boundary_t.iter().map(|v| v.norm_sqr()).sum::<f64>() / boundary_t.len() as f64;
    let focal_gain = match (&focus, mean_boundary > 0.0) {
        (Some(f), true) => f.value / mean_boundary,
        _ => 0.0,
    };
    let focus_error = match (&focus, focal_target) {
        (Some(f), Some(t)) => Some((f.z - t.z).hypot(f.x - t.x)),
        _ => None,
    };
    let reflection_far_field = far_field(&field_r);
    let steering = steering_lobe(&reflection_far_field.angles, &reflection_far_field.intensity);
    Ok(DesignReport {
        frequency: wave.frequency,
        reflection,
        transmission,
        focus,
        focus_error,
        focal_gain,
        diffraction_only: focal_gain < FOCAL_GAIN_THRESHOLD,
        steering,
        reflection_far_field,
    })
}

/// Predicts both sides from the selected cells' achieved coefficients.
pub fn predict_fields(
    selections: &[CellSelection],
    layout: &ArrayLayout,
    wave: &WaveContext,
    grid: &RenderGrid,
    focal_target: Option<&FocalPoint>,
) -> Result<DesignReport> {
    let r: Vec<Complex64> = selections.iter().map(|s| s.achieved_r).collect();
    let t: Vec<Complex64> = selections.iter().map(|s| s.achieved_t).collect();
    predict_from_boundary(&r, &t, layout, wave, grid, focal_target)
}
