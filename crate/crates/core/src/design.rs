//! End-to-end line-array design: target profiles, cell selection and field
//! prediction at the design and evaluation frequencies.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::library::{select_cell, CellResponseTable, CellSelection};
use crate::profiles::{
    diffusion_profile, focusing_profile, steering_profile, ArrayLayout, FocalPoint, PhaseProfile,
};
use crate::verify::{ideal_boundary, predict_from_boundary, DesignReport, RenderGrid};
use crate::wave::WaveContext;

/// What the reflected wave should do.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ReflectionGoal {
    /// Diverge as if from a virtual source at the mirror image of `focus`.
    Diffuse { focus: FocalPoint },
    /// Leave at `angle` radians.
    Steer { angle: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineDesignSpec {
    pub n_cells: usize,
    pub pitch: f64,
    pub design_frequency: f64,
    pub reflection: ReflectionGoal,
    pub transmission_focus: FocalPoint,
    /// Frequencies at which the finished array is evaluated.
    pub eval_frequencies: Vec<f64>,
    pub amplitude_split: Option<f64>,
}

/// Reports for one evaluation frequency.
#[derive(Debug, Clone)]
pub struct FrequencyReports {
    pub frequency: f64,
    /// Target phases with unit amplitude.
    pub ideal: DesignReport,
    /// Tabulated `r`, `t` of the selected cells.
    pub quantized: DesignReport,
}

#[derive(Debug, Clone)]
pub struct LineDesign {
    pub layout: ArrayLayout,
    pub profile: PhaseProfile,
    pub selections: Vec<CellSelection>,
    pub reports: Vec<FrequencyReports>,
}

impl LineDesignSpec {
    pub fn profile(&self, layout: &ArrayLayout, wave: &WaveContext) -> Result<PhaseProfile> {
        let k0 = wave.wavenumber;
        let phi_r = match self.reflection {
            ReflectionGoal::Diffuse { focus } => diffusion_profile(layout, &focus, k0)?,
            ReflectionGoal::Steer { angle } => steering_profile(layout, angle, k0)?,
        };
        let phi_t = focusing_profile(layout, &self.transmission_focus, k0)?;
        PhaseProfile::new(phi_r, phi_t)
    }
}

/// Tabulated coefficients of the selected cells at another frequency.
pub fn boundary_at(
    selections: &[CellSelection],
    table: &CellResponseTable,
    frequency: f64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let fi = table
        .frequency_index(frequency)
        .ok_or_else(|| domain(format!("table does not cover {frequency} Hz")))?;
    let mut r = Vec::with_capacity(selections.len());
    let mut t = Vec::with_capacity(selections.len());
    for s in selections {
        let [h1i, w2i, wi] = s.grid_index;
        let e = table
            .entry(fi, wi, w2i, h1i)
            .ok_or_else(|| domain(format!("no table entry for cell {:?} at {frequency} Hz", s.grid_index)))?;
        r.push(e.r);
        t.push(e.t);
    }
    Ok((r, t))
}

pub fn design_line_array(
    spec: &LineDesignSpec,
    table: &CellResponseTable,
    grid: &RenderGrid,
) -> Result<LineDesign> {
    let layout = ArrayLayout::line(spec.n_cells, spec.pitch)?;
    let wave = WaveContext::new(spec.design_frequency, table.medium())?;
    let profile = spec.profile(&layout, &wave)?;
    let mut selections = Vec::with_capacity(layout.n_cells());
    let mut failed = Vec::new();
    for (i, (&r, &t)) in profile.phi_r.iter().zip(&profile.phi_t).enumerate() {
        match select_cell(table, spec.design_frequency, r, t, spec.amplitude_split) {
            Ok(s) => selections.push(s),
            Err(Error::Infeasible { .. }) => failed.push(i),
            Err(e) => return Err(e),
        }
    }
    if !failed.is_empty() {
        return Err(Error::InfeasibleCells(failed));
    }

    let mut reports = Vec::with_capacity(spec.eval_frequencies.len());
    for &f in &spec.eval_frequencies {
        let eval_wave = WaveContext::new(f, table.medium())?;
        let (r, t) = boundary_at(&selections, table, f)?;
        let ideal = predict_from_boundary(
            &ideal_boundary(&profile.phi_r),
            &ideal_boundary(&profile.phi_t),
            &layout,
            &eval_wave,
            grid,
            Some(&spec.transmission_focus),
        )?;
        let quantized =
            predict_from_boundary(&r, &t, &layout, &eval_wave, grid, Some(&spec.transmission_focus))?;
        reports.push(FrequencyReports {
            frequency: f,
            ideal,
            quantized,
        });
    }
    Ok(LineDesign {
        layout,
        profile,
        selections,
        reports,
    })
}
