//! File formats: field dumps, intensity maps, grayscale renders and the
//! panel design JSON.

use std::io::{Read, Write};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iasa::{PanelDesign, PhaseInit};
use crate::spectrum::ComplexField;
use crate::verify::IntensityMap;
use crate::wave::WaveContext;

const MM: f64 = 1e-3;

fn num(v: f64) -> String {
    format!("{v:.11e}")
}

/// `x_mm,y_mm,re_p,im_p`, one row per sample, x varying fastest.
pub fn write_field_csv<W: Write>(field: &ComplexField, writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["x_mm", "y_mm", "re_p", "im_p"])?;
    let xs = field.xs();
    let ys = field.ys();
    for ((iy, ix), v) in field.samples().indexed_iter() {
        out.write_record([num(xs[ix] / MM), num(ys[iy] / MM), num(v.re), num(v.im)])?;
    }
    out.flush()?;
    Ok(())
}

/// Grid description stored next to a field dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMetadata {
    pub nx: usize,
    pub ny: usize,
    pub dx_mm: f64,
    pub dy_mm: f64,
    pub plane_z_mm: f64,
    pub frequency_hz: f64,
    pub wavelength_mm: f64,
}

impl FieldMetadata {
    pub fn of(field: &ComplexField) -> Self {
        let (dx, dy) = field.spacing();
        Self {
            nx: field.nx(),
            ny: field.ny(),
            dx_mm: dx / MM,
            dy_mm: dy / MM,
            plane_z_mm: field.plane_z() / MM,
            frequency_hz: field.wave().frequency,
            wavelength_mm: field.wave().wavelength / MM,
        }
    }
}

/// Reads a field dump written by [`write_field_csv`]. The grid must be
/// complete and uniformly spaced.
pub fn read_field_csv<R: Read>(reader: R, plane_z: f64, wave: WaveContext) -> Result<ComplexField> {
    let mut input = csv::Reader::from_reader(reader);
    let header: Vec<String> = input.headers()?.iter().map(str::to_owned).collect();
    if header != ["x_mm", "y_mm", "re_p", "im_p"] {
        return Err(Error::Format(format!("unexpected field header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in input.records() {
        let rec = rec?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("bad number in field row: {e}")))?;
        if v.len() != 4 {
            return Err(Error::Format("field rows need 4 columns".into()));
        }
        rows.push(v);
    }
    let axis = |col: usize| -> Vec<f64> {
        let mut a: Vec<f64> = rows.iter().map(|r| r[col]).collect();
        a.sort_by(f64::total_cmp);
        a.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
        a
    };
    let xs = axis(0);
    let ys = axis(1);
    if xs.len() * ys.len() != rows.len() || rows.is_empty() {
        return Err(Error::Format("field samples do not form a full grid".into()));
    }
    let spacing = |a: &[f64]| -> Result<f64> {
        if a.len() < 2 {
            return Ok(0.0);
        }
        let d = a[1] - a[0];
        if a.windows(2).any(|w| ((w[1] - w[0]) - d).abs() > 1e-6 * d.abs()) {
            return Err(Error::Format("field grid is not uniform".into()));
        }
        Ok(d)
    };
    let dx = spacing(&xs)?;
    let dy = spacing(&ys)?;
    if dx <= 0.0 {
        return Err(Error::Format("field needs at least two x samples".into()));
    }
    let index = |a: &[f64], v: f64| a.iter().position(|p| (p - v).abs() < 1e-9).expect("on axis");
    let mut samples = Array2::from_elem((ys.len(), xs.len()), Complex64::new(0.0, 0.0));
    for r in &rows {
        samples[[index(&ys, r[1]), index(&xs, r[0])]] = Complex64::new(r[2], r[3]);
    }
    let dy = if dy > 0.0 { dy } else { dx };
    ComplexField::new(samples, dx * MM, dy * MM, plane_z, wave)
}

/// 8-bit binary PGM, scaled so the maximum maps to 255.
pub fn write_pgm<W: Write>(values: &Array2<f64>, writer: W) -> Result<()> {
    let (h, w) = values.dim();
    let max = values.iter().copied().fold(0.0, f64::max);
    let pixels: Vec<u8> = values
        .iter()
        .map(|&v| {
            if max > 0.0 {
                (v / max * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        })
        .collect();
    let encoder = PnmEncoder::new(writer)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary));
    encoder.write_image(&pixels, w as u32, h as u32, ExtendedColorType::L8)?;
    Ok(())
}

/// `x_mm,z_mm,intensity`, one row per map sample.
pub fn write_map_csv<W: Write>(map: &IntensityMap, writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["x_mm", "z_mm", "intensity"])?;
    for ((iz, ix), v) in map.values.indexed_iter() {
        out.write_record([num(map.xs[ix] / MM), num(map.zs[iz] / MM), num(*v)])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelCell {
    pub ix: usize,
    pub iy: usize,
    pub h1_mm: f64,
    pub w2_mm: f64,
    pub w_mm: f64,
    pub phi_r_rad: f64,
    pub phi_t_rad: f64,
    pub err_r_rad: f64,
    pub err_t_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelExport {
    pub frequency_hz: f64,
    pub seed: Option<u64>,
    pub iterations_r: usize,
    pub iterations_t: usize,
    pub nx: usize,
    pub ny: usize,
    pub pitch_mm: f64,
    pub cells: Vec<PanelCell>,
}

impl PanelExport {
    /// `phi_*` are the IASA target phases the cell was chosen for.
    pub fn of(design: &PanelDesign) -> Self {
        let (ny, nx) = design.shape();
        let cells = design
            .selections
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let (iy, ix) = (i / nx, i % nx);
                PanelCell {
                    ix,
                    iy,
                    h1_mm: s.h1 / MM,
                    w2_mm: s.w2 / MM,
                    w_mm: s.w / MM,
                    phi_r_rad: design.iasa_r.phase_map[[iy, ix]],
                    phi_t_rad: design.iasa_t.phase_map[[iy, ix]],
                    err_r_rad: s.phase_error_r,
                    err_t_rad: s.phase_error_t,
                }
            })
            .collect();
        let seed = match design.init {
            PhaseInit::Zero => None,
            PhaseInit::Random { seed } => Some(seed),
        };
        Self {
            frequency_hz: design.frequency,
            seed,
            iterations_r: design.iasa_r.correlation_history.len(),
            iterations_t: design.iasa_t.correlation_history.len(),
            nx,
            ny,
            pitch_mm: design.layout.cell_pitch / MM,
            cells,
        }
    }
}
