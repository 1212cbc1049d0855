//! Iterative angular spectrum phase retrieval and two-sided panel design.
//!
//! Each side of the panel is a phase-only hologram: a unit-amplitude field
//! whose phase is chosen so that, after propagating a distance `dz`, its
//! intensity reproduces a target image. The reflection side is handled in
//! a mirrored frame, propagating `|z_r|` forward like the transmission
//! side.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::library::{select_cell, CellResponseTable, CellSelection, Side};
use crate::letters;
use crate::profiles::ArrayLayout;
use crate::spectrum::{intensity, propagate, ComplexField};
use crate::stats::pearson;
use crate::wave::{arc, WaveContext};

const MM: f64 = 1e-3;

/// Pearson correlation of two equally shaped images.
pub fn correlation(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(domain(format!(
            "image shapes differ: {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let a: Vec<f64> = a.iter().copied().collect();
    let b: Vec<f64> = b.iter().copied().collect();
    pearson(&a, &b).ok_or(Error::UndefinedCorrelation)
}

/// Reconstruction quality of `intensity` against `target_intensity`.
///
/// Pearson correlation, except that a constant target (where Pearson is
/// undefined) is scored by the uncentred cosine similarity, and a constant
/// reconstruction of a non-constant target scores 0.
fn quality(intensity: &Array2<f64>, target_intensity: &Array2<f64>) -> f64 {
    match correlation(intensity, target_intensity) {
        Ok(c) => c,
        Err(_) => {
            let t0 = target_intensity[[0, 0]];
            if target_intensity.iter().all(|&v| v == t0) {
                let dot: f64 = intensity.iter().zip(target_intensity).map(|(a, b)| a * b).sum();
                let na = intensity.iter().map(|v| v * v).sum::<f64>().sqrt();
                let nb = target_intensity.iter().map(|v| v * v).sum::<f64>().sqrt();
                if na > 0.0 && nb > 0.0 {
                    (dot / (na * nb)).clamp(-1.0, 1.0)
                } else {
                    0.0
                }
            } else {
                0.0
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PhaseInit {
    #[default]
    Zero,
    /// Uniform in `(-π, π]`, reproducible from the seed.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IasaParams {
    /// Distance from the hologram plane to the target plane.
    pub dz: f64,
    pub pitch: f64,
    pub max_iterations: usize,
    /// Stop once the correlation changes by less than this.
    pub tolerance: f64,
    pub init: PhaseInit,
}

#[derive(Debug, Clone)]
pub struct IasaResult {
    /// Hologram-plane phase, `[iy, ix]`.
    pub phase_map: Array2<f64>,
    pub correlation_history: Vec<f64>,
    /// Field at the target plane produced by `phase_map`.
    pub final_field: ComplexField,
}

impl IasaResult {
    pub fn final_correlation(&self) -> f64 {
        *self.correlation_history.last().expect("at least one iteration")
    }
}

fn unit_field(phase: &Array2<f64>) -> Array2<Complex64> {
    phase.mapv(|p| Complex64::from_polar(1.0, p))
}

/// Normalises a non-negative image to a maximum of one.
pub fn normalise_target(image: &Array2<f64>) -> Result<Array2<f64>> {
    if image.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(domain("target image must be finite and non-negative"));
    }
    let max = image.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(domain("target image is all zero"));
    }
    Ok(image.mapv(|v| v / max))
}

/// Phase retrieval for one target amplitude image.
///
/// Per iteration: unit amplitude with the current phase on the hologram
/// plane, propagate by `dz`, score, impose the target amplitude keeping the
/// phase, propagate back by `-dz`, keep the phase. Stops after
/// `max_iterations` or when the score changes by less than `tolerance`.
pub fn run_iasa(target: &Array2<f64>, wave: &WaveContext, params: &IasaParams) -> Result<IasaResult> {
    if !(params.dz.abs() > 0.0 && params.dz.is_finite()) {
        return Err(domain("propagation distance must be non-zero"));
    }
    if params.max_iterations == 0 {
        return Err(domain("at least one iteration is required"));
    }
    let amplitude = normalise_target(target)?;
    let target_intensity = amplitude.mapv(|a| a * a);
    let (ny, nx) = amplitude.dim();

    let mut phase = match params.init {
        PhaseInit::Zero => Array2::zeros((ny, nx)),
        PhaseInit::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Array2::from_shape_simple_fn((ny, nx), || {
                let v: f64 = rng.random_range(-PI..PI);
                if v == -PI {
                    PI
                } else {
                    v
                }
            })
        }
    };
    let plane = |values: Array2<Complex64>| {
        ComplexField::new(values, params.pitch, params.pitch, 0.0, *wave)
    };

    let mut history = Vec::with_capacity(params.max_iterations);
    loop {
        let far = propagate(&plane(unit_field(&phase))?, params.dz);
        let score = quality(&intensity(&far), &target_intensity);
        let converged = history
            .last()
            .is_some_and(|prev: &f64| (score - prev).abs() < params.tolerance);
        history.push(score);
        if converged || history.len() == params.max_iterations {
            return Ok(IasaResult {
                phase_map: phase,
                correlation_history: history,
                final_field: far,
            });
        }
        let constrained = Array2::from_shape_fn((ny, nx), |idx| {
            Complex64::from_polar(amplitude[idx], far.samples()[idx].arg())
        });
        let back = propagate(&far.with_samples(constrained), -params.dz);
        phase = back.samples().mapv(|v| v.arg());
    }
}

/// Nearest-neighbour resampling of an image onto `(ny, nx)`.
pub fn resample_nearest(image: &Array2<f64>, ny: usize, nx: usize) -> Array2<f64> {
    let (sy, sx) = image.dim();
    Array2::from_shape_fn((ny, nx), |(y, x)| {
        let iy = ((y as f64 + 0.5) * sy as f64 / ny as f64).floor() as usize;
        let ix = ((x as f64 + 0.5) * sx as f64 / nx as f64).floor() as usize;
        image[[iy.min(sy - 1), ix.min(sx - 1)]]
    })
}

/// Inputs of a two-sided hologram design.
#[derive(Debug, Clone, PartialEq)]
pub struct HologramSpec {
    pub target_r: Array2<f64>,
    /// Reflection image plane, behind the panel (negative).
    pub z_r: f64,
    pub target_t: Array2<f64>,
    /// Transmission image plane, in front of the panel (positive).
    pub z_t: f64,
    pub frequency: f64,
    pub pitch: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub init: PhaseInit,
}

impl Default for HologramSpec {
    fn default() -> Self {
        Self {
            target_r: letters::letter('C').expect("bundled"),
            z_r: -120.0 * MM,
            target_t: letters::letter('L').expect("bundled"),
            z_t: 150.0 * MM,
            frequency: 6000.0,
            pitch: 14.3 * MM,
            max_iterations: 200,
            tolerance: 1e-4,
            init: PhaseInit::Zero,
        }
    }
}

impl HologramSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.z_r < 0.0 && self.z_t > 0.0) {
            return Err(domain(format!(
                "need z_r < 0 < z_t, got z_r = {} m, z_t = {} m",
                self.z_r, self.z_t
            )));
        }
        if self.target_r.dim() != self.target_t.dim() {
            return Err(domain("reflection and transmission targets differ in shape"));
        }
        if !(self.frequency > 0.0 && self.pitch > 0.0) {
            return Err(domain("frequency and pitch must be positive"));
        }
        Ok(())
    }

    /// Panel shape `(ny, nx)`.
    pub fn shape(&self) -> (usize, usize) {
        self.target_r.dim()
    }

    pub fn layout(&self) -> Result<ArrayLayout> {
        let (ny, nx) = self.shape();
        ArrayLayout::panel(nx, ny, self.pitch)
    }

    fn params(&self, side: Side) -> IasaParams {
        IasaParams {
            dz: match side {
                Side::Reflection => self.z_r.abs(),
                Side::Transmission => self.z_t,
            },
            pitch: self.pitch,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            init: self.init,
        }
    }

    pub fn distance(&self, side: Side) -> f64 {
        self.params(side).dz
    }

    pub fn target(&self, side: Side) -> &Array2<f64> {
        match side {
            Side::Reflection => &self.target_r,
            Side::Transmission => &self.target_t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationStats {
    pub mean_error_r: f64,
    pub max_error_r: f64,
    pub mean_error_t: f64,
    pub max_error_t: f64,
}

impl QuantizationStats {
    pub fn from_selections(selections: &[CellSelection]) -> Self {
        let n = selections.len().max(1) as f64;
        let fold = |f: fn(&CellSelection) -> f64| {
            let sum: f64 = selections.iter().map(f).sum();
            let max = selections.iter().map(f).fold(0.0, f64::max);
            (sum / n, max)
        };
        let (mean_error_r, max_error_r) = fold(|s| s.phase_error_r);
        let (mean_error_t, max_error_t) = fold(|s| s.phase_error_t);
        Self {
            mean_error_r,
            max_error_r,
            mean_error_t,
            max_error_t,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PanelDesign {
    pub frequency: f64,
    pub init: PhaseInit,
    pub layout: ArrayLayout,
    /// One selection per cell, row-major `[iy][ix]`.
    pub selections: Vec<CellSelection>,
    pub iasa_r: IasaResult,
    pub iasa_t: IasaResult,
    pub h1_map: Array2<f64>,
    pub w2_map: Array2<f64>,
    pub stats: QuantizationStats,
}

impl PanelDesign {
    pub fn shape(&self) -> (usize, usize) {
        self.h1_map.dim()
    }

    /// Phases actually realised by the selected cells.
    pub fn achieved_phase(&self, side: Side) -> Array2<f64> {
        let (ny, nx) = self.shape();
        Array2::from_shape_fn((ny, nx), |(y, x)| {
            let s = &self.selections[y * nx + x];
            match side {
                Side::Reflection => s.achieved_r.arg(),
                Side::Transmission => s.achieved_t.arg(),
            }
        })
    }

    /// Quantisation error recomputed from the IASA and achieved maps.
    pub fn recompute_stats(&self) -> QuantizationStats {
        let err = |ideal: &Array2<f64>, achieved: &Array2<f64>| -> (f64, f64) {
            let e: Vec<f64> = ideal.iter().zip(achieved).map(|(a, b)| arc(*a, *b)).collect();
            (
                e.iter().sum::<f64>() / e.len() as f64,
                e.iter().copied().fold(0.0, f64::max),
            )
        };
        let (mean_error_r, max_error_r) =
            err(&self.iasa_r.phase_map, &self.achieved_phase(Side::Reflection));
        let (mean_error_t, max_error_t) =
            err(&self.iasa_t.phase_map, &self.achieved_phase(Side::Transmission));
        QuantizationStats {
            mean_error_r,
            max_error_r,
            mean_error_t,
            max_error_t,
        }
    }
}

/// Retrieves both hologram phases independently, then picks for every cell
/// the table geometry that best realises the pair.
pub fn design_two_sided_panel(spec: &HologramSpec, table: &CellResponseTable) -> Result<PanelDesign> {
    spec.validate()?;
    if table.frequency_index(spec.frequency).is_none() {
        return Err(domain(format!("table does not cover {} Hz", spec.frequency)));
    }
    let wave = WaveContext::new(spec.frequency, table.medium())?;
    let (iasa_r, iasa_t) = rayon::join(
        || run_iasa(&spec.target_r, &wave, &spec.params(Side::Reflection)),
        || run_iasa(&spec.target_t, &wave, &spec.params(Side::Transmission)),
    );
    let (iasa_r, iasa_t) = (iasa_r?, iasa_t?);

    let (ny, nx) = spec.shape();
    let picks: Vec<Result<CellSelection>> = (0..ny * nx)
        .into_par_iter()
        .map(|i| {
            let idx = (i / nx, i % nx);
            select_cell(
                table,
                spec.frequency,
                iasa_r.phase_map[idx],
                iasa_t.phase_map[idx],
                None,
            )
        })
        .collect();
    let mut selections = Vec::with_capacity(picks.len());
    let mut failed = Vec::new();
    for (i, p) in picks.into_iter().enumerate() {
        match p {
            Ok(s) => selections.push(s),
            Err(_) => failed.push(i),
        }
    }
    if !failed.is_empty() {
        return Err(Error::InfeasibleCells(failed));
    }
    let h1_map = Array2::from_shape_fn((ny, nx), |(y, x)| selections[y * nx + x].h1);
    let w2_map = Array2::from_shape_fn((ny, nx), |(y, x)| selections[y * nx + x].w2);
    let stats = QuantizationStats::from_selections(&selections);
    Ok(PanelDesign {
        frequency: spec.frequency,
        init: spec.init,
        layout: spec.layout()?,
        selections,
        iasa_r,
        iasa_t,
        h1_map,
        w2_map,
        stats,
    })
}

/// Correlation of the reconstructed image at one plane distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneScore {
    pub distance: f64,
    pub correlation: f64,
}

#[derive(Debug, Clone)]
pub struct SideVerification {
    pub side: Side,
    pub frequency: f64,
    /// Field of the quantised panel at the nominal image plane.
    pub field: ComplexField,
    pub correlation: f64,
    /// Same, for the unquantised IASA phase with unit amplitude.
    pub ideal_correlation: f64,
    pub plane_scores: Vec<PlaneScore>,
    pub best_plane: PlaneScore,
}

#[derive(Debug, Clone)]
pub struct HologramVerification {
    pub reflection: SideVerification,
    pub transmission: SideVerification,
}

/// Half-width of the distance sweep around the nominal image plane.
pub const PLANE_SWEEP_HALF_WIDTH: f64 = 80.0 * MM;
pub const PLANE_SWEEP_STEP: f64 = 2.0 * MM;

/// Rebuilds the panel field from the cells' tabulated `r` and `t` at
/// `frequency`, propagates each side to its image plane and scores it. A
/// sweep of plane distances locates where each image is sharpest.
pub fn verify_hologram(
    design: &PanelDesign,
    table: &CellResponseTable,
    spec: &HologramSpec,
    frequency: f64,
) -> Result<HologramVerification> {
    let fi = table
        .frequency_index(frequency)
        .ok_or_else(|| domain(format!("table does not cover {frequency} Hz")))?;
    let wave = WaveContext::new(frequency, table.medium())?;
    let (ny, nx) = design.shape();
    let side = |side: Side| -> Result<SideVerification> {
        let boundary = Array2::from_shape_fn((ny, nx), |(y, x)| {
            let [h1i, w2i, wi] = design.selections[y * nx + x].grid_index;
            let e = table
                .entry(fi, wi, w2i, h1i)
                .copied()
                .unwrap_or(crate::duct::ScatteringResult {
                    r: Complex64::new(0.0, 0.0),
                    t: Complex64::new(0.0, 0.0),
                });
            match side {
                Side::Reflection => e.r,
                Side::Transmission => e.t,
            }
        });
        let ideal_phase = match side {
            Side::Reflection => &design.iasa_r.phase_map,
            Side::Transmission => &design.iasa_t.phase_map,
        };
        let plane = ComplexField::new(boundary, spec.pitch, spec.pitch, 0.0, wave)?;
        let ideal = plane.with_samples(unit_field(ideal_phase));
        let target = normalise_target(spec.target(side))?.mapv(|a| a * a);
        let dz = spec.distance(side);

        let field = propagate(&plane, dz);
        let correlation = quality(&intensity(&field), &target);
        let ideal_correlation = quality(&intensity(&propagate(&ideal, dz)), &target);

        let n = (PLANE_SWEEP_HALF_WIDTH / PLANE_SWEEP_STEP).round() as i64;
        let plane_scores: Vec<PlaneScore> = (-n..=n)
            .into_par_iter()
            .filter_map(|i| {
                let d = dz + i as f64 * PLANE_SWEEP_STEP;
                (d > PLANE_SWEEP_STEP / 2.0).then(|| PlaneScore {
                    distance: d,
                    correlation: quality(&intensity(&propagate(&plane, d)), &target),
                })
            })
            .collect();
        let best_plane = *plane_scores
            .iter()
            .reduce(|a, b| if b.correlation > a.correlation { b } else { a })
            .expect("sweep is non-empty");
        Ok(SideVerification {
            side,
            frequency,
            field,
            correlation,
            ideal_correlation,
            plane_scores,
            best_plane,
        })
    };
    Ok(HologramVerification {
        reflection: side(Side::Reflection)?,
        transmission: side(Side::Transmission)?,
    })
}
