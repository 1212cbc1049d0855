//! Angular spectrum propagation between parallel planes.
//!
//! A field sampled on a uniform grid is decomposed into plane waves by an
//! FFT, every component is advanced by `exp(-j kz dz)` with
//! `kz = sqrt(k² - kx² - ky²)`, and the result is transformed back.
//! Evanescent components always decay, whichever the sign of `dz`.
//!
//! Line fields are stored as a single row (`ny == 1`) and propagate with
//! `ky = 0`.

use std::f64::consts::TAU;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{domain, Result};
use crate::wave::WaveContext;

/// Complex pressure on a plane `z = plane_z`, indexed `[iy, ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    samples: Array2<Complex64>,
    dx: f64,
    dy: f64,
    plane_z: f64,
    wave: WaveContext,
}

impl ComplexField {
    /// Rejects spacings of λ/2 or more, which alias the propagating band.
    pub fn new(
        samples: Array2<Complex64>,
        dx: f64,
        dy: f64,
        plane_z: f64,
        wave: WaveContext,
    ) -> Result<Self> {
        let half = wave.wavelength / 2.0;
        let coarse_y = samples.nrows() > 1 && dy >= half;
        if dx >= half || coarse_y {
            return Err(domain(format!(
                "sample spacing ({dx}, {dy}) m is not below half a wavelength ({half} m)"
            )));
        }
        Self::new_allow_aliasing(samples, dx, dy, plane_z, wave)
    }

    /// Like [`ComplexField::new`] without the half-wavelength check.
    pub fn new_allow_aliasing(
        samples: Array2<Complex64>,
        dx: f64,
        dy: f64,
        plane_z: f64,
        wave: WaveContext,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(domain("field has no samples"));
        }
        if !(dx > 0.0 && dy > 0.0) {
            return Err(domain("sample spacing must be positive"));
        }
        Ok(Self {
            samples,
            dx,
            dy,
            plane_z,
            wave,
        })
    }

    /// Single-row field along x.
    pub fn line(samples: Vec<Complex64>, dx: f64, plane_z: f64, wave: WaveContext) -> Result<Self> {
        let n = samples.len();
        let arr = Array2::from_shape_vec((1, n), samples).map_err(|e| domain(e.to_string()))?;
        Self::new(arr, dx, dx, plane_z, wave)
    }

    pub fn samples(&self) -> &Array2<Complex64> {
        &self.samples
    }

    pub fn into_samples(self) -> Array2<Complex64> {
        self.samples
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.dx, self.dy)
    }

    pub fn plane_z(&self) -> f64 {
        self.plane_z
    }

    pub fn wave(&self) -> &WaveContext {
        &self.wave
    }

    pub fn nx(&self) -> usize {
        self.samples.ncols()
    }

    pub fn ny(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_line(&self) -> bool {
        self.ny() == 1
    }

    /// Sample x coordinates, centred on zero.
    pub fn xs(&self) -> Vec<f64> {
        centred_axis(self.nx(), self.dx)
    }

    pub fn ys(&self) -> Vec<f64> {
        if self.is_line() {
            vec![0.0]
        } else {
            centred_axis(self.ny(), self.dy)
        }
    }

    /// Same grid and plane, different values.
    pub fn with_samples(&self, samples: Array2<Complex64>) -> Self {
        assert_eq!(samples.dim(), self.samples.dim(), "sample shape changed");
        Self {
            samples,
            ..self.clone()
        }
    }

    /// Sum of `|p|^2` over the grid.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v.norm_sqr()).sum()
    }
}

pub fn centred_axis(n: usize, d: f64) -> Vec<f64> {
    (0..n).map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * d).collect()
}

/// Angular wavenumbers of an `n`-point FFT with sample spacing `d`.
pub fn fft_wavenumbers(n: usize, d: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let m = if i <= (n - 1) / 2 { i as f64 } else { i as f64 - n as f64 };
            TAU * m / (n as f64 * d)
        })
        .collect()
}

/// Unnormalised forward transform of a field with its wavenumber axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Array2<Complex64>,
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
}

fn fft2(data: &mut Array2<Complex64>, inverse: bool) {
    let (ny, nx) = data.dim();
    let mut planner = FftPlanner::<f64>::new();
    let row_fft = if inverse {
        planner.plan_fft_inverse(nx)
    } else {
        planner.plan_fft_forward(nx)
    };
    for mut row in data.rows_mut() {
        match row.as_slice_mut() {
            Some(s) => row_fft.process(s),
            None => {
                let mut buf: Vec<Complex64> = row.to_vec();
                row_fft.process(&mut buf);
                row.iter_mut().zip(buf).for_each(|(d, v)| *d = v);
            }
        }
    }
    if ny > 1 {
        let col_fft = if inverse {
            planner.plan_fft_inverse(ny)
        } else {
            planner.plan_fft_forward(ny)
        };
        let mut buf = vec![Complex64::new(0.0, 0.0); ny];
        for mut col in data.columns_mut() {
            buf.iter_mut().zip(col.iter()).for_each(|(b, v)| *b = *v);
            col_fft.process(&mut buf);
            col.iter_mut().zip(&buf).for_each(|(d, v)| *d = *v);
        }
    }
    if inverse {
        let scale = 1.0 / (nx * ny) as f64;
        data.mapv_inplace(|v| v * scale);
    }
}

pub fn spectrum(field: &ComplexField) -> Spectrum {
    let mut values = field.samples.clone();
    fft2(&mut values, false);
    Spectrum {
        values,
        kx: fft_wavenumbers(field.nx(), field.dx),
        ky: if field.is_line() {
            vec![0.0]
        } else {
            fft_wavenumbers(field.ny(), field.dy)
        },
    }
}

/// Inverse of [`spectrum`], back to samples.
pub fn inverse_spectrum(spec: &Spectrum) -> Array2<Complex64> {
    let mut values = spec.values.clone();
    fft2(&mut values, true);
    values
}

/// Transfer function of one plane-wave component over a distance `dz`.
pub fn propagator_value(kx: f64, ky: f64, k: f64, dz: f64) -> Complex64 {
    let kt2 = kx * kx + ky * ky;
    let k2 = k * k;
    if kt2 <= k2 {
        Complex64::from_polar(1.0, -dz * (k2 - kt2).sqrt())
    } else {
        Complex64::new((-dz.abs() * (kt2 - k2).sqrt()).exp(), 0.0)
    }
}

/// How the grid is extended before transforming.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Padding {
    /// Propagate on the periodic grid itself.
    None,
    /// Zero-pad every axis to the next power of two at least twice its
    /// length, then crop back.
    #[default]
    Auto,
}

/// Propagates by `dz` with zero padding against wraparound.
pub fn propagate(field: &ComplexField, dz: f64) -> ComplexField {
    propagate_with(field, dz, Padding::Auto)
}

pub fn propagate_with(field: &ComplexField, dz: f64, padding: Padding) -> ComplexField {
    let (ny, nx) = field.samples.dim();
    let (py, px) = match padding {
        Padding::None => (ny, nx),
        Padding::Auto => (
            if ny > 1 { (2 * ny).next_power_of_two() } else { 1 },
            (2 * nx).next_power_of_two(),
        ),
    };
    let mut work = Array2::from_elem((py, px), Complex64::new(0.0, 0.0));
    work.slice_mut(ndarray::s![..ny, ..nx]).assign(&field.samples);
    fft2(&mut work, false);

    let kx = fft_wavenumbers(px, field.dx);
    let ky = if py > 1 {
        fft_wavenumbers(py, field.dy)
    } else {
        vec![0.0]
    };
    let k = field.wave.wavenumber;
    for ((iy, ix), v) in work.indexed_iter_mut() {
        *v *= propagator_value(kx[ix], ky[iy], k, dz);
    }
    fft2(&mut work, true);
    let samples = work.slice(ndarray::s![..ny, ..nx]).to_owned();
    ComplexField {
        samples,
        plane_z: field.plane_z + dz,
        ..field.clone()
    }
}

/// Relative intensity `|p|^2` per sample.
pub fn intensity(field: &ComplexField) -> Array2<f64> {
    field.samples.mapv(|v| v.norm_sqr())
}

/// Keeps only the components with `kx² + ky² <= k²`.
pub fn filter_propagating(field: &ComplexField) -> ComplexField {
    let mut spec = spectrum(field);
    let k2 = field.wave.wavenumber.powi(2);
    for ((iy, ix), v) in spec.values.indexed_iter_mut() {
        if spec.kx[ix].powi(2) + spec.ky[iy].powi(2) > k2 {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    field.with_samples(inverse_spectrum(&spec))
}
