//! Target phase profiles for line arrays and square panels.
//!
//! The array lies in the plane `z = 0`: along the x axis for line arrays,
//! in the x–y plane for panels. Profiles are produced unwrapped.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::wave::WaveContext;

const MM: f64 = 1e-3;

/// Cell centres, uniformly spaced and centred on the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayLayout {
    pub cell_pitch: f64,
    pub nx: usize,
    pub ny: usize,
    /// `(x, y)` of each cell, row-major with x varying fastest.
    pub positions: Vec<[f64; 2]>,
}

impl ArrayLayout {
    /// Line of `n` cells along x.
    pub fn line(n: usize, pitch: f64) -> Result<Self> {
        Self::panel(n, 1, pitch)
    }

    pub fn panel(nx: usize, ny: usize, pitch: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(domain("array layout needs at least one cell"));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(domain(format!("cell pitch must be positive, got {pitch}")));
        }
        let centre = |i: usize, n: usize| (i as f64 - (n as f64 - 1.0) / 2.0) * pitch;
        let positions = (0..ny)
            .flat_map(|iy| (0..nx).map(move |ix| [centre(ix, nx), centre(iy, ny)]))
            .collect();
        Ok(Self {
            cell_pitch: pitch,
            nx,
            ny,
            positions,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.positions.len()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.positions.iter().map(|p| p[0]).collect()
    }
}

/// Focal point: axial distance from the array plane and transverse offsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FocalPoint {
    pub z: f64,
    pub x: f64,
    #[serde(default)]
    pub y: f64,
}

impl FocalPoint {
    pub fn on_axis(z: f64) -> Self {
        Self { z, x: 0.0, y: 0.0 }
    }
}

/// Per-cell reflection and transmission phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseProfile {
    pub phi_r: Vec<f64>,
    pub phi_t: Vec<f64>,
}

impl PhaseProfile {
    pub fn new(phi_r: Vec<f64>, phi_t: Vec<f64>) -> Result<Self> {
        if phi_r.len() != phi_t.len() {
            return Err(domain("reflection and transmission profiles differ in length"));
        }
        if phi_r.iter().chain(&phi_t).any(|v| !v.is_finite()) {
            return Err(domain("profile contains non-finite phases"));
        }
        Ok(Self { phi_r, phi_t })
    }

    /// CSV with columns `index,x_mm,y_mm,phi_r_rad,phi_t_rad`.
    pub fn write_csv<W: Write>(&self, layout: &ArrayLayout, writer: W) -> Result<()> {
        if layout.n_cells() != self.phi_r.len() {
            return Err(domain("profile length does not match layout"));
        }
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["index", "x_mm", "y_mm", "phi_r_rad", "phi_t_rad"])?;
        for (i, p) in layout.positions.iter().enumerate() {
            out.write_record([
                i.to_string(),
                format!("{:.6}", p[0] / MM),
                format!("{:.6}", p[1] / MM),
                format!("{:.12}", self.phi_r[i]),
                format!("{:.12}", self.phi_t[i]),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn check_focus(focal: &FocalPoint) -> Result<()> {
    if !(focal.z.is_finite() && focal.x.is_finite() && focal.y.is_finite()) {
        return Err(domain("focal point must be finite"));
    }
    if focal.z == 0.0 {
        return Err(domain("focal point lies on the array plane"));
    }
    Ok(())
}

/// Transmission phase that converges a normally incident wave onto `focal`:
/// `k0 (|r_cell - r_f| - |r_f|)`.
pub fn focusing_profile(layout: &ArrayLayout, focal: &FocalPoint, k0: f64) -> Result<Vec<f64>> {
    check_focus(focal)?;
    let reference = focal.z.hypot(focal.x).hypot(focal.y);
    Ok(layout
        .positions
        .iter()
        .map(|p| {
            let d = focal.z.hypot(p[0] - focal.x).hypot(p[1] - focal.y);
            k0 * (d - reference)
        })
        .collect())
}

/// Reflection phase that makes the reflected wave appear to diverge from a
/// virtual source; the negation of [`focusing_profile`].
pub fn diffusion_profile(
    layout: &ArrayLayout,
    virtual_focus: &FocalPoint,
    k0: f64,
) -> Result<Vec<f64>> {
    Ok(focusing_profile(layout, virtual_focus, k0)?
        .into_iter()
        .map(|v| -v)
        .collect())
}

/// Linear phase `k0 x sin(theta)` steering the reflected wave.
pub fn steering_profile(layout: &ArrayLayout, theta_r: f64, k0: f64) -> Result<Vec<f64>> {
    if theta_r.is_nan() || theta_r.abs() >= FRAC_PI_2 {
        return Err(domain(format!("steering angle {theta_r} rad is not below 90°")));
    }
    let s = theta_r.sin();
    Ok(layout.positions.iter().map(|p| k0 * p[0] * s).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnellOutcome {
    /// Least-squares phase gradient in rad/m.
    pub gradient: f64,
    /// RMS residual of the linear fit, radians.
    pub fit_residual: f64,
    /// `sin(theta_i) + lambda0 * gradient / 2π`.
    pub sine: f64,
    /// `None` when `|sine| > 1` (evanescent).
    pub angle: Option<f64>,
}

impl SnellOutcome {
    pub fn is_evanescent(&self) -> bool {
        self.angle.is_none()
    }
}

/// Largest pitch that keeps a linear profile steering to `theta` free of
/// aliasing, `lambda / (2 |sin theta|)`.
pub fn alias_free_pitch(theta: f64, wave: &WaveContext) -> f64 {
    wave.wavelength / (2.0 * theta.sin().abs())
}

/// Predicts the outgoing angle of a phase-gradient array from its profile.
///
/// `phases` must be unwrapped (steps below π between neighbours); a larger
/// step means the gradient is under-sampled and is reported as aliasing.
pub fn snell_check(
    phases: &[f64],
    positions: &[f64],
    theta_i: f64,
    wave: &WaveContext,
) -> Result<SnellOutcome> {
    if phases.len() != positions.len() || phases.len() < 2 {
        return Err(domain("snell check needs at least two matching samples"));
    }
    for (i, w) in phases.windows(2).enumerate() {
        let step = w[1] - w[0];
        if step.abs() > std::f64::consts::PI {
            return Err(Error::Aliasing { index: i, step });
        }
    }
    let n = phases.len() as f64;
    let mx = positions.iter().sum::<f64>() / n;
    let my = phases.iter().sum::<f64>() / n;
    let sxx: f64 = positions.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(domain("positions are all equal"));
    }
    let sxy: f64 = positions
        .iter()
        .zip(phases)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let gradient = sxy / sxx;
    let fit_residual = (positions
        .iter()
        .zip(phases)
        .map(|(x, y)| (y - my - gradient * (x - mx)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let sine = theta_i.sin() + wave.wavelength * gradient / TAU;
    let angle = (sine.abs() <= 1.0).then(|| sine.asin());
    Ok(SnellOutcome {
        gradient,
        fit_residual,
        sine,
        angle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k6000() -> WaveContext {
        WaveContext::in_air(6000.0).unwrap()
    }

    #[test]
    fn layout_is_centred() {
        let l = ArrayLayout::line(4, 0.01).unwrap();
        assert_eq!(l.xs(), vec![-0.015, -0.005, 0.005, 0.015]);
        let p = ArrayLayout::panel(25, 25, 14.3 * MM).unwrap();
        assert_eq!(p.n_cells(), 625);
        assert_eq!(p.positions[312], [0.0, 0.0]);
        assert!(ArrayLayout::line(0, 0.01).is_err());
    }

    #[test]
    fn focusing_examples() {
        let k0 = k6000().wavenumber;
        let l = ArrayLayout {
            cell_pitch: 0.1,
            nx: 3,
            ny: 1,
            positions: vec![[-0.1, 0.0], [0.0, 0.0], [0.1, 0.0]],
        };
        let f = FocalPoint::on_axis(0.16);
        let phi = focusing_profile(&l, &f, k0).unwrap();
        assert_eq!(phi[1], 0.0);
        let expected = k0 * ((0.16f64 * 0.16 + 0.01).sqrt() - 0.16);
        assert!((phi[2] - expected).abs() < 1e-12);
        assert!((phi[2] - 3.152).abs() < 1e-3);
        assert_eq!(phi[0], phi[2]);

        let diff = diffusion_profile(&l, &f, k0).unwrap();
        assert!((diff[2] + 3.152).abs() < 1e-3);
        for (a, b) in phi.iter().zip(&diff) {
            assert_eq!(a + b, 0.0);
        }
        assert!(focusing_profile(&l, &FocalPoint::on_axis(0.0), k0).is_err());
    }

    #[test]
    fn focusing_profile_is_convex_in_x() {
        let k0 = k6000().wavenumber;
        let l = ArrayLayout::line(24, 14.3 * MM).unwrap();
        let phi = focusing_profile(&l, &FocalPoint::on_axis(0.16), k0).unwrap();
        // phase grows away from the axis, so the centre lags the edges
        for w in phi.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] > 0.0);
        }
    }

    #[test]
    fn steering_examples() {
        let w = k6000();
        let l = ArrayLayout {
            cell_pitch: w.wavelength,
            nx: 2,
            ny: 1,
            positions: vec![[0.0, 0.0], [w.wavelength, 0.0]],
        };
        let phi = steering_profile(&l, 45f64.to_radians(), w.wavenumber).unwrap();
        assert_eq!(phi[0], 0.0);
        assert!((phi[1] - TAU * 45f64.to_radians().sin()).abs() < 1e-12);
        assert!((phi[1] - 4.443).abs() < 1e-3);
        let flat = steering_profile(&l, 0.0, w.wavenumber).unwrap();
        assert!(flat.iter().all(|&v| v == 0.0));
        assert!(steering_profile(&l, FRAC_PI_2, w.wavenumber).is_err());
    }

    #[test]
    fn snell_examples() {
        let w = k6000();
        let xs: Vec<f64> = (0..24).map(|i| i as f64 * 14.3 * MM).collect();
        let zero = vec![0.0; 24];
        let out = snell_check(&zero, &xs, 0.0, &w).unwrap();
        assert_eq!(out.angle, Some(0.0));

        let l = ArrayLayout::line(24, 14.3 * MM).unwrap();
        let phi = steering_profile(&l, 45f64.to_radians(), w.wavenumber).unwrap();
        let out = snell_check(&phi, &l.xs(), 0.0, &w).unwrap();
        assert!((out.angle.unwrap().to_degrees() - 45.0).abs() < 0.1);

        // lambda * gradient / 2π = 1.2, sampled finely enough not to alias
        let g = 1.2 * TAU / w.wavelength;
        let fine: Vec<f64> = (0..24).map(|i| i as f64 * 2.0 * MM).collect();
        let ramp: Vec<f64> = fine.iter().map(|x| g * x).collect();
        let out = snell_check(&ramp, &fine, 0.0, &w).unwrap();
        assert!(out.is_evanescent());
        assert!((out.sine - 1.2).abs() < 1e-12);
    }

    #[test]
    fn snell_reports_aliasing() {
        let w = k6000();
        let xs = [0.0, 0.01, 0.02];
        let err = snell_check(&[0.0, 3.5, 7.0], &xs, 0.0, &w).unwrap_err();
        assert!(matches!(err, Error::Aliasing { index: 0, .. }));
    }

    #[test]
    fn profile_csv_columns() {
        let l = ArrayLayout::line(2, 14.3 * MM).unwrap();
        let p = PhaseProfile::new(vec![0.5, -0.5], vec![1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&l, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("index,x_mm,y_mm,phi_r_rad,phi_t_rad"));
        assert_eq!(lines.next(), Some("0,-7.150000,0.000000,0.500000000000,1.000000000000"));
    }
}
