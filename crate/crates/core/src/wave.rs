//! Medium constants, wave quantities and phase arithmetic.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Homogeneous lossless fluid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Medium {
    /// kg/m³
    pub density: f64,
    /// m/s
    pub sound_speed: f64,
}

impl Medium {
    pub const AIR: Medium = Medium {
        density: 1.22,
        sound_speed: 343.0,
    };

    pub fn new(density: f64, sound_speed: f64) -> Result<Self> {
        if !(density > 0.0 && density.is_finite()) {
            return Err(domain(format!("density must be positive, got {density}")));
        }
        if !(sound_speed > 0.0 && sound_speed.is_finite()) {
            return Err(domain(format!(
                "sound speed must be positive, got {sound_speed}"
            )));
        }
        Ok(Self {
            density,
            sound_speed,
        })
    }
}

impl Default for Medium {
    fn default() -> Self {
        Self::AIR
    }
}

/// Single-frequency wave quantities in a given medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveContext {
    pub frequency: f64,
    pub wavenumber: f64,
    pub wavelength: f64,
}

impl WaveContext {
    pub fn new(frequency: f64, medium: &Medium) -> Result<Self> {
        if !(frequency > 0.0 && frequency.is_finite()) {
            return Err(domain(format!(
                "frequency must be positive and finite, got {frequency}"
            )));
        }
        Ok(Self {
            frequency,
            wavenumber: TAU * frequency / medium.sound_speed,
            wavelength: medium.sound_speed / frequency,
        })
    }

    /// Same as [`WaveContext::new`] in air.
    pub fn in_air(frequency: f64) -> Result<Self> {
        Self::new(frequency, &Medium::AIR)
    }
}

/// Reduces an angle to `(-π, π]`.
pub fn wrap_phase(phi: f64) -> Result<f64> {
    if !phi.is_finite() {
        return Err(domain(format!("cannot wrap non-finite phase {phi}")));
    }
    Ok(wrap(phi))
}

/// Infallible wrap for values already known to be finite.
pub(crate) fn wrap(phi: f64) -> f64 {
    let r = PI - (PI - phi).rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// Shortest arc between two angles, in `[0, π]`.
pub fn phase_distance(a: f64, b: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(domain("phase distance of non-finite angle"));
    }
    Ok(arc(a, b))
}

pub(crate) fn arc(a: f64, b: f64) -> f64 {
    wrap(a - b).abs()
}

/// Removes 2π jumps between consecutive samples.
pub fn unwrap_phases(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let prev = phases[i - 1];
            let step = wrap(p - prev);
            offset += step - (p - prev);
        }
        out.push(p + offset);
    }
    out
}
