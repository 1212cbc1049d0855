//! Plane-wave transfer-matrix model of a rigid channel with stepwise
//! cross-section changes.
//!
//! Inside segment `i` the pressure is `A·exp(-jkz) + B·exp(+jkz)`. At every
//! interface pressure is continuous and the velocity term `(A - B)/S` is
//! matched, where `S` is the open-area ratio of the segment. Reflection is
//! referred to the inlet plane and transmission to the end of the last
//! segment.

use std::ops::Mul;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

const MM: f64 = 1e-3;

/// Smallest |T22| accepted when closing the ports.
pub const SINGULAR_CLOSURE_THRESHOLD: f64 = 1e-14;

/// Geometry of one metascreen cell, in metres.
///
/// From the inlet: a stretch of open channel (`h1`), a slab pair of
/// thickness `h2` leaving a slit of width `w`, a spacer `h3 = h - h1 - h2`,
/// then `n_plates` thin plates of thickness `t`, spaced `h4` apart, each
/// protruding `w2` from both walls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnitCellGeometry {
    pub h1: f64,
    pub h2: f64,
    pub w: f64,
    pub w2: f64,
    pub t: f64,
    pub h4: f64,
    /// Channel width `L`, also the cell pitch.
    pub channel_width: f64,
    /// Channel depth `D`; does not enter the 1-D model.
    pub depth: f64,
    pub n_plates: usize,
    /// Total height `h` of the region holding the slabs.
    pub upper_height: f64,
    pub outlet_length: f64,
    /// Length added to the effective length of every constricted segment.
    pub end_correction: f64,
}

impl Default for UnitCellGeometry {
    fn default() -> Self {
        Self {
            h1: 31.0 * MM,
            h2: 14.3 * MM,
            w: 8.0 * MM,
            w2: 1.0 * MM,
            t: 1.0 * MM,
            h4: 4.0 * MM,
            channel_width: 14.3 * MM,
            depth: 14.3 * MM,
            n_plates: 15,
            upper_height: 50.0 * MM,
            outlet_length: 4.0 * MM,
            end_correction: 0.0,
        }
    }
}

impl UnitCellGeometry {
    pub fn h3(&self) -> f64 {
        self.upper_height - self.h1 - self.h2
    }

    pub fn with_h1(mut self, h1: f64) -> Self {
        self.h1 = h1;
        self
    }

    pub fn with_w2(mut self, w2: f64) -> Self {
        self.w2 = w2;
        self
    }

    pub fn with_w(mut self, w: f64) -> Self {
        self.w = w;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("h1", self.h1),
            ("h2", self.h2),
            ("w", self.w),
            ("t", self.t),
            ("h4", self.h4),
            ("channel_width", self.channel_width),
            ("depth", self.depth),
            ("upper_height", self.upper_height),
        ];
        for (name, v) in lengths {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.w2 >= 0.0 && self.outlet_length >= 0.0 && self.end_correction >= 0.0) {
            return Err(domain("w2, outlet_length and end_correction must be non-negative"));
        }
        // small slack so grid values like 35.7 mm are not rejected by rounding
        let slack = 1e-12;
        if self.h1 + self.h2 > self.upper_height + slack {
            return Err(domain(format!(
                "h1 + h2 = {:.4} mm exceeds h = {:.4} mm",
                (self.h1 + self.h2) / MM,
                self.upper_height / MM
            )));
        }
        if self.w > self.channel_width + slack {
            return Err(domain(format!(
                "slit width w = {:.4} mm exceeds channel width {:.4} mm",
                self.w / MM,
                self.channel_width / MM
            )));
        }
        if 2.0 * self.w2 >= self.channel_width {
            return Err(domain(format!(
                "plates of {:.4} mm per side close the channel",
                self.w2 / MM
            )));
        }
        if self.n_plates == 0 {
            return Err(domain("at least one plate is required"));
        }
        Ok(())
    }

    /// Splits the cell into constant-area segments from inlet to outlet.
    pub fn discretize(&self) -> Result<SegmentChain> {
        self.validate()?;
        let l = self.channel_width;
        let corrected = |ratio: f64, len: f64| {
            if ratio < 1.0 {
                Segment::new(ratio, len + self.end_correction)
            } else {
                Segment::new(ratio, len)
            }
        };
        let slit = (self.w / l).min(1.0);
        let plate = (l - 2.0 * self.w2) / l;

        let mut segments = Vec::with_capacity(4 + 2 * self.n_plates);
        segments.push(Segment::new(1.0, self.h1)?);
        segments.push(corrected(slit, self.h2)?);
        segments.push(Segment::new(1.0, self.h3().max(0.0))?);
        for i in 0..self.n_plates {
            segments.push(corrected(plate, self.t)?);
            if i + 1 < self.n_plates {
                segments.push(Segment::new(1.0, self.h4)?);
            }
        }
        segments.push(Segment::new(1.0, self.outlet_length)?);
        SegmentChain::new(segments)
    }
}

/// Constant-area stretch of channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Open area over full channel area, in `(0, 1]`.
    pub area_ratio: f64,
    /// Effective length in metres.
    pub length: f64,
}

impl Segment {
    pub fn new(area_ratio: f64, length: f64) -> Result<Self> {
        if !(area_ratio > 0.0 && area_ratio <= 1.0) {
            return Err(domain(format!("area ratio {area_ratio} outside (0, 1]")));
        }
        if !(length >= 0.0 && length.is_finite()) {
            return Err(domain(format!("segment length {length} must be >= 0")));
        }
        Ok(Self { area_ratio, length })
    }
}

/// Ordered segments; the first and last act as the ports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentChain {
    segments: Vec<Segment>,
}

impl SegmentChain {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(domain("segment chain is empty"));
        }
        for s in &segments {
            Segment::new(s.area_ratio, s.length)?;
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn port_ratio_in(&self) -> f64 {
        self.segments[0].area_ratio
    }

    pub fn port_ratio_out(&self) -> f64 {
        self.segments[self.segments.len() - 1].area_ratio
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    pub fn reversed(&self) -> Self {
        let mut segments = self.segments.clone();
        segments.reverse();
        Self { segments }
    }
}

/// Complex reflection and transmission for unit incident pressure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringResult {
    pub r: Complex64,
    pub t: Complex64,
}

impl ScatteringResult {
    pub fn phase_r(&self) -> f64 {
        self.r.arg()
    }

    pub fn phase_t(&self) -> f64 {
        self.t.arg()
    }

    /// `|r|^2 + |t|^2`, which is one for a lossless cell with equal ports.
    pub fn power_sum(&self) -> f64 {
        self.r.norm_sqr() + self.t.norm_sqr()
    }
}

/// Maps `(p_t, p_r)` amplitudes upstream of an interface to downstream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix(pub [[Complex64; 2]; 2]);

impl TransferMatrix {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self([[one, zero], [zero, one]])
    }

    pub fn determinant(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[row][col]
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        TransferMatrix(out)
    }
}

/// Propagation over `h_e` in the upstream segment followed by the step
/// from area ratio `s_up` to `s_down`.
pub fn interface_matrix(s_up: f64, s_down: f64, h_e: f64, k0: f64) -> Result<TransferMatrix> {
    if !(s_up > 0.0 && s_down > 0.0) {
        return Err(domain(format!(
            "area ratios must be positive, got {s_up} and {s_down}"
        )));
    }
    if h_e.is_nan() || h_e < 0.0 {
        return Err(domain(format!("effective length {h_e} must be >= 0")));
    }
    Ok(interface_unchecked(s_up, s_down, h_e, k0))
}

fn interface_unchecked(s_up: f64, s_down: f64, h_e: f64, k0: f64) -> TransferMatrix {
    let sigma = s_down / s_up;
    let fwd = Complex64::from_polar(1.0, -k0 * h_e);
    let bwd = fwd.conj();
    let p = 0.5 * (1.0 + sigma);
    let m = 0.5 * (1.0 - sigma);
    TransferMatrix([[fwd * p, bwd * m], [fwd * m, bwd * p]])
}

/// Ordered product of all interface matrices; later interfaces multiply on
/// the left. The last segment is closed by a matched step into its own port.
pub fn total_matrix(chain: &SegmentChain, k0: f64) -> TransferMatrix {
    let segs = chain.segments();
    let mut total = TransferMatrix::identity();
    for (i, seg) in segs.iter().enumerate() {
        let s_down = segs.get(i + 1).map_or(chain.port_ratio_out(), |s| s.area_ratio);
        total = interface_unchecked(seg.area_ratio, s_down, seg.length, k0) * total;
    }
    total
}

/// Solves `(t, 0) = T·(1, r)` for the chain's reflection and transmission.
pub fn scattering(chain: &SegmentChain, k0: f64) -> Result<ScatteringResult> {
    if !(k0 > 0.0 && k0.is_finite()) {
        return Err(domain(format!("wavenumber must be positive, got {k0}")));
    }
    let m = total_matrix(chain, k0);
    let t22 = m.get(1, 1);
    if t22.norm() < SINGULAR_CLOSURE_THRESHOLD {
        return Err(Error::SingularClosure {
            magnitude: t22.norm(),
        });
    }
    let r = -m.get(1, 0) / t22;
    let t = m.get(0, 0) + m.get(0, 1) * r;
    Ok(ScatteringResult { r, t })
}

/// Independent solution of the same boundary-value problem.
///
/// Unknowns are the forward/backward amplitudes of every segment, with
/// unit incidence at the inlet and no backward wave at the outlet. The
/// continuity conditions at every interface are assembled into one dense
/// system and solved directly.
pub fn brute_force_oracle(chain: &SegmentChain, k0: f64) -> Result<ScatteringResult> {
    if !(k0 > 0.0 && k0.is_finite()) {
        return Err(domain(format!("wavenumber must be positive, got {k0}")));
    }
    let segs = chain.segments();
    let n = segs.len();
    let size = 2 * n;
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut a = DMatrix::from_element(size, size, zero);
    let mut b = nalgebra::DVector::from_element(size, zero);
    let fwd = |i: usize| 2 * i;
    let bwd = |i: usize| 2 * i + 1;

    a[(0, fwd(0))] = one;
    b[0] = one;
    let mut row = 1;
    for i in 0..n - 1 {
        let e_minus = Complex64::from_polar(1.0, -k0 * segs[i].length);
        let e_plus = e_minus.conj();
        let s_i = segs[i].area_ratio;
        let s_j = segs[i + 1].area_ratio;
        // pressure
        a[(row, fwd(i))] = e_minus;
        a[(row, bwd(i))] = e_plus;
        a[(row, fwd(i + 1))] = -one;
        a[(row, bwd(i + 1))] = -one;
        row += 1;
        // volume velocity
        a[(row, fwd(i))] = e_minus / s_i;
        a[(row, bwd(i))] = -e_plus / s_i;
        a[(row, fwd(i + 1))] = -one / s_j;
        a[(row, bwd(i + 1))] = one / s_j;
        row += 1;
    }
    a[(row, bwd(n - 1))] = one;

    let solution = a.clone().lu().solve(&b);
    let x = match solution {
        Some(x) if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) => x,
        _ => {
            let sv = a.singular_values();
            let max = sv.max();
            let min = sv.min();
            return Err(Error::SingularSystem {
                condition: if min > 0.0 { max / min } else { f64::INFINITY },
            });
        }
    };
    let r = x[bwd(0)];
    let t = x[fwd(n - 1)] * Complex64::from_polar(1.0, -k0 * segs[n - 1].length);
    Ok(ScatteringResult { r, t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::WaveContext;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn uniform_geometry_is_unobstructed() {
        let g = UnitCellGeometry {
            w: 14.3 * MM,
            w2: 0.0,
            ..Default::default()
        };
        let chain = g.discretize().unwrap();
        assert!(chain.segments().iter().all(|s| s.area_ratio == 1.0));
    }

    #[test]
    fn default_geometry_has_33_segments() {
        let chain = UnitCellGeometry::default().discretize().unwrap();
        assert_eq!(chain.len(), 1 + 1 + 1 + 15 + 14 + 1);
        let expected = 50.0 * MM + 15.0 * MM + 14.0 * 4.0 * MM + 4.0 * MM;
        assert!((chain.total_length() - expected).abs() < 1e-12);
    }

    #[test]
    fn plate_ratio_from_protrusion() {
        let chain = UnitCellGeometry::default()
            .with_w2(5.0 * MM)
            .discretize()
            .unwrap();
        assert!((chain.segments()[3].area_ratio - 4.3 / 14.3).abs() < 1e-12);
        assert!((4.3f64 / 14.3 - 0.3007).abs() < 1e-4);
    }

    #[test]
    fn end_correction_lengthens_constrictions_only() {
        let g = UnitCellGeometry {
            end_correction: 0.5 * MM,
            ..Default::default()
        };
        let chain = g.discretize().unwrap();
        assert!((chain.segments()[1].length - 14.8 * MM).abs() < 1e-12);
        assert!((chain.segments()[0].length - 31.0 * MM).abs() < 1e-12);
        assert!((chain.segments()[3].length - 1.5 * MM).abs() < 1e-12);
    }

    #[test]
    fn invalid_geometry_rejected() {
        let base = UnitCellGeometry::default();
        assert!(base.with_h1(36.0 * MM).discretize().is_err());
        assert!(base.with_h1(0.0).discretize().is_err());
        assert!(base.with_w(15.0 * MM).discretize().is_err());
        assert!(base.with_w2(7.15 * MM).discretize().is_err());
        assert!(base.with_h1(35.7 * MM).discretize().is_ok());
    }

    #[test]
    fn interface_examples() {
        let k0 = 100.0;
        let id = interface_matrix(0.4, 0.4, 0.0, k0).unwrap();
        assert_eq!(id, TransferMatrix::identity());

        let d = 0.013;
        let p = interface_matrix(1.0, 1.0, d, k0).unwrap();
        assert!(close(p.get(0, 0), Complex64::from_polar(1.0, -k0 * d), 1e-15));
        assert!(close(p.get(1, 1), Complex64::from_polar(1.0, k0 * d), 1e-15));
        assert_eq!(p.get(0, 1), c(0.0, 0.0));
        assert_eq!(p.get(1, 0), c(0.0, 0.0));

        // hand solution of the two continuity equations with sigma = 3
        let step = interface_matrix(1.0, 3.0, 0.0, k0).unwrap();
        assert_eq!(step.0, [[c(2.0, 0.0), c(-1.0, 0.0)], [c(-1.0, 0.0), c(2.0, 0.0)]]);

        assert!(interface_matrix(0.0, 1.0, 0.0, k0).is_err());
        assert!(interface_matrix(1.0, -0.5, 0.0, k0).is_err());
    }

    #[test]
    fn interface_determinant_is_downstream_over_upstream_ratio() {
        for &(su, sd, h) in &[(1.0, 0.3, 0.01), (0.2, 0.9, 0.0), (0.7, 0.7, 0.05)] {
            let m = interface_matrix(su, sd, h, 110.0).unwrap();
            assert!(close(m.determinant(), c(sd / su, 0.0), 1e-12));
        }
    }

    #[test]
    fn total_matrix_of_uniform_segments_is_propagation() {
        let k0 = WaveContext::in_air(6000.0).unwrap().wavenumber;
        let one = SegmentChain::new(vec![Segment::new(1.0, 0.02).unwrap()]).unwrap();
        let m = total_matrix(&one, k0);
        assert!(close(m.get(0, 0), Complex64::from_polar(1.0, -k0 * 0.02), 1e-14));
        assert!(close(m.get(1, 1), Complex64::from_polar(1.0, k0 * 0.02), 1e-14));

        let two = SegmentChain::new(vec![
            Segment::new(1.0, 0.02).unwrap(),
            Segment::new(1.0, 0.031).unwrap(),
        ])
        .unwrap();
        let m = total_matrix(&two, k0);
        assert!(close(m.get(0, 0), Complex64::from_polar(1.0, -k0 * 0.051), 1e-13));
        assert!(close(m.get(1, 1), Complex64::from_polar(1.0, k0 * 0.051), 1e-13));
        assert!(m.get(0, 1).norm() < 1e-15 && m.get(1, 0).norm() < 1e-15);
    }

    #[test]
    fn uniform_duct_does_not_scatter() {
        let k0 = WaveContext::in_air(6000.0).unwrap().wavenumber;
        let chain = SegmentChain::new(vec![Segment::new(1.0, 0.07).unwrap()]).unwrap();
        for res in [scattering(&chain, k0).unwrap(), brute_force_oracle(&chain, k0).unwrap()] {
            assert!(res.r.norm() < 1e-15);
            assert!(close(res.t, Complex64::from_polar(1.0, -k0 * 0.07), 1e-14));
        }
    }

    #[test]
    fn single_constriction_conserves_energy() {
        let k0 = WaveContext::in_air(6000.0).unwrap().wavenumber;
        let chain = SegmentChain::new(vec![
            Segment::new(1.0, 0.0).unwrap(),
            Segment::new(0.5, 0.01).unwrap(),
            Segment::new(1.0, 0.0).unwrap(),
        ])
        .unwrap();
        let res = brute_force_oracle(&chain, k0).unwrap();
        assert!((res.power_sum() - 1.0).abs() < 1e-10);
        assert!(res.r.norm() > 0.1);
        let tm = scattering(&chain, k0).unwrap();
        assert!(close(tm.r, res.r, 1e-12) && close(tm.t, res.t, 1e-12));
    }

    #[test]
    fn nearly_closed_slit_reflects() {
        let k0 = WaveContext::in_air(6000.0).unwrap().wavenumber;
        let g = UnitCellGeometry::default().with_w(0.1 * MM);
        let res = scattering(&g.discretize().unwrap(), k0).unwrap();
        assert!(res.r.norm() > 0.95, "|r| = {}", res.r.norm());
    }

    #[test]
    fn rejects_non_positive_wavenumber() {
        let chain = UnitCellGeometry::default().discretize().unwrap();
        assert!(scattering(&chain, 0.0).is_err());
        assert!(brute_force_oracle(&chain, -1.0).is_err());
    }
}
