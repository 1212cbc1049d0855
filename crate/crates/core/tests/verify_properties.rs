use metascreen::profiles::{focusing_profile, ArrayLayout, FocalPoint};
use metascreen::verify::{ideal_boundary, predict_from_boundary, RenderGrid};
use metascreen::wave::WaveContext;
use metascreen::Complex64;

const MM: f64 = 1e-3;

fn grid() -> RenderGrid {
    RenderGrid {
        z_stop: 300.0 * MM,
        ..RenderGrid::default()
    }
}

#[test]
fn identical_cells_only_diffract() {
    let w = WaveContext::in_air(6000.0).unwrap();
    let layout = ArrayLayout::line(24, 14.3 * MM).unwrap();
    let t = vec![Complex64::from_polar(0.7, 0.4); 24];
    let r = vec![Complex64::from_polar(0.7, -1.0); 24];
    let rep = predict_from_boundary(&r, &t, &layout, &w, &grid(), None).unwrap();
    assert!(rep.diffraction_only, "gain {}", rep.focal_gain);
    let lobe = rep.steering.unwrap();
    assert!(lobe.angle.abs() < 0.05f64.to_radians() + 1e-12);
}

#[test]
fn doubling_amplitude_quadruples_intensity() {
    let w = WaveContext::in_air(6000.0).unwrap();
    let layout = ArrayLayout::line(16, 14.3 * MM).unwrap();
    let phi = focusing_profile(&layout, &FocalPoint::on_axis(0.12), w.wavenumber).unwrap();
    let b = ideal_boundary(&phi);
    let b2: Vec<Complex64> = b.iter().map(|v| v * 2.0).collect();
    let one = predict_from_boundary(&b, &b, &layout, &w, &grid(), None).unwrap();
    let two = predict_from_boundary(&b2, &b2, &layout, &w, &grid(), None).unwrap();
    for (a, c) in one.transmission.values.iter().zip(&two.transmission.values) {
        assert!((4.0 * a - c).abs() <= 1e-12 * c.abs().max(1e-300));
    }
}

#[test]
fn focusing_profile_concentrates_energy() {
    let w = WaveContext::in_air(6000.0).unwrap();
    let layout = ArrayLayout::line(24, 14.3 * MM).unwrap();
    let focal = FocalPoint::on_axis(0.16);
    let phi = focusing_profile(&layout, &focal, w.wavenumber).unwrap();
    let b = ideal_boundary(&phi);
    let rep = predict_from_boundary(&b, &b, &layout, &w, &grid(), Some(&focal)).unwrap();
    assert!(!rep.diffraction_only);
    assert!(rep.focus_error.unwrap() < w.wavelength / 2.0);
    assert!(rep.focus.unwrap().x.abs() < 3.0 * MM);
}

#[test]
fn reflection_map_ignores_transmission_boundary() {
    let w = WaveContext::in_air(6000.0).unwrap();
    let layout = ArrayLayout::line(12, 14.3 * MM).unwrap();
    let r: Vec<Complex64> = (0..12).map(|i| Complex64::from_polar(0.9, 0.3 * i as f64)).collect();
    let t1 = vec![Complex64::new(0.5, 0.0); 12];
    let t2: Vec<Complex64> = (0..12).map(|i| Complex64::from_polar(0.2, -0.7 * i as f64)).collect();
    let a = predict_from_boundary(&r, &t1, &layout, &w, &grid(), None).unwrap();
    let b = predict_from_boundary(&r, &t2, &layout, &w, &grid(), None).unwrap();
    assert_eq!(a.reflection, b.reflection);
}
