use metascreen::profiles::{
    alias_free_pitch, diffusion_profile, focusing_profile, snell_check, steering_profile,
    ArrayLayout, FocalPoint,
};
use metascreen::wave::WaveContext;
use metascreen::Error;
use proptest::prelude::*;

const MM: f64 = 1e-3;

proptest! {
    #[test]
    fn snell_round_trip(deg in -60.0f64..60.0, n in 2usize..40, pitch in 2.0f64..14.3, f in 4000.0f64..8000.0) {
        let w = WaveContext::in_air(f).unwrap();
        let theta = deg.to_radians();
        let layout = ArrayLayout::line(n, pitch * MM).unwrap();
        prop_assume!(layout.cell_pitch < alias_free_pitch(theta, &w));
        let phases = steering_profile(&layout, theta, w.wavenumber).unwrap();
        let out = snell_check(&phases, &layout.xs(), 0.0, &w).unwrap();
        prop_assert!((out.angle.unwrap() - theta).abs() < 1e-9);
        prop_assert!(out.fit_residual < 1e-9);
    }

    #[test]
    fn diffusion_is_negated_focusing(n in 1usize..40, z in 20.0f64..400.0, x in -100.0f64..100.0) {
        let w = WaveContext::in_air(6000.0).unwrap();
        let layout = ArrayLayout::line(n, 14.3 * MM).unwrap();
        let focal = FocalPoint { z: z * MM, x: x * MM, y: 0.0 };
        let a = focusing_profile(&layout, &focal, w.wavenumber).unwrap();
        let b = diffusion_profile(&layout, &focal, w.wavenumber).unwrap();
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p + q).abs() <= 1e-15);
        }
    }

    #[test]
    fn on_axis_focus_is_even(n in 1usize..40, z in 20.0f64..400.0) {
        let w = WaveContext::in_air(6000.0).unwrap();
        let layout = ArrayLayout::line(n, 14.3 * MM).unwrap();
        let phi = focusing_profile(&layout, &FocalPoint::on_axis(z * MM), w.wavenumber).unwrap();
        for i in 0..n {
            prop_assert!((phi[i] - phi[n - 1 - i]).abs() < 1e-12);
        }
    }
}

#[test]
fn focusing_phase_grows_towards_the_edges() {
    let w = WaveContext::in_air(6000.0).unwrap();
    let layout = ArrayLayout::line(24, 14.3 * MM).unwrap();
    let phi = focusing_profile(&layout, &FocalPoint::on_axis(0.16), w.wavenumber).unwrap();
    for p in phi.windows(3) {
        assert!(p[0] - 2.0 * p[1] + p[2] > 0.0);
    }
}

#[test]
fn coarse_pitch_aliases() {
    let w = WaveContext::in_air(6000.0).unwrap();
    let layout = ArrayLayout::line(10, 40.0 * MM).unwrap();
    let phases = steering_profile(&layout, 60f64.to_radians(), w.wavenumber).unwrap();
    assert!(matches!(
        snell_check(&phases, &layout.xs(), 0.0, &w),
        Err(Error::Aliasing { .. })
    ));
}
