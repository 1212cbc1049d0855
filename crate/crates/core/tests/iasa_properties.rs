use std::sync::OnceLock;

use metascreen::iasa::{
    correlation, design_two_sided_panel, run_iasa, HologramSpec, IasaParams, PhaseInit,
};
use metascreen::letters;
use metascreen::library::{build_table, linspace_step, CellResponseTable, SweepGrid};
use metascreen::spectrum::{intensity, propagate, ComplexField};
use metascreen::wave::{phase_distance, Medium, WaveContext};
use metascreen::{duct::UnitCellGeometry, Complex64};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MM: f64 = 1e-3;

fn wave() -> WaveContext {
    WaveContext::in_air(6000.0).unwrap()
}

fn params(dz: f64, init: PhaseInit) -> IasaParams {
    IasaParams {
        dz,
        pitch: 14.3 * MM,
        max_iterations: 200,
        tolerance: 1e-4,
        init,
    }
}

fn table() -> &'static CellResponseTable {
    static T: OnceLock<CellResponseTable> = OnceLock::new();
    T.get_or_init(|| {
        let mm = |v: Vec<f64>| v.into_iter().map(|x| x * MM).collect();
        let grid = SweepGrid {
            h1: mm(linspace_step(1.0, 35.0, 1.0)),
            w2: mm(linspace_step(1.0, 5.0, 0.5)),
            w: vec![8.0 * MM],
            frequencies: vec![6000.0],
        };
        build_table(UnitCellGeometry::default(), grid, Medium::AIR).unwrap()
    })
}

fn point_target() -> Array2<f64> {
    let mut t = Array2::zeros((25, 25));
    t[[12, 12]] = 1.0;
    t
}

#[test]
fn point_target_recovers_lens_phase() {
    let dz = 150.0 * MM;
    let w = wave();
    let res = run_iasa(&point_target(), &w, &params(dz, PhaseInit::Zero)).unwrap();
    let lens = Array2::from_shape_fn((25, 25), |(iy, ix)| {
        let x = (ix as f64 - 12.0) * 14.3 * MM;
        let y = (iy as f64 - 12.0) * 14.3 * MM;
        w.wavenumber * ((dz * dz + x * x + y * y).sqrt() - dz)
    });
    let inner = |(iy, ix): (usize, usize)| (1..24).contains(&iy) && (1..24).contains(&ix);
    // remove the constant offset with a circular mean of the differences
    let (s, c) = res
        .phase_map
        .indexed_iter()
        .filter(|(p, _)| inner(*p))
        .fold((0.0, 0.0), |(s, c), (p, v)| {
            let d = v - lens[p];
            (s + d.sin(), c + d.cos())
        });
    let offset = s.atan2(c);
    let worst = res
        .phase_map
        .indexed_iter()
        .filter(|(p, _)| inner(*p))
        .map(|(p, v)| phase_distance(*v - offset, lens[p]).unwrap())
        .fold(0.0, f64::max);
    assert!(worst < 0.3, "worst deviation {worst}");
}

#[test]
fn uniform_target_is_a_quick_smoke_test() {
    let target = Array2::from_elem((25, 25), 1.0);
    // short hop: the aperture edge has not yet diffracted into the image
    let res = run_iasa(&target, &wave(), &params(20.0 * MM, PhaseInit::Zero)).unwrap();
    assert!(res.correlation_history[..2].iter().any(|&c| c > 0.95), "{:?}", res.correlation_history);
    let spread = res.phase_map.iter().fold(0.0f64, |m, &p| m.max(p.abs()));
    assert!(spread < 1.0, "phase spread {spread}");
}

#[test]
fn all_zero_target_is_rejected() {
    let target = Array2::zeros((25, 25));
    assert!(run_iasa(&target, &wave(), &params(0.1, PhaseInit::Zero)).is_err());
}

#[test]
fn seeded_runs_are_bitwise_identical() {
    let target = letters::letter('C').unwrap();
    let p = params(120.0 * MM, PhaseInit::Random { seed: 42 });
    let a = run_iasa(&target, &wave(), &p).unwrap();
    let b = run_iasa(&target, &wave(), &p).unwrap();
    assert!(a.phase_map.iter().zip(&b.phase_map).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_eq!(a.correlation_history, b.correlation_history);
    let other = run_iasa(&target, &wave(), &params(120.0 * MM, PhaseInit::Random { seed: 43 })).unwrap();
    assert_ne!(a.phase_map, other.phase_map);
}

#[test]
fn final_field_comes_from_a_unit_amplitude_hologram() {
    let target = letters::letter('L').unwrap();
    let dz = 150.0 * MM;
    let res = run_iasa(&target, &wave(), &params(dz, PhaseInit::Zero)).unwrap();
    let holo = res.phase_map.mapv(|p| Complex64::from_polar(1.0, p));
    assert!(holo.iter().all(|v| (v.norm() - 1.0).abs() < 1e-15));
    let plane = ComplexField::new(holo, 14.3 * MM, 14.3 * MM, 0.0, wave()).unwrap();
    let field = propagate(&plane, dz);
    assert_eq!(field.samples(), res.final_field.samples());
    let achieved = correlation(&intensity(&field), &target.mapv(|a| a * a)).unwrap();
    assert!((achieved - res.final_correlation()).abs() < 1e-12);
    assert!(res.correlation_history.len() <= 200);
    assert!(res.correlation_history.iter().all(|c| (-1.0..=1.0).contains(c)));
}

#[test]
fn independent_images_are_uncorrelated() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = Array2::from_shape_fn((25, 25), |_| rng.random::<f64>());
    let b = Array2::from_shape_fn((25, 25), |_| rng.random::<f64>());
    assert!(correlation(&a, &b).unwrap().abs() < 0.3);
}

#[test]
fn sides_are_independent_at_the_phase_level() {
    let base = HologramSpec::default();
    let other = HologramSpec {
        target_t: point_target(),
        ..base.clone()
    };
    let a = design_two_sided_panel(&base, table()).unwrap();
    let b = design_two_sided_panel(&other, table()).unwrap();
    assert_eq!(a.iasa_r.phase_map, b.iasa_r.phase_map);
    assert_ne!(a.iasa_t.phase_map, b.iasa_t.phase_map);
}

#[test]
fn swapping_targets_swaps_phase_maps() {
    let base = HologramSpec::default();
    let swapped = HologramSpec {
        target_r: base.target_t.clone(),
        z_r: -base.z_t,
        target_t: base.target_r.clone(),
        z_t: -base.z_r,
        ..base.clone()
    };
    let a = design_two_sided_panel(&base, table()).unwrap();
    let b = design_two_sided_panel(&swapped, table()).unwrap();
    assert_eq!(a.iasa_r.phase_map, b.iasa_t.phase_map);
    assert_eq!(a.iasa_t.phase_map, b.iasa_r.phase_map);
}

#[test]
fn point_targets_give_radial_maps() {
    let spec = HologramSpec {
        target_r: point_target(),
        target_t: point_target(),
        ..HologramSpec::default()
    };
    let d = design_two_sided_panel(&spec, table()).unwrap();
    for map in [&d.iasa_r.phase_map, &d.iasa_t.phase_map] {
        for ((iy, ix), v) in map.indexed_iter() {
            for (y, x) in [(ix, iy), (24 - iy, ix), (iy, 24 - ix)] {
                assert!(phase_distance(*v, map[[y, x]]).unwrap() < 1e-6);
            }
        }
    }
    // the geometry follows the phase, so it shares the symmetry
    for map in [&d.h1_map, &d.w2_map] {
        for ((iy, ix), v) in map.indexed_iter() {
            assert_eq!(*v, map[[ix, iy]]);
            assert_eq!(*v, map[[24 - iy, 24 - ix]]);
        }
    }
}

#[test]
fn quantization_stats_are_recomputable() {
    let d = design_two_sided_panel(&HologramSpec::default(), table()).unwrap();
    let again = d.recompute_stats();
    for (a, b) in [
        (d.stats.mean_error_r, again.mean_error_r),
        (d.stats.max_error_r, again.max_error_r),
        (d.stats.mean_error_t, again.mean_error_t),
        (d.stats.max_error_t, again.max_error_t),
    ] {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(d.selections.len(), 625);
    assert!(d.stats.mean_error_r < 0.2, "{:?}", d.stats);
}
