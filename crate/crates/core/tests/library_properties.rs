use std::f64::consts::PI;
use std::sync::OnceLock;

use metascreen::duct::{scattering, UnitCellGeometry};
use metascreen::library::{
    build_table, linspace_step, select_cell, CellResponseTable, SweepGrid, SPLIT_TOLERANCE,
};
use metascreen::wave::{phase_distance, Medium, WaveContext};
use proptest::prelude::*;

const MM: f64 = 1e-3;

fn table() -> &'static CellResponseTable {
    static T: OnceLock<CellResponseTable> = OnceLock::new();
    T.get_or_init(|| {
        let mm = |v: Vec<f64>| v.into_iter().map(|x| x * MM).collect();
        let grid = SweepGrid {
            h1: mm(linspace_step(1.0, 35.0, 2.0)),
            w2: mm(linspace_step(1.0, 5.0, 0.5)),
            w: mm(vec![2.0, 4.0, 8.0, 12.0]),
            frequencies: vec![6000.0],
        };
        build_table(UnitCellGeometry::default(), grid, Medium::AIR).unwrap()
    })
}

/// Linear scan in (h1, w2, w) order keeping the first strict minimum.
fn brute_force(target_r: f64, target_t: f64, split: Option<f64>) -> Option<([usize; 3], f64)> {
    let t = table();
    let g = t.grid();
    let mut best: Option<([usize; 3], f64)> = None;
    for h in 0..g.h1.len() {
        for k in 0..g.w2.len() {
            for w in 0..g.w.len() {
                let e = t.entry(0, w, k, h).unwrap();
                if let Some(s) = split {
                    if (e.t.norm_sqr() - s).abs() > SPLIT_TOLERANCE {
                        continue;
                    }
                }
                let cost = phase_distance(target_r, e.r.arg()).unwrap()
                    + phase_distance(target_t, e.t.arg()).unwrap();
                if best.is_none_or(|(_, c)| cost < c) {
                    best = Some(([h, k, w], cost));
                }
            }
        }
    }
    best
}

proptest! {
    #[test]
    fn selection_is_exact_arg_min(r in -PI..PI, t in -PI..PI, split in prop::option::of(0.0f64..1.0)) {
        let expected = brute_force(r, t, split);
        match select_cell(table(), 6000.0, r, t, split) {
            Ok(s) => {
                let (idx, cost) = expected.unwrap();
                prop_assert_eq!(s.grid_index, idx);
                prop_assert!((s.phase_error_r + s.phase_error_t - cost).abs() < 1e-12);
                if let Some(split) = split {
                    prop_assert!((s.achieved_t.norm_sqr() - split).abs() <= SPLIT_TOLERANCE);
                }
            }
            Err(_) => prop_assert!(expected.is_none()),
        }
    }

    #[test]
    fn half_step_offset_is_bounded(h in 0usize..17, k in 0usize..9, w in 0usize..4) {
        let t = table();
        let e = t.entry(0, w, k, h).unwrap();
        // largest reflection-phase step to a neighbour along h1
        let step = [h.checked_sub(1), Some(h + 1)]
            .into_iter()
            .flatten()
            .filter(|&n| n < t.grid().h1.len())
            .map(|n| phase_distance(e.r.arg(), t.entry(0, w, k, n).unwrap().r.arg()).unwrap())
            .fold(0.0, f64::max);
        let s = select_cell(t, 6000.0, e.r.arg() + step / 2.0, e.t.arg(), None).unwrap();
        prop_assert!(s.phase_error_r <= step / 2.0 + 1e-12);
    }
}

#[test]
fn existing_entries_round_trip() {
    let t = table();
    let g = t.grid();
    for h in (0..g.h1.len()).step_by(3) {
        for k in (0..g.w2.len()).step_by(4) {
            let e = t.entry(0, 2, k, h).unwrap();
            let s = select_cell(t, 6000.0, e.r.arg(), e.t.arg(), None).unwrap();
            assert!(s.phase_error_r + s.phase_error_t < 1e-12);
        }
    }
}

#[test]
fn entries_match_direct_solves_and_conserve_power() {
    let t = table();
    let g = t.grid();
    let k0 = WaveContext::in_air(6000.0).unwrap().wavenumber;
    for (h, k, w) in [(0, 0, 0), (5, 3, 2), (16, 8, 3)] {
        let direct = scattering(&t.geometry(h, k, w).discretize().unwrap(), k0).unwrap();
        assert_eq!(*t.entry(0, w, k, h).unwrap(), direct);
    }
    for h in 0..g.h1.len() {
        for k in 0..g.w2.len() {
            for w in 0..g.w.len() {
                assert!((t.entry(0, w, k, h).unwrap().power_sum() - 1.0).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn transmission_grows_with_slit_width() {
    let t = table();
    let mags: Vec<f64> = t.sweep_w(0, 15, 0).iter().map(|s| s.t.norm()).collect();
    assert!(mags.windows(2).all(|p| p[1] >= p[0]), "{mags:?}");
}
