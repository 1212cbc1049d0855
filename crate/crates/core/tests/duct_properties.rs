use metascreen::duct::{
    brute_force_oracle, interface_matrix, scattering, total_matrix, Segment, SegmentChain,
    UnitCellGeometry,
};
use metascreen::wave::WaveContext;
use metascreen::Complex64;
use proptest::prelude::*;

const MM: f64 = 1e-3;

fn chain_strategy(min: usize, max: usize) -> impl Strategy<Value = SegmentChain> {
    prop::collection::vec((0.05f64..=1.0, 0.5f64..=50.0), min..=max).prop_map(|v| {
        SegmentChain::new(
            v.into_iter()
                .map(|(s, l)| Segment::new(s, l * MM).unwrap())
                .collect(),
        )
        .unwrap()
    })
}

fn k0(f: f64) -> f64 {
    WaveContext::in_air(f).unwrap().wavenumber
}

/// Reflection and transmission by marching a reflection coefficient back
/// from the outlet through the chain's section impedances.
fn impedance_recursion(chain: &SegmentChain, k: f64) -> (Complex64, Complex64) {
    let segs = chain.segments();
    let n = segs.len();
    let one = Complex64::new(1.0, 0.0);
    // gamma_start[i]: backward/forward ratio at the start of segment i
    let mut gamma_start = vec![Complex64::new(0.0, 0.0); n];
    let mut gamma_end = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let end = if i + 1 == n {
            Complex64::new(0.0, 0.0)
        } else {
            let g = gamma_start[i + 1];
            let z = segs[i + 1].area_ratio * (one + g) / (one - g);
            (z - segs[i].area_ratio) / (z + segs[i].area_ratio)
        };
        gamma_end[i] = end;
        gamma_start[i] = end * Complex64::from_polar(1.0, -2.0 * k * segs[i].length);
    }
    // forward amplitudes from pressure continuity
    let mut forward = one;
    for i in 0..n - 1 {
        let p_end = forward * Complex64::from_polar(1.0, -k * segs[i].length) * (one + gamma_end[i]);
        forward = p_end / (one + gamma_start[i + 1]);
    }
    let t = forward * Complex64::from_polar(1.0, -k * segs[n - 1].length);
    (gamma_start[0], t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn oracle_agrees(chain in chain_strategy(2, 40), f in 4000.0f64..=8000.0) {
        let a = scattering(&chain, k0(f)).unwrap();
        let b = brute_force_oracle(&chain, k0(f)).unwrap();
        prop_assert!((a.r - b.r).norm() < 1e-10, "r {} vs {}", a.r, b.r);
        prop_assert!((a.t - b.t).norm() < 1e-10, "t {} vs {}", a.t, b.t);
    }

    #[test]
    fn impedance_recursion_agrees(chain in chain_strategy(1, 12), f in 4000.0f64..=8000.0) {
        let a = scattering(&chain, k0(f)).unwrap();
        let (r, t) = impedance_recursion(&chain, k0(f));
        prop_assert!((a.r - r).norm() < 1e-9);
        prop_assert!((a.t - t).norm() < 1e-9);
    }

    #[test]
    fn power_balance(chain in chain_strategy(2, 40), f in 4000.0f64..=8000.0) {
        let s = scattering(&chain, k0(f)).unwrap();
        let ratio = chain.port_ratio_in() / chain.port_ratio_out();
        let balance = s.r.norm_sqr() + ratio * s.t.norm_sqr();
        prop_assert!((balance - 1.0).abs() < 1e-9, "{balance}");
    }

    #[test]
    fn reciprocity(chain in chain_strategy(2, 40), f in 4000.0f64..=8000.0) {
        let fwd = scattering(&chain, k0(f)).unwrap();
        let rev = scattering(&chain.reversed(), k0(f)).unwrap();
        let expected = fwd.t * chain.port_ratio_in() / chain.port_ratio_out();
        prop_assert!((rev.t - expected).norm() < 1e-9, "{} vs {}", rev.t, expected);
    }

    #[test]
    fn matches_hand_multiplied_product(chain in chain_strategy(5, 5), f in 4000.0f64..=8000.0) {
        let k = k0(f);
        let segs = chain.segments();
        let mut m = [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                     [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];
        for i in 0..5 {
            let down = if i == 4 { segs[4].area_ratio } else { segs[i + 1].area_ratio };
            let t = interface_matrix(segs[i].area_ratio, down, segs[i].length, k).unwrap();
            let (a, b, c, d) = (t.get(0, 0), t.get(0, 1), t.get(1, 0), t.get(1, 1));
            m = [[a * m[0][0] + b * m[1][0], a * m[0][1] + b * m[1][1]],
                 [c * m[0][0] + d * m[1][0], c * m[0][1] + d * m[1][1]]];
        }
        let total = total_matrix(&chain, k);
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                prop_assert!((total.get(i, j) - v).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn continuous_in_length(chain in chain_strategy(2, 20), f in 4000.0f64..=8000.0, idx in 0usize..20) {
        let segs = chain.segments();
        let i = idx % segs.len();
        let mut moved = segs.to_vec();
        moved[i] = Segment::new(segs[i].area_ratio, segs[i].length + 1e-9).unwrap();
        let a = scattering(&chain, k0(f)).unwrap();
        let b = scattering(&SegmentChain::new(moved).unwrap(), k0(f)).unwrap();
        prop_assert!((a.r - b.r).norm() < 1e-5);
        prop_assert!((a.t - b.t).norm() < 1e-5);
    }

    #[test]
    fn single_step_closed_form(s1 in 0.05f64..=1.0, s2 in 0.05f64..=1.0,
                               l1 in 0.5f64..=50.0, l2 in 0.5f64..=50.0) {
        let k = k0(6000.0);
        let chain = SegmentChain::new(vec![
            Segment::new(s1, l1 * MM).unwrap(),
            Segment::new(s2, l2 * MM).unwrap(),
        ]).unwrap();
        let s = scattering(&chain, k).unwrap();
        let sigma = s2 / s1;
        let r = (sigma - 1.0) / (sigma + 1.0) * Complex64::from_polar(1.0, -2.0 * k * l1 * MM);
        let t = 2.0 * sigma / (1.0 + sigma) * Complex64::from_polar(1.0, -k * (l1 + l2) * MM);
        prop_assert!((s.r - r).norm() < 1e-12);
        prop_assert!((s.t - t).norm() < 1e-12);
    }
}

#[test]
fn narrow_slit_reflects_more_as_it_closes() {
    let k = k0(6000.0);
    let mags: Vec<f64> = (1..=10)
        .map(|i| {
            let g = UnitCellGeometry::default().with_w(0.1 * i as f64 * MM);
            scattering(&g.discretize().unwrap(), k).unwrap().r.norm()
        })
        .collect();
    assert!(mags[0] > 0.95, "{mags:?}");
    assert!(mags.windows(2).all(|p| p[1] <= p[0]), "{mags:?}");
}

#[test]
fn default_cell_conserves_power() {
    for f in [4000.0, 6000.0, 8000.0] {
        let s = scattering(&UnitCellGeometry::default().discretize().unwrap(), k0(f)).unwrap();
        assert!((s.power_sum() - 1.0).abs() < 1e-12);
    }
}
