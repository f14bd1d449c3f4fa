use std::f64::consts::PI;

use deltascat::jost::*;
use deltascat::scattering::{plane_wave_coefficients, scattering_coeffs};
use deltascat::{PotentialSpec, RegularPart, UniformGrid, C64};
use proptest::prelude::*;

fn box_spec() -> PotentialSpec {
    PotentialSpec::free().with_regular(RegularPart::boxed(0.5, 0.0, 1.0))
}

#[test]
fn dk_kernel_examples() {
    assert_eq!(dk_kernel(C64::new(2.0, 0.3), 0.0), C64::new(0.0, 0.0));
    assert!((dk_kernel(C64::new(0.0, 0.0), 3.0) - 3.0).norm() < 1e-15);
    assert!(dk_kernel(C64::new(1.0, 0.0), PI).norm() < 1e-15);
}

#[test]
fn free_jost_functions_are_one() {
    let g = UniformGrid::span(-2.0, 2.0, 0.125).unwrap();
    let j = solve_both(&PotentialSpec::free(), &[-3.0, 0.5, 2.0], &g).unwrap();
    for ix in 0..g.len {
        for ik in 0..3 {
            assert!((j.m1_at(ix, ik).unwrap() - 1.0).norm() < 1e-14);
            assert!((j.m2_at(ix, ik).unwrap() - 1.0).norm() < 1e-14);
        }
    }
}

#[test]
fn single_delta_m1_matches_transfer_construction() {
    let spec = PotentialSpec::single_delta(-1.3, 0.0);
    let g = UniformGrid::span(-3.0, 3.0, 1.0 / 16.0).unwrap();
    let ks = [0.4, 1.0, 2.5];
    let j = solve_both(&spec, &ks, &g).unwrap();
    let s = scattering_coeffs(&spec, &ks).unwrap();
    for (ik, &k) in ks.iter().enumerate() {
        let (plus, _) = plane_wave_coefficients(&spec, k).unwrap();
        for ix in 0..g.len {
            let x = g.point(ix);
            let m1 = j.m1_at(ix, ik).unwrap();
            let m2 = j.m2_at(ix, ik).unwrap();
            if x > 0.0 {
                assert!((m1 - 1.0).norm() < 1e-13);
            } else {
                let want = plus.eval(x) * C64::from_polar(1.0, -k * x) / s.t[ik];
                assert!((m1 - want).norm() < 1e-10, "x={x} k={k}: {m1} vs {want}");
            }
            if x < 0.0 {
                assert!((m2 - 1.0).norm() < 1e-13);
            }
        }
    }
}

#[test]
fn wronskian_is_constant_for_mixed_potential() {
    let spec = PotentialSpec::single_delta(-0.8, 0.5).with_regular(RegularPart::boxed(0.5, 0.0, 1.0));
    let g = UniformGrid::span(-2.0, 2.0, 1.0 / 32.0).unwrap();
    let j = solve_both(&spec, &[0.7, 2.0], &g).unwrap();
    for ik in 0..2 {
        let w0 = j.wronskian(0, ik).unwrap();
        for ix in 0..g.len {
            assert!((j.wronskian(ix, ik).unwrap() - w0).norm() < 1e-7 * w0.norm());
        }
    }
}

#[test]
fn m1_tends_to_one_beyond_support() {
    let g = UniformGrid::span(-1.0, 3.0, 1.0 / 32.0).unwrap();
    let j = solve_m1(&box_spec(), &[0.3, 1.0, 4.0], &g).unwrap();
    for ik in 0..3 {
        assert!((j.m1_at(g.len - 1, ik).unwrap() - 1.0).norm() < 1e-12);
    }
}

#[test]
fn b1_of_free_potential_vanishes() {
    let g = UniformGrid::span(-1.0, 1.0, 1.0 / 16.0).unwrap();
    let j = solve_m1(&PotentialSpec::free(), &fft_k_grid(1024, PI / 8.0), &g).unwrap();
    let b = b1_from_m1(&j).unwrap();
    assert!(b.values.data.iter().all(|v| v.abs() < 1e-14));
    let r = verify_kernel_bounds(&PotentialSpec::free(), &b).unwrap();
    assert_eq!(r.points, 0);
    assert!(r.c_b1.is_none());
}

#[test]
fn b1_is_real_and_resynthesizes_m1() {
    let g = UniformGrid::span(-1.0, 1.5, 1.0 / 32.0).unwrap();
    let ks = fft_k_grid(8192, PI / 8.0);
    let j = solve_m1(&box_spec(), &ks, &g).unwrap();
    let b = b1_from_m1(&j).unwrap();
    assert!(b.imag_max < 1e-6, "imag {}", b.imag_max);
    for ix in (0..g.len).step_by(8) {
        for ik in (0..ks.len()).step_by(97) {
            let err = (b.resynthesize(ix, ks[ik]) - j.m1_at(ix, ik).unwrap()).norm();
            assert!(err < 1e-6, "x={} k={} err {err}", g.point(ix), ks[ik]);
        }
    }
}

#[test]
fn pure_delta_far_region_is_majorant_free() {
    let spec = PotentialSpec::from_deltas(&[(-1.0, -0.5), (0.8, 0.5)]);
    let g = UniformGrid::span(-2.0, 2.0, 1.0 / 16.0).unwrap();
    let ks: Vec<f64> = (-40..40).map(|j| (j as f64 + 0.5) * 0.1).collect();
    let j = solve_both(&spec, &ks, &g).unwrap();
    let r = verify_m_bounds(&spec, &j, 0.5).unwrap();
    assert_eq!(r.far_violations, 0);
    assert!(r.compact_m.is_finite() && r.compact_dx.is_finite() && r.compact_dk.is_finite());
    assert!(verify_m_bounds(&spec, &solve_both(&spec, &[0.1, 0.3, 1.0], &g).unwrap(), 0.5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn jost_wronskian_gives_transmission(c in 0.2f64..2.5, neg in any::<bool>(), yi in -16i32..16, k in 0.2f64..5.0) {
        let c = if neg { -c } else { c };
        let y = yi as f64 / 16.0;
        let spec = PotentialSpec::single_delta(c, y);
        let g = UniformGrid::span(-2.0, 2.0, 1.0 / 16.0).unwrap();
        let j = solve_both(&spec, &[k], &g).unwrap();
        let t = scattering_coeffs(&spec, &[k]).unwrap().t[0];
        // W[f1, f2] = -2ik / T
        let w = j.wronskian(g.len / 3, 0).unwrap();
        let want = C64::new(0.0, -2.0 * k) / t;
        prop_assert!((w - want).norm() < 1e-9 * want.norm());
    }
}
