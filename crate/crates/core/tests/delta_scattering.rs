use approx::assert_relative_eq;
use deltascat::scattering::*;
use deltascat::{PotentialSpec, RegularPart, C64};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn no_deltas_gives_identity() {
    let m = transfer_matrix_at(&PotentialSpec::free(), c(1.3, 0.0)).unwrap();
    assert_eq!(m, [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]);
}

#[test]
fn single_delta_matrix_matches_jump_solution() {
    let (cc, y, k) = (1.7, 0.4, c(0.9, 0.0));
    let m = transfer_matrix_at(&PotentialSpec::single_delta(cc, y), k).unwrap();
    let b = cc / (2.0 * c(0.0, 1.0) * k);
    let ph = (2.0 * c(0.0, 1.0) * k * y).exp();
    let want = [[1.0 + b, b / ph], [-b * ph, 1.0 - b]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((m[i][j] - want[i][j]).norm() < 1e-14);
        }
    }
}

#[test]
fn paper_single_delta_values() {
    let (t, r) = single_delta_closed_form(1.0, 1.0).unwrap();
    assert!((t - c(0.5, -0.5)).norm() < 1e-15);
    assert!((r - c(-0.5, -0.5)).norm() < 1e-15);
    let s = scattering_coeffs(&PotentialSpec::single_delta(2.0, 0.0), &[1.0]).unwrap();
    assert!((s.t[0] - t).norm() < 1e-15 && (s.r1[0] - r).norm() < 1e-15);
}

#[test]
fn double_delta_closed_form_properties() {
    let (t, r) = double_delta_closed_form(0.0, 1.0, 2.0).unwrap();
    assert!((t - 1.0).norm() < 1e-15 && r.norm() < 1e-15);
    for i in 1..200 {
        let k = 0.05 * i as f64;
        let (t, r) = double_delta_closed_form(1.0, 1.0, k).unwrap();
        assert_relative_eq!(t.norm_sqr() + r.norm_sqr(), 1.0, epsilon = 1e-12);
    }
}

#[test]
fn tdot_resonant_configuration_is_flagged() {
    assert!(tdot_asymptotics_check(1.0, 0.5).is_err());
    let r = tdot_asymptotics_check(1.0, 1.0).unwrap();
    assert!(r.bounded_large_k && r.finite_small_k);
}

#[test]
fn single_delta_bound_states() {
    let b = bound_states(&PotentialSpec::single_delta(-2.0, 0.3)).unwrap();
    assert_eq!(b.len(), 1);
    assert_relative_eq!(b[0].kappa, 1.0, epsilon = 1e-12);
    assert_relative_eq!(b[0].energy, -1.0, epsilon = 1e-12);
    assert!(bound_states(&PotentialSpec::single_delta(2.0, 0.0)).unwrap().is_empty());
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(a) * f(m) <= 0.0 {
            b = m
        } else {
            a = m
        }
    }
    0.5 * (a + b)
}

#[test]
fn double_well_bound_states_match_secular_equations() {
    let (cc, l) = (-2.0, 3.0);
    let even = bisect(|k| k * (1.0 + (k * l).tanh()) + cc, 1e-6, 5.0);
    let odd = bisect(|k| k * (1.0 + 1.0 / (k * l).tanh()) + cc, 1e-6, 5.0);
    let b = bound_states(&PotentialSpec::from_deltas(&[(cc, -l), (cc, l)])).unwrap();
    assert_eq!(b.len(), 2);
    assert_relative_eq!(b[0].kappa, even, epsilon = 1e-10);
    assert_relative_eq!(b[1].kappa, odd, epsilon = 1e-10);
    assert!((b[0].kappa - 1.0).abs() < 0.01 && (b[1].kappa - 1.0).abs() < 0.01);
}

#[test]
fn square_barrier_closed_form() {
    let (v0, a) = (0.5, 1.0);
    let spec = PotentialSpec::free().with_regular(RegularPart::boxed(v0, 0.0, a));
    let ks = [0.3, 1.0, 2.0, 5.0];
    let s = mixed_scattering(&spec, &ks).unwrap();
    for (i, &k) in ks.iter().enumerate() {
        let q = C64::new(k * k - v0, 0.0).sqrt();
        let den = (q * a).cos() - c(0.0, 1.0) * (k * k + q * q) / (2.0 * k * q) * (q * a).sin();
        let t = C64::from_polar(1.0, -k * a) / den;
        assert!((s.data.t[i] - t).norm() < 1e-8, "k={k}: {} vs {t}", s.data.t[i]);
    }
    assert!(s.data.unitarity_residual() < 1e-8);
}

#[test]
fn mixed_reduces_to_pure() {
    let spec = PotentialSpec::from_deltas(&[(-1.0, -0.5), (0.7, 0.8)]);
    let ks = [0.1, 1.0, 3.0];
    let a = mixed_scattering(&spec, &ks).unwrap();
    let b = scattering_coeffs(&spec, &ks).unwrap();
    for i in 0..ks.len() {
        assert!((a.data.t[i] - b.t[i]).norm() < 1e-12);
        assert!((a.data.r1[i] - b.r1[i]).norm() < 1e-12);
    }
}

fn config() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.1f64..3.0, any::<bool>(), -3.0f64..3.0), 1..5).prop_map(|v| {
        let mut t: Vec<(f64, f64)> = v.into_iter().map(|(c, s, y)| (if s { c } else { -c }, y)).collect();
        t.sort_by(|a, b| a.1.total_cmp(&b.1));
        t.dedup_by(|a, b| (a.1 - b.1).abs() < 1e-3);
        t
    })
}

proptest! {
    #[test]
    fn unitarity_and_reality(terms in config(), k in 1e-3f64..50.0) {
        let spec = PotentialSpec::from_deltas(&terms);
        let s = scattering_coeffs(&spec, &[k, -k]).unwrap();
        prop_assert!(s.unitarity_residual() < 1e-11);
        prop_assert!((s.t[1] - s.t[0].conj()).norm() < 1e-10 * s.t[0].norm().max(1.0));
        prop_assert!((s.r1[1] - s.r1[0].conj()).norm() < 1e-10);
        prop_assert!((s.r2[1] - s.r2[0].conj()).norm() < 1e-10);
    }

    #[test]
    fn transfer_determinant_is_one(terms in config(), re in 0.05f64..10.0, im in -1.0f64..1.0) {
        let m = transfer_matrix_at(&PotentialSpec::from_deltas(&terms), C64::new(re, im)).unwrap();
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        prop_assert!((det - 1.0).norm() < 1e-8 * m[0][0].norm().max(1.0).powi(2));
    }
}
