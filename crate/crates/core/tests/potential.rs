use approx::assert_relative_eq;
use deltascat::potential::{gamma1, validate, weighted_l1_norm};
use deltascat::{DeltaTerm, PotentialSpec, RegularKind, RegularPart};
use proptest::prelude::*;

fn indicator() -> PotentialSpec {
    PotentialSpec::free().with_regular(RegularPart::boxed(1.0, 0.0, 1.0))
}

#[test]
fn weighted_norm_of_indicator_and_exponential() {
    assert_eq!(weighted_l1_norm(&PotentialSpec::free(), 1.6).unwrap(), 0.0);
    assert_relative_eq!(weighted_l1_norm(&indicator(), 0.0).unwrap(), 1.0, epsilon = 1e-10);
    let e = PotentialSpec::free().with_regular(RegularPart::new(RegularKind::Exponential { amplitude: 1.0, rate: 1.0 }));
    assert_relative_eq!(weighted_l1_norm(&e, 1.0).unwrap(), 4.0, epsilon = 1e-8);
}

#[test]
fn deltas_do_not_enter_the_weighted_norm() {
    let s = PotentialSpec::from_deltas(&[(-3.0, 0.5)]).with_regular(RegularPart::boxed(1.0, 0.0, 1.0));
    assert_relative_eq!(weighted_l1_norm(&s, 0.0).unwrap(), 1.0, epsilon = 1e-10);
}

#[test]
fn gamma1_examples() {
    assert_eq!(gamma1(&PotentialSpec::free(), 2.0).unwrap(), 0.0);
    assert_relative_eq!(gamma1(&indicator(), 0.0).unwrap(), 0.5, epsilon = 1e-10);
    assert_relative_eq!(gamma1(&PotentialSpec::single_delta(2.0, 3.0), 1.0).unwrap(), 4.0, epsilon = 1e-14);
}

#[test]
fn validation_lists_every_violation() {
    let bad = PotentialSpec::new(
        vec![DeltaTerm { c: 0.0, y: 1.0 }, DeltaTerm { c: 1.0, y: 0.0 }],
        RegularPart::default(),
    );
    let m = validate(&bad).unwrap_err().to_string();
    assert!(m.contains("zero strength") && m.contains("strictly increasing"), "{m}");
}

#[test]
fn validation_reports_support_radius() {
    let r = validate(&PotentialSpec::from_deltas(&[(1.0, -2.5), (-1.0, 1.0)])).unwrap();
    assert_eq!(r.delta_count, 2);
    assert_eq!(r.support_radius, 2.5);
}

proptest! {
    #[test]
    fn gamma1_is_nonincreasing(c in -3.0f64..3.0, y in -2.0f64..2.0, x in -4.0f64..4.0, h in 0.0f64..2.0) {
        prop_assume!(c != 0.0);
        let s = PotentialSpec::single_delta(c, y).with_regular(RegularPart::boxed(0.7, -1.0, 0.5));
        prop_assert!(gamma1(&s, x + h).unwrap() <= gamma1(&s, x).unwrap() + 1e-12);
    }

    #[test]
    fn weighted_norm_grows_with_gamma(h in 0.1f64..2.0, a in -3.0f64..0.0, w in 0.1f64..3.0, g in 0.0f64..2.0) {
        let s = PotentialSpec::free().with_regular(RegularPart::boxed(h, a, a + w));
        prop_assert!(weighted_l1_norm(&s, g + 0.5).unwrap() >= weighted_l1_norm(&s, g).unwrap());
    }
}
