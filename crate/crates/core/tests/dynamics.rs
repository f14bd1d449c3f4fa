use std::sync::OnceLock;

use deltascat::dynamics::*;
use deltascat::spectral::{decompose, distorted_ft_adjoint, SpectralDecomposition};
use deltascat::wave_operators::{apply_wplus, apply_wplus_star};
use deltascat::{GridFunction, KQuadrature, PotentialSpec, UniformGrid, C64};
use proptest::prelude::*;

fn attractive() -> &'static SpectralDecomposition {
    static D: OnceLock<SpectralDecomposition> = OnceLock::new();
    D.get_or_init(|| {
        let g = UniformGrid::symmetric(16.0, 1.0 / 32.0).unwrap();
        decompose(&PotentialSpec::single_delta(-2.0, 0.0), &KQuadrature::gauss_panels(8.0, 0.25, 16), &g).unwrap()
    })
}

/// `F_+^* g` for a smooth profile away from `k = 0`.
fn continuum_datum(d: &SpectralDecomposition) -> GridFunction {
    let g: Vec<C64> = d
        .table
        .k
        .nodes
        .iter()
        .map(|&k| C64::from_polar((-4.0 * (k - 3.0).powi(2)).exp() + 0.5 * (-4.0 * (k + 2.5).powi(2)).exp(), -0.5 * k))
        .collect();
    distorted_ft_adjoint(&d.table, &g)
}

fn gaussian(g: UniformGrid, c: f64, w: f64) -> GridFunction {
    GridFunction::from_real(g, |x| (-(x - c).powi(2) / (2.0 * w * w)).exp())
}

#[test]
fn linear_group_law() {
    let d = attractive();
    let f = continuum_datum(d);
    let a = evolve_linear(d, &evolve_linear(d, &f, 0.2, false).unwrap(), 0.3, false).unwrap();
    let b = evolve_linear(d, &f, 0.5, false).unwrap();
    assert!(d.table.norm(&a.sub(&b).values) < 1e-6 * d.table.norm(&f.values));
}

#[test]
fn dynamics_intertwine_with_free_flow() {
    let d = attractive();
    let f = continuum_datum(d);
    let lhs = evolve_linear(d, &f, 0.3, false).unwrap();
    let rhs = apply_wplus(d, &evolve_free(d, &apply_wplus_star(d, &f).unwrap(), 0.3).unwrap()).unwrap();
    assert!(d.table.norm(&lhs.sub(&rhs).values) < 1e-5 * d.table.norm(&f.values));
}

#[test]
fn bound_component_rotates_at_kappa_squared() {
    let d = attractive();
    let psi = &d.bound[0].psi;
    let u = evolve_linear(d, psi, 0.7, true).unwrap();
    let want = psi.scale(C64::from_polar(1.0, 0.7));
    assert!(d.table.norm(&u.sub(&want).values) < 1e-6);
}

#[test]
fn free_sandwich_is_identity() {
    let g = UniformGrid::symmetric(16.0, 1.0 / 32.0).unwrap();
    let d = decompose(&PotentialSpec::free(), &KQuadrature::gauss_panels(8.0, 0.25, 16), &g).unwrap();
    let f = GridFunction::from_fn(g, |x| C64::from_polar((-x * x / 2.0).exp(), 2.0 * x));
    let r = resolvent_sandwich(&d, &f).unwrap();
    assert!((r.ratio - 1.0).abs() < 1e-8);
    assert!(r.agreement < 1e-8);
}

#[test]
fn weak_nls_bound_state_is_a_pure_phase() {
    let prop = BoxPropagator::new(&PotentialSpec::single_delta(-2.0, 0.0), 16.0, 1.0 / 16.0).unwrap();
    let u0 = prop.mode(0).scale(C64::new(1e-4, 0.0));
    let cfg = NlsConfig { sigma: 1.5, sign: NlsSign::Focusing, g: 1.0, dt: 0.01, t_final: 1.0, record_every: 1000 };
    let tr = nls_solve(&prop, &u0, &cfg).unwrap();
    let want = u0.scale(C64::from_polar(1.0, 1.0));
    let err = tr.states.last().unwrap().sub(&want).sup_norm() / u0.sup_norm();
    assert!(err < 1e-6, "{err}");
}

#[test]
fn free_soliton_translates() {
    let prop = BoxPropagator::new(&PotentialSpec::free(), 16.0, 1.0 / 16.0).unwrap();
    let (eta, v, x0, t) = (1.0, 1.0, -3.0, 3.0);
    let exact = |x: f64, t: f64| {
        C64::from_polar(eta / (eta * (x - x0 - 2.0 * v * t)).cosh(), v * x - (v * v - eta * eta) * t)
    };
    let u0 = GridFunction::from_fn(prop.grid, |x| exact(x, 0.0));
    // g = 2 gives amplitude eta
    let cfg = NlsConfig { sigma: 1.0, sign: NlsSign::Focusing, g: 2.0, dt: 0.002, t_final: t, record_every: 100_000 };
    let tr = nls_solve(&prop, &u0, &cfg).unwrap();
    let u = tr.states.last().unwrap();
    let err = (0..u.len()).map(|i| (u.values[i] - exact(prop.grid.point(i), t)).norm()).fold(0.0, f64::max);
    assert!(err < 1e-3, "{err}");
    assert!(tr.mass_drift_rate() < 1e-10);
}

#[test]
fn symmetric_datum_keeps_equal_well_masses() {
    let cfg = NlsConfig { sigma: 1.0, sign: NlsSign::Defocusing, g: 1.0, dt: 0.02, t_final: 2.0, record_every: 1000 };
    let r = double_well_demo(
        2.0,
        1.0,
        &cfg,
        InitialRecipe::Gaussian { center: 0.0, width: 0.8, amplitude: 1.0 },
        &BoxOptions::default(),
    )
    .unwrap();
    for (a, b) in r.trace.left_mass.iter().zip(&r.trace.right_mass) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn linear_beat_period() {
    let cfg = NlsConfig { sigma: 1.0, sign: NlsSign::Defocusing, g: 0.0, dt: 0.1, t_final: 60.0, record_every: 100_000 };
    let r = double_well_demo(2.0, 1.0, &cfg, InitialRecipe::BoundPair, &BoxOptions::default()).unwrap();
    let m = r.measured_period.unwrap();
    assert!((m - r.beat_period).abs() < 0.02 * r.beat_period);
}

#[test]
fn strang_is_second_order_without_deltas() {
    let prop = BoxPropagator::new(&PotentialSpec::free(), 16.0, 1.0 / 16.0).unwrap();
    let u0 = gaussian(prop.grid, 1.0, 0.7);
    let cfg = NlsConfig { sigma: 1.0, sign: NlsSign::Defocusing, g: 1.0, dt: 0.02, t_final: 1.0, record_every: usize::MAX };
    let c = dt_halving(&prop, &u0, &cfg).unwrap();
    assert!((c.ratio - 4.0).abs() < 0.5, "{}", c.ratio);
}

#[test]
fn config_validation() {
    let bad = NlsConfig { sigma: 0.0, sign: NlsSign::Focusing, g: 1.0, dt: 0.1, t_final: 1.0, record_every: 1 };
    assert!(bad.validate().is_err());
    assert!(NlsConfig { sigma: 1.0, dt: -1.0, ..bad }.validate().is_err());
    assert!(BoxPropagator::new(&PotentialSpec::single_delta(-1.0, 0.03), 8.0, 1.0 / 16.0).is_err());
}

#[test]
fn fit_recovers_power_law() {
    let ts = log_times(1.0, 100.0, 9);
    let ys: Vec<f64> = ts.iter().map(|t| 3.0 * t.powf(-0.5)).collect();
    let (s, b) = fit_line(&ts.iter().map(|t| t.ln()).collect::<Vec<_>>(), &ys.iter().map(|y| y.ln()).collect::<Vec<_>>());
    assert!((s + 0.5).abs() < 1e-12 && (b - 3f64.ln()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn defocusing_mass_is_conserved(c in 0.5f64..3.0, yi in -8i32..8, amp in 0.2f64..1.5, center in -2.0f64..2.0) {
        let prop = BoxPropagator::new(&PotentialSpec::single_delta(-c, yi as f64 / 16.0), 12.0, 1.0 / 16.0).unwrap();
        let u0 = gaussian(prop.grid, center, 0.8).scale(C64::new(amp, 0.0));
        let cfg = NlsConfig { sigma: 1.0, sign: NlsSign::Defocusing, g: 1.0, dt: 0.01, t_final: 1.0, record_every: 1000 };
        let tr = nls_solve(&prop, &u0, &cfg).unwrap();
        prop_assert!(tr.mass_drift_rate() < 1e-8);
    }
}
