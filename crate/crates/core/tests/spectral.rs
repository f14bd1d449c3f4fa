use std::f64::consts::PI;

use deltascat::scattering::scattering_coeffs;
use deltascat::spectral::*;
use deltascat::{GridFunction, KQuadrature, PotentialSpec, UniformGrid, C64};
use proptest::prelude::*;
use std::sync::OnceLock;

fn setup(spec: &PotentialSpec) -> SpectralDecomposition {
    let g = UniformGrid::symmetric(16.0, 1.0 / 32.0).unwrap();
    decompose(spec, &KQuadrature::gauss_panels(8.0, 0.25, 16), &g).unwrap()
}

fn attractive() -> &'static SpectralDecomposition {
    static D: OnceLock<SpectralDecomposition> = OnceLock::new();
    D.get_or_init(|| setup(&PotentialSpec::single_delta(-2.0, 0.0)))
}

fn packet(g: UniformGrid, x0: f64, k0: f64) -> GridFunction {
    GridFunction::from_fn(g, |x| C64::from_polar((-(x - x0).powi(2) / 2.0).exp(), k0 * x))
}

#[test]
fn free_waves_are_plane_waves() {
    let d = setup(&PotentialSpec::free());
    let t = &d.table;
    for ik in (0..t.k.len()).step_by(37) {
        for ix in (0..t.x_grid.len).step_by(41) {
            let (k, x) = (t.k.nodes[ik], t.x_grid.point(ix));
            let want = C64::from_polar(1.0, k * x) / (2.0 * PI).sqrt();
            assert!((psi_plus_at(t, ix, ik) - want).norm() < 1e-13);
        }
    }
    assert!(d.bound.is_empty());
}

#[test]
fn transmitted_side_and_negative_branch() {
    let spec = PotentialSpec::single_delta(1.5, 0.0);
    let k = 1.3;
    let t = scattering_coeffs(&spec, &[k]).unwrap().t[0];
    for x in [0.5, 2.0, 7.0] {
        let want = t * C64::from_polar(1.0, k * x) / (2.0 * PI).sqrt();
        assert!((psi_plus(&spec, x, k).unwrap() - want).norm() < 1e-14);
    }
    // k < 0 uses e_-(x, |k|): transmitted to the left as T e^{-i|k|x}
    let want = t * C64::from_polar(1.0, k * 3.0) / (2.0 * PI).sqrt();
    assert!((psi_plus(&spec, -3.0, -k).unwrap() - want).norm() < 1e-14);
}

#[test]
fn distorted_waves_satisfy_jump_and_equation() {
    let spec = PotentialSpec::from_deltas(&[(-1.0, -0.5), (2.0, 0.75)]);
    let k = 2.1;
    let h = 1e-3;
    for d in &spec.deltas {
        let u = psi_plus(&spec, d.y, k).unwrap();
        let jump = (psi_plus(&spec, d.y + h, k).unwrap() - psi_plus(&spec, d.y + 2.0 * h, k).unwrap()) / -h
            - (psi_plus(&spec, d.y - h, k).unwrap() - psi_plus(&spec, d.y - 2.0 * h, k).unwrap()) / h;
        assert!((jump - d.c * u).norm() < 1e-2 * u.norm().max(1.0), "jump {jump} vs {}", d.c * u);
    }
    for x in [-2.0, 0.1, 1.9] {
        let f = |x: f64| psi_plus(&spec, x, k).unwrap();
        let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        assert!((d2 + k * k * f(x)).norm() < 1e-4);
    }
}

#[test]
fn lippmann_schwinger_residual() {
    // e_+ = e^{ikx} + sum_j c_j G(x - y_j) e_+(y_j), G(x) = e^{ik|x|} / (2ik)
    let spec = PotentialSpec::from_deltas(&[(-1.2, -0.4), (0.9, 0.6)]);
    let k = 1.7;
    let e = |x: f64| psi_plus(&spec, x, k).unwrap() * (2.0 * PI).sqrt();
    for x in [-3.0, -0.4, 0.0, 0.6, 2.5] {
        let mut lhs = C64::from_polar(1.0, k * x);
        for d in &spec.deltas {
            let g = C64::from_polar(1.0, k * (x - d.y).abs()) / C64::new(0.0, 2.0 * k);
            lhs += d.c * g * e(d.y);
        }
        assert!((lhs - e(x)).norm() < 1e-12, "x={x}");
    }
}

#[test]
fn bound_state_is_orthonormal_and_annihilated() {
    let d = attractive();
    let t = &d.table;
    assert_eq!(d.bound.len(), 1);
    let psi = &d.bound[0].psi;
    assert!((t.norm(&psi.values) - 1.0).abs() < 1e-8);
    let ft = distorted_ft(t, psi).unwrap();
    assert!(t.k_norm(&ft) < 1e-5, "{}", t.k_norm(&ft));
    let p = pc_project(d, psi).unwrap();
    assert!(t.norm(&p.value.values) < 1e-5);
}

#[test]
fn projection_is_idempotent_and_parseval_holds() {
    let d = attractive();
    let t = &d.table;
    // smooth data is not band-limited for F_+, so build f from a k profile
    // that also vanishes near k = 0, where Psi_+ has a kink in k
    let g: Vec<C64> = t.k.nodes.iter().map(|&k| C64::from_polar((-4.0 * (k - 3.0).powi(2)).exp(), 0.3 * k)).collect();
    let f = distorted_ft_adjoint(t, &g).add(&d.bound[0].psi.scale(C64::new(0.3, 0.0)));
    let p = pc_project(d, &f).unwrap().value;
    let pp = pc_project(d, &p).unwrap().value;
    assert!(t.norm(&pp.sub(&p).values) < 1e-6 * t.norm(&f.values));
    let fp = distorted_ft(t, &p).unwrap();
    assert!((t.k_norm(&fp) - t.norm(&p.values)).abs() < 1e-6);
}

#[test]
fn free_projection_is_identity() {
    let d = setup(&PotentialSpec::free());
    let f = packet(d.table.x_grid, -1.0, 2.0);
    let p = pc_project(&d, &f).unwrap().value;
    assert!(d.table.norm(&p.sub(&f).values) < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn adjoint_identity(x0 in -3.0f64..3.0, k0 in -4.0f64..4.0, seed in 0u64..1000) {
        let d = attractive();
        let t = &d.table;
        let f = packet(t.x_grid, x0, k0);
        let g: Vec<C64> = t.k.nodes.iter().map(|&k| {
            let s = seed as f64 * 0.01;
            C64::from_polar((-(k - s).powi(2)).exp(), s * k)
        }).collect();
        let lhs = t.k_inner(&g, &distorted_ft(t, &f).unwrap());
        let rhs = t.inner(&distorted_ft_adjoint(t, &g).values, &f.values);
        prop_assert!((lhs - rhs).norm() < 1e-10 * lhs.norm().max(1e-3));
    }
}
