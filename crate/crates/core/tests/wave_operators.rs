use std::f64::consts::PI;
use std::sync::OnceLock;

use deltascat::grid::Array2;
use deltascat::jost::{b1_from_m1_on, fft_k_grid, solve_m1};
use deltascat::spectral::{decompose, SpectralDecomposition};
use deltascat::wave_operators::*;
use deltascat::{GridFunction, KQuadrature, PotentialSpec, RegularPart, UniformGrid, C64};
use proptest::prelude::*;

// the band-limited family is spread over |x| <~ 40
fn setup(spec: &PotentialSpec) -> SpectralDecomposition {
    let g = UniformGrid::symmetric(64.0, 1.0 / 32.0).unwrap();
    decompose(spec, &KQuadrature::gauss_panels(8.0, 0.25, 16), &g).unwrap()
}

fn attractive() -> &'static SpectralDecomposition {
    static D: OnceLock<SpectralDecomposition> = OnceLock::new();
    D.get_or_init(|| setup(&PotentialSpec::from_deltas(&[(-2.0, -0.5), (1.0, 0.5)])))
}

fn free() -> &'static SpectralDecomposition {
    static D: OnceLock<SpectralDecomposition> = OnceLock::new();
    D.get_or_init(|| setup(&PotentialSpec::free()))
}

#[test]
fn free_wave_operators_are_identity() {
    let d = free();
    for f in band_limited_family(d, 3, 7) {
        let a = apply_wplus(d, &f).unwrap();
        let b = apply_wplus_star(d, &f).unwrap();
        let n = d.table.norm(&f.values);
        assert!(d.table.norm(&a.sub(&f).values) < 1e-5 * n);
        assert!(d.table.norm(&b.sub(&f).values) < 1e-5 * n);
        assert!(intertwining_check(d, &f, |l| C64::from_polar(1.0, -0.7 * l)).unwrap() < 1e-6);
    }
    let s = sobolev_ratio(d, 2.0, &band_limited_family(d, 4, 3)).unwrap();
    assert!((s.sup() - 1.0).abs() < 1e-5, "{}", s.sup());
}

#[test]
fn isometry_and_projection() {
    let d = attractive();
    let t = &d.table;
    for f in band_limited_family(d, 4, 11) {
        let w = apply_wplus(d, &f).unwrap();
        assert!((t.norm(&w.values) / t.norm(&f.values) - 1.0).abs() < 1e-5);
    }
    for f in distorted_family(d, 4, 12) {
        let (_, r2) = identity_residuals(d, &f).unwrap();
        assert!(r2 < 1e-5, "{r2}");
        assert!(intertwining_check(d, &f, |_| C64::new(1.0, 0.0)).unwrap() < 1e-5);
    }
}

#[test]
fn wplus_star_annihilates_bound_states() {
    let d = attractive();
    for b in &d.bound {
        let w = apply_wplus_star(d, &b.psi).unwrap();
        assert!(d.table.norm(&w.values) < 1e-5);
    }
}

#[test]
fn hilbert_transform_examples() {
    let g = UniformGrid::new(0.0, 2.0 * PI / 256.0, 256);
    let f = GridFunction::from_real(g, |x| (3.0 * x).cos());
    let h = hilbert_transform(&f);
    for i in 0..g.len {
        assert!((h.values[i] - (3.0 * g.point(i)).sin()).norm() < 1e-12);
    }
    let c = hilbert_transform(&GridFunction::from_real(g, |_| 2.0));
    assert!(c.sup_norm() < 1e-14);
    let f = GridFunction::from_real(g, |x| (2.0 * x).sin() + 0.3 * (5.0 * x).cos());
    let hh = hilbert_transform(&hilbert_transform(&f));
    assert!(hh.add(&f).sup_norm() < 1e-12);
}

#[test]
fn frequency_split_partitions() {
    let g = UniformGrid::symmetric(10.0, 0.05).unwrap();
    let f = GridFunction::from_real(g, |x| (-x * x).exp() * (1.0 + (4.0 * x).cos()));
    let (lo, hi) = frequency_split(&f, &FrequencyCutoff::new(2.0).unwrap());
    assert!(lo.add(&hi).sub(&f).sup_norm() < 1e-14);
    let (lo, hi) = frequency_split(&f, &FrequencyCutoff::new(200.0).unwrap());
    assert!(lo.sub(&f).sup_norm() < 1e-13 && hi.sup_norm() < 1e-13);
    let mode = GridFunction::from_fn(g, |x| C64::from_polar(1.0, 2.0 * PI / (g.len as f64 * g.step) * 5.0 * x));
    let (lo, _) = frequency_split(&mode, &FrequencyCutoff::new(4.0).unwrap());
    assert!(lo.sub(&mode).sup_norm() < 1e-12);
    let c = FrequencyCutoff::new(1.5).unwrap();
    assert_eq!(c.profile(1.5), 1.0);
    assert_eq!(c.profile(-3.0), 0.0);
    assert!(FrequencyCutoff::new(0.0).is_err());
}

fn kernel(n: usize, h: f64, v: impl Fn(usize, usize) -> f64) -> KernelOperator {
    let g = UniformGrid::new(0.0, h, n);
    let mut a = Array2::filled(n, n, 0.0);
    for i in 0..n {
        for j in 0..n {
            *a.at_mut(i, j) = v(i, j);
        }
    }
    KernelOperator { x_grid: g, y_grid: g, values: a, dx_values: None }
}

#[test]
fn young_constant_examples() {
    assert_eq!(young_constant(&kernel(9, 0.25, |_, _| 0.0)), 0.0);
    // constant 1/L on [0, L]^2: both marginals integrate to 1
    let k = kernel(9, 0.25, |_, _| 0.5);
    assert!((young_constant(&k) - 2.0).abs() < 1e-14);
}

#[test]
fn sj_kernel_reads_b1_on_the_diagonal_shift() {
    let spec = PotentialSpec::free().with_regular(RegularPart::boxed(0.5, 0.0, 1.0));
    let dx = 1.0 / 32.0;
    let g = UniformGrid::span(0.0, 2.0, dx).unwrap();
    let j = solve_m1(&spec, &fft_k_grid(4096, PI / 8.0), &g).unwrap();
    let b = b1_from_m1_on(&j, dx / 2.0).unwrap();
    let op = sj_kernel(&b, 0.0).unwrap();
    for r in (0..g.len).step_by(5) {
        for c in 0..g.len {
            let want = if c >= r { b.value(r, c - r) } else { 0.0 };
            assert_eq!(*op.values.at(r, c), want);
        }
    }
    assert!(sj_kernel(&b1_from_m1_on(&j, dx).unwrap(), 0.0).is_err());

    let zero = solve_m1(&PotentialSpec::free(), &fft_k_grid(1024, PI / 8.0), &g).unwrap();
    let op = sj_kernel(&b1_from_m1_on(&zero, dx / 2.0).unwrap(), 0.0).unwrap();
    assert_eq!(young_constant(&op), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn wave_operator_adjoint_pairs(s1 in 0u64..500, s2 in 500u64..1000) {
        let d = attractive();
        let t = &d.table;
        let f = &band_limited_family(d, 1, s1)[0];
        let g = &band_limited_family(d, 1, s2)[0];
        let lhs = t.inner(&apply_wplus(d, f).unwrap().values, &g.values);
        let rhs = t.inner(&f.values, &apply_wplus_star(d, g).unwrap().values);
        prop_assert!((lhs - rhs).norm() < 1e-6 * t.norm(&f.values) * t.norm(&g.values));
    }
}
