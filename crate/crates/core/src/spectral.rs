//! Distorted plane waves, the generalized eigenfunctions `Psi_+`, the
//! distorted Fourier transform and the continuous spectral projection.
//!
//! `Psi_+(x,k) = e_+(x,k)/sqrt(2 pi)` for `k > 0` and `e_-(x,-k)/sqrt(2 pi)`
//! for `k < 0`. The free transform uses the same unitary normalization,
//! `F f(k) = (2 pi)^{-1/2} int e^{-ikx} f(x) dx`, so `F_+^* F_+ = P_c` and
//! `F^{-1} F = Id` without extra factors. Integrals in `x` use the piecewise
//! Gregory weights of [`UniformGrid::weights`] with the deltas as breakpoints;
//! integrals in `k` use the weights of the [`KQuadrature`]. Analysis and
//! synthesis share these weights, so they are exact adjoints on the grid.

use std::f64::consts::PI;

use crate::grid::{Array2, GridFunction, KQuadrature, UniformGrid};
use crate::jost;
use crate::potential::PotentialSpec;
use crate::scattering::{self, bound_states};
use crate::{Error, Result, C64, I};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveSource {
    TransferMatrix,
    Jost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistortedWaveTable {
    pub x_grid: UniformGrid,
    pub k: KQuadrature,
    /// `Psi_+(x_j, k_i)`, rows indexed by k node.
    pub psi: Array2<C64>,
    /// Right derivative `d/dx Psi_+`.
    pub dpsi: Array2<C64>,
    /// `T`, `R1`, `R2` at `|k_i|`.
    pub t: Vec<C64>,
    pub r1: Vec<C64>,
    pub r2: Vec<C64>,
    pub source: WaveSource,
    /// Quadrature weights in `x`.
    pub x_weights: Vec<f64>,
}

fn norm_c() -> f64 {
    (2.0 * PI).sqrt().recip()
}

impl DistortedWaveTable {
    /// `e_+(x_j, k_i)` for a node `k_i > 0`.
    pub fn e_plus(&self, ik: usize, ix: usize) -> C64 {
        debug_assert!(self.k.nodes[ik] > 0.0);
        *self.psi.at(ik, ix) / norm_c()
    }

    /// `e_-(x_j, -k_i)` for a node `k_i < 0`.
    pub fn e_minus(&self, ik: usize, ix: usize) -> C64 {
        debug_assert!(self.k.nodes[ik] < 0.0);
        *self.psi.at(ik, ix) / norm_c()
    }

    /// Weighted inner product `<f, g> = int conj(f) g`.
    pub fn inner(&self, f: &[C64], g: &[C64]) -> C64 {
        f.iter().zip(g).zip(&self.x_weights).map(|((a, b), w)| a.conj() * b * w).sum()
    }

    pub fn norm(&self, f: &[C64]) -> f64 {
        self.inner(f, f).re.max(0.0).sqrt()
    }

    /// Inner product over the k quadrature.
    pub fn k_inner(&self, f: &[C64], g: &[C64]) -> C64 {
        f.iter().zip(g).zip(&self.k.weights).map(|((a, b), w)| a.conj() * b * w).sum()
    }

    pub fn k_norm(&self, f: &[C64]) -> f64 {
        self.k_inner(f, f).re.max(0.0).sqrt()
    }

    fn check_grid(&self, f: &GridFunction) -> Result<()> {
        if f.grid != self.x_grid {
            return Err(Error::InvalidArgument("function grid differs from the table grid".into()));
        }
        let sup = f.sup_norm();
        let edge = f.values[0].norm().max(f.values[f.len() - 1].norm());
        if sup > 0.0 && edge > 1e-10 * sup {
            log::warn!("function is not negligible at the grid boundary ({edge:.2e})");
        }
        Ok(())
    }
}

/// Builds `Psi_+` on the grids: transfer matrix for pure delta potentials,
/// Jost assembly otherwise. Nodes at `k = 0` are dropped.
pub fn build_distorted_waves(spec: &PotentialSpec, k: &KQuadrature, x_grid: &UniformGrid) -> Result<DistortedWaveTable> {
    if spec.is_pure_delta() {
        build_transfer(spec, k, x_grid)
    } else {
        build_jost(spec, k, x_grid)
    }
}

fn drop_zero(k: &KQuadrature) -> KQuadrature {
    let (nodes, weights) = k.nodes.iter().zip(&k.weights).filter(|(n, _)| **n != 0.0).map(|(a, b)| (*a, *b)).unzip();
    KQuadrature { nodes, weights }
}

fn x_weights(spec: &PotentialSpec, x_grid: &UniformGrid) -> Result<Vec<f64>> {
    x_grid.weights(&spec.breakpoints())
}

pub fn build_transfer(spec: &PotentialSpec, k: &KQuadrature, x_grid: &UniformGrid) -> Result<DistortedWaveTable> {
    let k = drop_zero(k);
    let nx = x_grid.len;
    let nk = k.len();
    let zero = C64::new(0.0, 0.0);
    let mut psi = Array2::filled(nk, nx, zero);
    let mut dpsi = Array2::filled(nk, nx, zero);
    let (mut t, mut r1, mut r2) = (Vec::with_capacity(nk), Vec::with_capacity(nk), Vec::with_capacity(nk));
    let xs = x_grid.points();
    let c = norm_c();
    for (i, &kv) in k.nodes.iter().enumerate() {
        let m = scattering::transfer_matrix_at(spec, C64::new(kv.abs(), 0.0))?;
        let (tt, a, b) = scattering::coefficients(&m);
        t.push(tt);
        r1.push(a);
        r2.push(b);
        let (plus, minus) = scattering::plane_wave_coefficients(spec, kv.abs())?;
        let w = if kv > 0.0 { plus } else { minus };
        for (j, &x) in xs.iter().enumerate() {
            *psi.at_mut(i, j) = w.eval(x) * c;
            *dpsi.at_mut(i, j) = w.eval_dx(x) * c;
        }
    }
    Ok(DistortedWaveTable {
        x_grid: *x_grid,
        k,
        psi,
        dpsi,
        t,
        r1,
        r2,
        source: WaveSource::TransferMatrix,
        x_weights: x_weights(spec, x_grid)?,
    })
}

/// `e_+ = T e^{ikx} m1`, `e_- = T e^{-ikx} m2`, with `T = -2ik / W[f1, f2]`.
/// The grid must extend past the potential on both sides.
pub fn build_jost(spec: &PotentialSpec, k: &KQuadrature, x_grid: &UniformGrid) -> Result<DistortedWaveTable> {
    let k = drop_zero(k);
    if let Some((lo, hi)) = spec.extent() {
        if lo <= x_grid.start || hi >= x_grid.end() {
            return Err(Error::InvalidArgument("x grid must extend beyond the potential on both sides".into()));
        }
    }
    let mut ks: Vec<f64> = k.nodes.iter().map(|v| v.abs()).collect();
    ks.sort_by(f64::total_cmp);
    ks.dedup();
    let sol = jost::solve_both(spec, &ks, x_grid)?;
    let (m1, d1) = (sol.m1.as_ref().unwrap(), sol.m1_dx.as_ref().unwrap());
    let (m2, d2) = (sol.m2.as_ref().unwrap(), sol.m2_dx.as_ref().unwrap());
    let nx = x_grid.len;
    let nk = k.len();
    let zero = C64::new(0.0, 0.0);
    let mut psi = Array2::filled(nk, nx, zero);
    let mut dpsi = Array2::filled(nk, nx, zero);
    let (mut t, mut r1, mut r2) = (Vec::with_capacity(nk), Vec::with_capacity(nk), Vec::with_capacity(nk));
    let c = norm_c();
    let mid = nx / 2;
    let (xl, xr) = (x_grid.start, x_grid.end());
    for (i, &kv) in k.nodes.iter().enumerate() {
        let ka = kv.abs();
        let j = ks.partition_point(|&v| v < ka);
        let w = sol.wronskian(mid, j).unwrap();
        let tt = -2.0 * I * ka / w;
        t.push(tt);
        r2.push((tt * *m1.at(0, j) - 1.0) * C64::from_polar(1.0, 2.0 * ka * xl));
        r1.push((tt * *m2.at(nx - 1, j) - 1.0) * C64::from_polar(1.0, -2.0 * ka * xr));
        for ix in 0..nx {
            let x = x_grid.point(ix);
            if kv > 0.0 {
                let e = C64::from_polar(1.0, ka * x);
                let (m, dm) = (*m1.at(ix, j), *d1.at(ix, j));
                *psi.at_mut(i, ix) = tt * e * m * c;
                *dpsi.at_mut(i, ix) = tt * e * (I * ka * m + dm) * c;
            } else {
                let e = C64::from_polar(1.0, -ka * x);
                let (m, dm) = (*m2.at(ix, j), *d2.at(ix, j));
                *psi.at_mut(i, ix) = tt * e * m * c;
                *dpsi.at_mut(i, ix) = tt * e * (-I * ka * m + dm) * c;
            }
        }
    }
    Ok(DistortedWaveTable {
        x_grid: *x_grid,
        k,
        psi,
        dpsi,
        t,
        r1,
        r2,
        source: WaveSource::Jost,
        x_weights: x_weights(spec, x_grid)?,
    })
}

/// `Psi_+(x, k)` evaluated directly (pure delta potentials).
pub fn psi_plus(spec: &PotentialSpec, x: f64, k: f64) -> Result<C64> {
    let (plus, minus) = scattering::plane_wave_coefficients(spec, k.abs())?;
    let w = if k > 0.0 { plus } else { minus };
    Ok(w.eval(x) * norm_c())
}

/// `Psi_-(x, k) = conj(Psi_+(x, -k))`.
pub fn psi_minus(spec: &PotentialSpec, x: f64, k: f64) -> Result<C64> {
    Ok(psi_plus(spec, x, -k)?.conj())
}

/// Table lookup of `Psi_+` at node `ik`, grid point `ix`.
pub fn psi_plus_at(table: &DistortedWaveTable, ix: usize, ik: usize) -> C64 {
    *table.psi.at(ik, ix)
}

/// `F_+ f(k) = int conj(Psi_+(y,k)) f(y) dy` on the table's k nodes.
pub fn distorted_ft(table: &DistortedWaveTable, f: &GridFunction) -> Result<Vec<C64>> {
    table.check_grid(f)?;
    let wf: Vec<C64> = f.values.iter().zip(&table.x_weights).map(|(v, w)| v * w).collect();
    Ok((0..table.k.len())
        .map(|i| table.psi.row(i).iter().zip(&wf).map(|(p, v)| p.conj() * v).sum())
        .collect())
}

/// `F_+^* g(x) = int Psi_+(x,k) g(k) dk`.
pub fn distorted_ft_adjoint(table: &DistortedWaveTable, g: &[C64]) -> GridFunction {
    synth(table, &table.psi, g)
}

/// `d/dx F_+^* g`, from the tabulated derivative of `Psi_+`.
pub fn distorted_ft_adjoint_dx(table: &DistortedWaveTable, g: &[C64]) -> GridFunction {
    synth(table, &table.dpsi, g)
}

fn synth(table: &DistortedWaveTable, rows: &Array2<C64>, g: &[C64]) -> GridFunction {
    let mut out = vec![C64::new(0.0, 0.0); table.x_grid.len];
    for (i, (gv, w)) in g.iter().zip(&table.k.weights).enumerate() {
        let a = gv * w;
        if a == C64::new(0.0, 0.0) {
            continue;
        }
        for (o, p) in out.iter_mut().zip(rows.row(i)) {
            *o += p * a;
        }
    }
    GridFunction::new(table.x_grid, out)
}

/// Free transform `F f(k) = (2 pi)^{-1/2} int e^{-ikx} f(x) dx` on the table nodes.
pub fn fourier(table: &DistortedWaveTable, f: &GridFunction) -> Result<Vec<C64>> {
    table.check_grid(f)?;
    let g = &table.x_grid;
    let c = norm_c();
    let wf: Vec<C64> = f.values.iter().zip(&table.x_weights).map(|(v, w)| v * w).collect();
    Ok(table
        .k
        .nodes
        .iter()
        .map(|&k| {
            let mut ph = C64::from_polar(1.0, -k * g.start);
            let step = C64::from_polar(1.0, -k * g.step);
            let mut acc = C64::new(0.0, 0.0);
            for (j, v) in wf.iter().enumerate() {
                if j % 256 == 0 {
                    ph = C64::from_polar(1.0, -k * g.point(j));
                }
                acc += ph * v;
                ph *= step;
            }
            acc * c
        })
        .collect())
}

/// Free synthesis `F^{-1} g(x) = (2 pi)^{-1/2} int e^{ikx} g(k) dk`.
pub fn inverse_fourier(table: &DistortedWaveTable, g: &[C64]) -> GridFunction {
    let xg = &table.x_grid;
    let c = norm_c();
    let mut out = vec![C64::new(0.0, 0.0); xg.len];
    for ((&k, gv), w) in table.k.nodes.iter().zip(g).zip(&table.k.weights) {
        let a = gv * w * c;
        let step = C64::from_polar(1.0, k * xg.step);
        let mut ph = C64::from_polar(1.0, k * xg.start);
        for (j, o) in out.iter_mut().enumerate() {
            if j % 256 == 0 {
                ph = C64::from_polar(1.0, k * xg.point(j));
            }
            *o += ph * a;
            ph *= step;
        }
    }
    GridFunction::new(*xg, out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundStateFn {
    pub kappa: f64,
    pub psi: GridFunction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub table: DistortedWaveTable,
    pub bound: Vec<BoundStateFn>,
}

/// Distorted wave table plus sampled bound states. Bound states are only
/// available for pure delta potentials; a regular part that binds is rejected.
pub fn decompose(spec: &PotentialSpec, k: &KQuadrature, x_grid: &UniformGrid) -> Result<SpectralDecomposition> {
    let table = build_distorted_waves(spec, k, x_grid)?;
    let bound = if spec.is_pure_delta() {
        bound_states(spec)?
            .into_iter()
            .map(|b| BoundStateFn {
                kappa: b.kappa,
                psi: GridFunction::from_real(*x_grid, |x| b.eval(x)),
            })
            .collect()
    } else {
        if !scattering::bound_state_kappas_bracketed(spec)?.is_empty() {
            return Err(Error::Unsupported("bound states of potentials with a regular part".into()));
        }
        vec![]
    };
    Ok(SpectralDecomposition { table, bound })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// `F_+^* F_+ f`.
    pub value: GridFunction,
    /// `||F_+^* F_+ f - (f - sum <psi_j, f> psi_j)|| / ||f||`.
    pub discrepancy: f64,
}

/// `P_c f` by the spectral route, checked against `f` minus its bound-state components.
pub fn pc_project(decomp: &SpectralDecomposition, f: &GridFunction) -> Result<Projection> {
    pc_project_tol(decomp, f, 1e-4)
}

pub fn pc_project_tol(decomp: &SpectralDecomposition, f: &GridFunction, tol: f64) -> Result<Projection> {
    let t = &decomp.table;
    let a = distorted_ft_adjoint(t, &distorted_ft(t, f)?);
    let b = remove_bound(decomp, f);
    let nf = t.norm(&f.values);
    let d = t.norm(&a.sub(&b).values) / if nf > 0.0 { nf } else { 1.0 };
    if d > tol {
        return Err(Error::ProjectionMismatch(d));
    }
    Ok(Projection { value: a, discrepancy: d })
}

/// `f - sum_j <psi_j, f> psi_j`.
pub fn remove_bound(decomp: &SpectralDecomposition, f: &GridFunction) -> GridFunction {
    let t = &decomp.table;
    let mut out = f.clone();
    for b in &decomp.bound {
        let c = t.inner(&b.psi.values, &f.values);
        out = out.sub(&b.psi.scale(c));
    }
    out
}

/// `C^inf` window equal to 1 on `[lo + d, hi - d]` and 0 outside `[lo, hi]`.
pub(crate) fn window(k: f64, lo: f64, hi: f64, d: f64) -> f64 {
    smooth_step((k - lo) / d) * smooth_step((hi - k) / d)
}

fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_table_is_plane_waves() {
        let k = KQuadrature::gauss_panels(2.0, 0.5, 4);
        let g = UniformGrid::span(-2.0, 2.0, 0.5).unwrap();
        let t = build_distorted_waves(&PotentialSpec::free(), &k, &g).unwrap();
        let p = *t.psi.at(3, 2);
        let want = C64::from_polar(1.0, k.nodes[3] * g.point(2)) * norm_c();
        assert!((p - want).norm() < 1e-14);
    }
}
