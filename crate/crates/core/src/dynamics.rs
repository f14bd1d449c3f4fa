//! Time evolution for `i u_t = H u`: the continuous-spectrum propagator
//! `e^{-itH} P_c`, a dispersive decay study, the resolvent sandwich, and a
//! Strang split-step solver for `i u_t = H u + s g |u|^{2 sigma} u`.
//!
//! The dispersion phase is `exp(-i t k^2)` because `H e = k^2 e`. A bound
//! state with energy `-kappa^2` rotates by `exp(i t kappa^2)`.

use std::f64::consts::PI;

use crate::grid::{GridFunction, KQuadrature, UniformGrid};
use crate::potential::PotentialSpec;
use crate::scattering::{bound_states, plane_wave_coefficients, PlaneWaveCoefficients};
use crate::spectral::{distorted_ft, distorted_ft_adjoint, fourier, inverse_fourier, SpectralDecomposition};
use crate::wave_operators::{apply_wplus, apply_wplus_star};
use crate::{Error, Result, C64};

/// Time-indexed states with per-step diagnostics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    /// Recorded states, at `state_times`.
    pub states: Vec<GridFunction>,
    pub state_times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub supnorm: Vec<f64>,
    /// `int_{x<0} |u|^2`, with the node at `x = 0` split evenly.
    pub left_mass: Vec<f64>,
    pub right_mass: Vec<f64>,
}

impl EvolutionTrace {
    fn push(&mut self, t: f64, u: &[C64], grid: UniformGrid, weights: &[f64], energy: f64, keep: bool) {
        let (mut left, mut right) = (0.0, 0.0);
        for (i, (v, w)) in u.iter().zip(weights).enumerate() {
            let m = v.norm_sqr() * w;
            let x = grid.point(i);
            if x.abs() < 1e-12 * grid.step {
                left += 0.5 * m;
                right += 0.5 * m;
            } else if x < 0.0 {
                left += m;
            } else {
                right += m;
            }
        }
        self.times.push(t);
        self.mass.push(left + right);
        self.left_mass.push(left);
        self.right_mass.push(right);
        self.supnorm.push(u.iter().fold(0.0, |m, v| m.max(v.norm())));
        self.energy.push(energy);
        if keep {
            self.states.push(GridFunction::new(grid, u.to_vec()));
            self.state_times.push(t);
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest `|mass(t) - mass(0)| / mass(0)` divided by the elapsed time.
    pub fn mass_drift_rate(&self) -> f64 {
        let (Some(&m0), Some(&t0)) = (self.mass.first(), self.times.first()) else {
            return 0.0;
        };
        self.mass
            .iter()
            .zip(&self.times)
            .skip(1)
            .map(|(m, t)| (m - m0).abs() / m0 / (t - t0))
            .fold(0.0, f64::max)
    }
}

fn phase(t: f64, k: f64) -> C64 {
    C64::from_polar(1.0, -t * k * k)
}

/// `F_+^* e^{-itk^2} F_+ f`. With `with_bound`, the bound-state components of
/// `f` are added back with their phases `exp(i t kappa^2)`, giving `e^{-itH} f`.
pub fn evolve_linear(decomp: &SpectralDecomposition, f: &GridFunction, t: f64, with_bound: bool) -> Result<GridFunction> {
    let tab = &decomp.table;
    let g = distorted_ft(tab, f)?;
    warn_band_limit(&tab.k, &g, t, tab.x_grid.end());
    let g: Vec<C64> = g.iter().zip(&tab.k.nodes).map(|(a, &k)| a * phase(t, k)).collect();
    let mut u = distorted_ft_adjoint(tab, &g);
    if with_bound {
        for b in &decomp.bound {
            let c = tab.inner(&b.psi.values, &f.values) * C64::from_polar(1.0, t * b.kappa * b.kappa);
            u = u.add(&b.psi.scale(c));
        }
    }
    Ok(u)
}

/// Free evolution `F^{-1} e^{-itk^2} F f` on the same tables.
pub fn evolve_free(decomp: &SpectralDecomposition, f: &GridFunction, t: f64) -> Result<GridFunction> {
    let tab = &decomp.table;
    let g = fourier(tab, f)?;
    let g: Vec<C64> = g.iter().zip(&tab.k.nodes).map(|(a, &k)| a * phase(t, k)).collect();
    Ok(inverse_fourier(tab, &g))
}

fn warn_band_limit(k: &KQuadrature, g: &[C64], t: f64, x_max: f64) {
    let peak = g.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    if peak == 0.0 {
        return;
    }
    let edge = g.first().map_or(0.0, |v| v.norm()).max(g.last().map_or(0.0, |v| v.norm()));
    if edge > 1e-8 * peak {
        log::warn!("spectrum not negligible at the k-grid edge ({:.1e} of peak)", edge / peak);
    }
    let k_eff = k.nodes.iter().zip(g).filter(|(_, v)| v.norm() > 1e-8 * peak).fold(0.0f64, |m, (k, _)| m.max(k.abs()));
    if 2.0 * t.abs() * k_eff > x_max {
        log::warn!("ballistic radius {:.1} exceeds the spatial domain {:.1}", 2.0 * t.abs() * k_eff, x_max);
    }
}

/// `e^{-itH} P_c f` sampled at `times`, with the energy `int k^2 |F_+ f|^2 dk`.
pub fn linear_trace(decomp: &SpectralDecomposition, f: &GridFunction, times: &[f64]) -> Result<EvolutionTrace> {
    let tab = &decomp.table;
    let g = distorted_ft(tab, f)?;
    let energy: f64 = g.iter().zip(&tab.k.nodes).zip(&tab.k.weights).map(|((v, k), w)| k * k * v.norm_sqr() * w).sum();
    let mut trace = EvolutionTrace::default();
    for &t in times {
        let gt: Vec<C64> = g.iter().zip(&tab.k.nodes).map(|(a, &k)| a * phase(t, k)).collect();
        let u = distorted_ft_adjoint(tab, &gt);
        trace.push(t, &u.values, tab.x_grid, &tab.x_weights, energy, true);
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayOptions {
    /// Band limit of the k integral.
    pub k_max: f64,
    pub order: usize,
    /// Largest phase change of `e^{ikx - itk^2}` allowed across one panel.
    pub phase_per_panel: f64,
    pub x_pad: f64,
    /// Spatial sampling is `x_spacing * (1 + 2t)`.
    pub x_spacing: f64,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self { k_max: 6.0, order: 16, phase_per_panel: 8.0, x_pad: 10.0, x_spacing: 0.04 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub times: Vec<f64>,
    pub sup_norms: Vec<f64>,
    /// Least-squares slope of `log sup` against `log t`.
    pub slope: f64,
    pub intercept: f64,
    /// `max_t t^{1/2} ||u(t)||_inf`.
    pub scaled_sup: f64,
}

/// `||e^{-itH} P_c f||_inf` for each `t`, evaluated pointwise on
/// `|x| <= 2 t k_max + x_pad` with a k quadrature refined with `t`.
/// Pure delta potentials only; `f` lives on a short grid containing the deltas.
pub fn dispersive_decay_study(
    spec: &PotentialSpec,
    f: &GridFunction,
    t_list: &[f64],
    opts: &DecayOptions,
) -> Result<DecayReport> {
    if !spec.is_pure_delta() {
        return Err(Error::Unsupported("dispersive decay study needs a pure delta potential".into()));
    }
    if t_list.len() < 2 || t_list.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument("need at least two positive times".into()));
    }
    let weights = f.grid.weights(&spec.breakpoints())?;
    let peak = f.sup_norm();
    let support: Vec<(f64, C64)> = f
        .values
        .iter()
        .zip(&weights)
        .enumerate()
        .filter(|(_, (v, _))| v.norm() > 1e-16 * peak)
        .map(|(i, (v, w))| (f.grid.point(i), v * w))
        .collect();
    let c = 1.0 / (2.0 * PI);
    let mut sups = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let kk = opts.k_max;
        let x_max = 2.0 * t * kk + opts.x_pad;
        let h = opts.x_spacing * (1.0 + 2.0 * t);
        let m = (x_max / h).ceil() as i64;
        let xs: Vec<f64> = (-m..=m).map(|j| j as f64 * h).collect();
        let panel = (opts.phase_per_panel / (x_max + 2.0 * t * kk)).min(0.25);
        let q = KQuadrature::gauss_panels(kk, panel, opts.order);
        let mut u = vec![C64::new(0.0, 0.0); xs.len()];
        for (&k, &w) in q.nodes.iter().zip(&q.weights) {
            let wave = Wave::new(spec, k)?;
            let g: C64 = support.iter().map(|&(y, v)| wave.eval(y).conj() * v).sum();
            let a = g * phase(t, k) * w * c;
            for (o, &x) in u.iter_mut().zip(&xs) {
                *o += wave.eval(x) * a;
            }
        }
        sups.push(u.iter().fold(0.0f64, |m, v| m.max(v.norm())));
    }
    let lx: Vec<f64> = t_list.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = sups.iter().map(|s| s.ln()).collect();
    let (slope, intercept) = fit_line(&lx, &ly);
    let scaled_sup = t_list.iter().zip(&sups).map(|(t, s)| t.sqrt() * s).fold(0.0, f64::max);
    Ok(DecayReport { times: t_list.to_vec(), sup_norms: sups, slope, intercept, scaled_sup })
}

/// `e_+(x,k)` for `k > 0`, `e_-(x,-k)` for `k < 0`.
enum Wave {
    Free(f64),
    Delta(PlaneWaveCoefficients),
}

impl Wave {
    fn new(spec: &PotentialSpec, k: f64) -> Result<Self> {
        if spec.deltas.is_empty() {
            return Ok(Wave::Free(k));
        }
        let (plus, minus) = plane_wave_coefficients(spec, k.abs())?;
        Ok(Wave::Delta(if k > 0.0 { plus } else { minus }))
    }

    fn eval(&self, x: f64) -> C64 {
        match self {
            Wave::Free(k) => C64::from_polar(1.0, k * x),
            Wave::Delta(p) => p.eval(x),
        }
    }
}

/// Least-squares line `y = slope x + intercept`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `n` log-spaced times in `[t0, t1]`.
pub fn log_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| t0 * (t1 / t0).powf(i as f64 / (n - 1).max(1) as f64)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    /// `(H_0+1)^{-1} W_+ (H_0+1) W_+^* f`.
    pub value: GridFunction,
    /// `F^{-1} (k^2+1)^{-1} F F_+^* (k^2+1) F_+ f`.
    pub alternate: GridFunction,
    /// `||value - alternate|| / ||f||`.
    pub agreement: f64,
    /// `||value|| / ||f||`.
    pub ratio: f64,
}

/// The resolvent sandwich `(H_0+1)^{-1}(H+1) P_c f` by two routes.
pub fn resolvent_sandwich(decomp: &SpectralDecomposition, f: &GridFunction) -> Result<SandwichReport> {
    let tab = &decomp.table;
    let up: Vec<f64> = tab.k.nodes.iter().map(|k| k * k + 1.0).collect();
    let scale = |g: Vec<C64>, inv: bool| -> Vec<C64> {
        g.into_iter().zip(&up).map(|(v, s)| if inv { v / s } else { v * s }).collect()
    };
    let ws = apply_wplus_star(decomp, f)?;
    let mid = inverse_fourier(tab, &scale(fourier(tab, &ws)?, false));
    let wp = apply_wplus(decomp, &mid)?;
    let value = inverse_fourier(tab, &scale(fourier(tab, &wp)?, true));

    let v = distorted_ft_adjoint(tab, &scale(distorted_ft(tab, f)?, false));
    let alternate = inverse_fourier(tab, &scale(fourier(tab, &v)?, true));

    let nf = tab.norm(&f.values);
    Ok(SandwichReport {
        agreement: tab.norm(&value.sub(&alternate).values) / nf,
        ratio: tab.norm(&value.values) / nf,
        value,
        alternate,
    })
}

/// Eigenbasis of `H` on `[-a, a]` with Dirichlet ends, sampled on the interior
/// grid nodes and orthonormalized. The basis is complete on the grid, so the
/// linear substep `e^{-iH dt}` is unitary to round-off.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxPropagator {
    pub grid: UniformGrid,
    pub energies: Vec<f64>,
    /// Mode `m` occupies `basis[m*n..(m+1)*n]`; columns are interior nodes.
    basis: Vec<f64>,
    deltas: Vec<(f64, f64)>,
    n: usize,
}

impl BoxPropagator {
    /// Pure delta potentials whose deltas sit on grid nodes strictly inside the box.
    pub fn new(spec: &PotentialSpec, half_width: f64, dx: f64) -> Result<Self> {
        if !spec.is_pure_delta() {
            return Err(Error::Unsupported("box propagator needs a pure delta potential".into()));
        }
        let grid = UniformGrid::symmetric(half_width, dx)?;
        let mut deltas: Vec<(f64, f64)> = spec.deltas.iter().map(|d| (d.y, d.c)).collect();
        deltas.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(y, _) in &deltas {
            if grid.index_of(y).is_none() || y.abs() >= half_width {
                return Err(Error::InvalidArgument(format!("delta at {y} is not an interior grid node")));
            }
        }
        let n = grid.len - 2;
        let mut p = Self { grid, energies: Vec::with_capacity(n), basis: Vec::with_capacity(n * n), deltas, n };
        p.solve_modes()?;
        Ok(p)
    }

    fn a(&self) -> f64 {
        -self.grid.start
    }

    /// Number of zeros in `(-a, a]` of the solution with `u(-a) = 0`,
    /// which equals the number of Dirichlet eigenvalues `<= e`.
    fn count(&self, e: f64) -> usize {
        let (mut u, mut du) = (0.0, 1.0);
        let mut x = -self.a();
        let mut zeros = 0;
        let stops = self.deltas.iter().map(|&(y, c)| (y, c)).chain(std::iter::once((self.a(), 0.0)));
        for (y, c) in stops {
            let l = y - x;
            zeros += segment_zeros(u, du, e, l);
            (u, du) = propagate(u, du, e, l);
            du += c * u;
            let r = u.hypot(du);
            if r > 0.0 {
                u /= r;
                du /= r;
            }
            x = y;
        }
        zeros
    }

    fn solve_modes(&mut self) -> Result<()> {
        let n = self.n;
        let strength: f64 = self.deltas.iter().map(|d| d.1.abs()).sum();
        let mut lo = -(strength * strength) - 1.0;
        let mut hi = ((n + 1) as f64 * PI / (2.0 * self.a())).powi(2) + 2.0 * strength * (n as f64).sqrt() + 1.0;
        while self.count(hi) < n {
            hi *= 2.0;
        }
        for m in 0..n {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid == a || mid == b {
                    break;
                }
                if self.count(mid) >= m + 1 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            self.energies.push(b);
            lo = a;
        }
        let mut modes = Vec::with_capacity(n * n);
        for &e in &self.energies {
            modes.extend(self.sample(e));
        }
        // modified Gram-Schmidt in energy order, twice for stability
        for _ in 0..2 {
            for m in 0..n {
                for j in 0..m {
                    let (done, rest) = modes.split_at_mut(m * n);
                    let pj = &done[j * n..(j + 1) * n];
                    let pm = &mut rest[..n];
                    let d: f64 = pj.iter().zip(pm.iter()).map(|(a, b)| a * b).sum();
                    for (b, a) in pm.iter_mut().zip(pj) {
                        *b -= d * a;
                    }
                }
                let pm = &mut modes[m * n..(m + 1) * n];
                let nrm = pm.iter().map(|v| v * v).sum::<f64>().sqrt();
                if !(nrm > 0.0) {
                    return Err(Error::Quadrature("degenerate box eigenvector".into()));
                }
                pm.iter_mut().for_each(|v| *v /= nrm);
            }
        }
        self.basis = modes;
        Ok(())
    }

    /// Eigenfunction at energy `e` on interior nodes, shot from both ends and
    /// matched at a node near the center of the deltas.
    fn sample(&self, e: f64) -> Vec<f64> {
        let g = self.grid;
        let n = self.n;
        let centre = if self.deltas.is_empty() {
            0.0
        } else {
            self.deltas.iter().map(|d| d.0).sum::<f64>() / self.deltas.len() as f64
        };
        let mut jm = ((centre - g.start) / g.step).round() as usize;
        jm = jm.clamp(1, g.len - 2);
        if self.delta_at(g.point(jm)).is_some() {
            jm = if jm + 1 < g.len - 1 { jm + 1 } else { jm - 1 };
        }
        let mut out = vec![0.0; g.len];
        // left shot
        let (mut u, mut du) = (0.0, 1.0);
        for j in 1..=jm {
            (u, du) = propagate(u, du, e, g.step);
            out[j] = u;
            if let Some(c) = self.delta_at(g.point(j)) {
                du += c * u;
            }
        }
        let (ul, dul) = (u, du);
        // right shot
        let (mut v, mut dv) = (0.0, -1.0);
        let mut right = vec![0.0; g.len];
        for j in (jm..g.len - 1).rev() {
            (v, dv) = propagate(v, dv, e, -g.step);
            right[j] = v;
            if j > jm {
                if let Some(c) = self.delta_at(g.point(j)) {
                    dv -= c * v;
                }
            }
        }
        let s = (ul * v + dul * dv) / (v * v + dv * dv);
        for j in jm + 1..g.len - 1 {
            out[j] = s * right[j];
        }
        debug_assert_eq!(g.len - 2, n);
        out[1..g.len - 1].to_vec()
    }

    fn delta_at(&self, x: f64) -> Option<f64> {
        self.deltas.iter().find(|d| (d.0 - x).abs() < 1e-9 * self.grid.step).map(|d| d.1)
    }

    /// Interior values scaled to orthonormal coordinates.
    fn coords(&self, u: &[C64]) -> Vec<C64> {
        let sw = self.grid.step.sqrt();
        let n = self.n;
        (0..n)
            .map(|m| {
                let row = &self.basis[m * n..(m + 1) * n];
                row.iter().zip(&u[1..=n]).map(|(p, v)| v * p).sum::<C64>() * sw
            })
            .collect()
    }

    fn synth(&self, c: &[C64], out: &mut [C64]) {
        let n = self.n;
        let sw = self.grid.step.sqrt();
        out.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for (m, cm) in c.iter().enumerate() {
            let a = cm / sw;
            for (o, p) in out[1..=n].iter_mut().zip(&self.basis[m * n..(m + 1) * n]) {
                *o += a * p;
            }
        }
    }

    /// `u <- e^{-iH dt} u` in place.
    pub fn step(&self, u: &mut [C64], dt: f64) {
        let mut c = self.coords(u);
        for (v, e) in c.iter_mut().zip(&self.energies) {
            *v *= C64::from_polar(1.0, -e * dt);
        }
        self.synth(&c, u);
    }

    /// `<u, H u>` from the mode expansion.
    pub fn linear_energy(&self, u: &[C64]) -> f64 {
        self.coords(u).iter().zip(&self.energies).map(|(c, e)| e * c.norm_sqr()).sum()
    }

    /// Mode `m` as a grid function with unit discrete norm.
    pub fn mode(&self, m: usize) -> GridFunction {
        let n = self.n;
        let sw = self.grid.step.sqrt();
        let mut v = vec![C64::new(0.0, 0.0); self.grid.len];
        for (o, p) in v[1..=n].iter_mut().zip(&self.basis[m * n..(m + 1) * n]) {
            *o = C64::new(p / sw, 0.0);
        }
        GridFunction::new(self.grid, v)
    }

    /// Trapezoid weights; the end nodes carry the Dirichlet zeros.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![self.grid.step; self.grid.len];
        w[0] = 0.0;
        w[self.grid.len - 1] = 0.0;
        w
    }

    pub fn mode_count(&self) -> usize {
        self.n
    }
}

fn propagate(u: f64, du: f64, e: f64, l: f64) -> (f64, f64) {
    if e > 0.0 {
        let k = e.sqrt();
        let (s, c) = (k * l).sin_cos();
        (u * c + du * s / k, -u * k * s + du * c)
    } else if e < 0.0 {
        let q = (-e).sqrt();
        let (s, c) = ((q * l).sinh(), (q * l).cosh());
        (u * c + du * s / q, u * q * s + du * c)
    } else {
        (u + du * l, du)
    }
}

/// Zeros in `(0, l]` of the free solution started from `(u, du)`.
fn segment_zeros(u: f64, du: f64, e: f64, l: f64) -> usize {
    if e > 0.0 {
        let k = e.sqrt();
        let th = u.atan2(du / k);
        (((th + k * l) / PI).floor() - (th / PI).floor()) as usize
    } else if u == 0.0 || du == 0.0 {
        0
    } else if e < 0.0 {
        let q = (-e).sqrt();
        let rho = -u * q / du;
        usize::from(rho > 0.0 && rho < 1.0 && rho.atanh() / q <= l)
    } else {
        let s = -u / du;
        usize::from(s > 0.0 && s <= l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlsSign {
    /// `+ g |u|^{2 sigma} u` on the right of `i u_t = H u + ...`.
    Defocusing,
    Focusing,
}

impl NlsSign {
    fn value(self) -> f64 {
        match self {
            NlsSign::Defocusing => 1.0,
            NlsSign::Focusing => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlsConfig {
    pub sigma: f64,
    pub sign: NlsSign,
    /// Coupling `g >= 0`; zero gives the linear flow.
    pub g: f64,
    pub dt: f64,
    pub t_final: f64,
    /// Keep every `record_every`-th state; diagnostics are kept every step.
    pub record_every: usize,
}

impl NlsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma = {} must be positive", self.sigma)));
        }
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) || !(self.g >= 0.0) {
            return Err(Error::InvalidArgument("need dt > 0, t_final >= 0, g >= 0".into()));
        }
        Ok(())
    }
}

/// Strang splitting `N(dt/2) L(dt) N(dt/2)` for `i u_t = H u + s g |u|^{2 sigma} u`
/// with the exact linear step of `prop`. Diagnostics are recorded every step.
pub fn nls_solve(prop: &BoxPropagator, u0: &GridFunction, cfg: &NlsConfig) -> Result<EvolutionTrace> {
    cfg.validate()?;
    if u0.grid != prop.grid {
        return Err(Error::InvalidArgument("initial datum must live on the propagator grid".into()));
    }
    let steps = ((cfg.t_final / cfg.dt) - 1e-9).ceil().max(0.0) as usize;
    let dt = if steps > 0 { cfg.t_final / steps as f64 } else { cfg.dt };
    let s = cfg.sign.value() * cfg.g;
    let w = prop.weights();
    let energy = |u: &[C64]| -> f64 {
        let pot: f64 = u.iter().zip(&w).map(|(v, w)| v.norm_sqr().powf(cfg.sigma + 1.0) * w).sum();
        prop.linear_energy(u) + s * pot / (cfg.sigma + 1.0)
    };
    let rotate = |u: &mut [C64], tau: f64| {
        if s != 0.0 {
            for v in u.iter_mut() {
                *v *= C64::from_polar(1.0, -s * v.norm_sqr().powf(cfg.sigma) * tau);
            }
        }
    };
    let mut u = u0.values.clone();
    u[0] = C64::new(0.0, 0.0);
    let last = u.len() - 1;
    u[last] = C64::new(0.0, 0.0);
    let sup0 = u.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let mut trace = EvolutionTrace::default();
    trace.push(0.0, &u, prop.grid, &w, energy(&u), true);
    let mut warned = false;
    let every = cfg.record_every.max(1);
    for i in 1..=steps {
        let sup = u.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        if !warned && s.abs() * sup.powf(2.0 * cfg.sigma) * dt > 0.1 {
            log::warn!("dt times the nonlinear frequency exceeds 0.1");
            warned = true;
        }
        rotate(&mut u, 0.5 * dt);
        prop.step(&mut u, dt);
        rotate(&mut u, 0.5 * dt);
        let t = i as f64 * dt;
        let sup = u.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        if !sup.is_finite() || sup > 10.0 * sup0 {
            return Err(Error::BlowUp(t));
        }
        trace.push(t, &u, prop.grid, &w, energy(&u), i % every == 0 || i == steps);
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub dts: [f64; 3],
    /// `||u_dt - u_{dt/2}||` and `||u_{dt/2} - u_{dt/4}||` at `t_final`.
    pub differences: [f64; 2],
    pub ratio: f64,
}

/// Successive differences under dt-halving; order two gives a ratio near 4.
pub fn dt_halving(prop: &BoxPropagator, u0: &GridFunction, cfg: &NlsConfig) -> Result<ConvergenceReport> {
    let dts = [cfg.dt, cfg.dt / 2.0, cfg.dt / 4.0];
    let mut finals = Vec::with_capacity(3);
    for dt in dts {
        let c = NlsConfig { dt, record_every: usize::MAX, ..*cfg };
        let tr = nls_solve(prop, u0, &c)?;
        finals.push(tr.states.last().expect("final state").clone());
    }
    let w = prop.weights();
    let nrm = |a: &GridFunction, b: &GridFunction| -> f64 {
        a.values.iter().zip(&b.values).zip(&w).map(|((x, y), w)| (x - y).norm_sqr() * w).sum::<f64>().sqrt()
    };
    let d0 = nrm(&finals[0], &finals[1]);
    let d1 = nrm(&finals[1], &finals[2]);
    Ok(ConvergenceReport { dts, differences: [d0, d1], ratio: d0 / d1 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialRecipe {
    /// `(psi_even + psi_odd)/sqrt(2)` from the two lowest box modes, right well.
    BoundPair,
    Gaussian { center: f64, width: f64, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleWellReport {
    pub trace: EvolutionTrace,
    pub kappas: (f64, f64),
    /// `2 pi / (kappa_1^2 - kappa_2^2)` from the line bound states.
    pub beat_period: f64,
    /// Mean spacing of upward crossings of `left_mass - mass/2`.
    pub measured_period: Option<f64>,
    pub crossings: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxOptions {
    pub half_width: f64,
    pub dx: f64,
}

impl Default for BoxOptions {
    fn default() -> Self {
        Self { half_width: 16.0, dx: 1.0 / 16.0 }
    }
}

/// The double well `V = -q [delta(x - L) + delta(x + L)]`, strengths `c = -q`.
pub fn double_well_spec(q: f64, l: f64) -> PotentialSpec {
    PotentialSpec::from_deltas(&[(-q, -l), (-q, l)])
}

pub fn double_well_demo(q: f64, l: f64, cfg: &NlsConfig, recipe: InitialRecipe, opts: &BoxOptions) -> Result<DoubleWellReport> {
    let spec = double_well_spec(q, l);
    let bs = bound_states(&spec)?;
    if bs.len() < 2 {
        return Err(Error::InvalidArgument(format!("q L = {} gives fewer than two bound states", q * l)));
    }
    let kappas = (bs[0].kappa.max(bs[1].kappa), bs[0].kappa.min(bs[1].kappa));
    let beat_period = 2.0 * PI / (kappas.0.powi(2) - kappas.1.powi(2));
    let prop = BoxPropagator::new(&spec, opts.half_width, opts.dx)?;
    let u0 = match recipe {
        InitialRecipe::BoundPair => {
            let (e, o) = (prop.mode(0), prop.mode(1));
            // orient both to be positive on the right well
            let j = prop.grid.index_of(l).expect("delta on grid");
            let se = e.values[j].re.signum();
            let so = o.values[j].re.signum();
            e.scale(C64::new(se, 0.0)).add(&o.scale(C64::new(so, 0.0))).scale(C64::new(0.5f64.sqrt(), 0.0))
        }
        InitialRecipe::Gaussian { center, width, amplitude } => {
            GridFunction::from_real(prop.grid, |x| amplitude * (-(x - center).powi(2) / (2.0 * width * width)).exp())
        }
    };
    let trace = nls_solve(&prop, &u0, cfg)?;
    let (measured_period, crossings) = crossing_period(&trace);
    Ok(DoubleWellReport { trace, kappas, beat_period, measured_period, crossings })
}

fn crossing_period(tr: &EvolutionTrace) -> (Option<f64>, usize) {
    let d: Vec<f64> = tr.left_mass.iter().zip(&tr.mass).map(|(l, m)| l - 0.5 * m).collect();
    let mut ups = Vec::new();
    for i in 1..d.len() {
        if d[i - 1] < 0.0 && d[i] >= 0.0 {
            let s = d[i - 1] / (d[i - 1] - d[i]);
            ups.push(tr.times[i - 1] + s * (tr.times[i] - tr.times[i - 1]));
        }
    }
    if ups.len() < 2 {
        return (None, ups.len());
    }
    let p = (ups[ups.len() - 1] - ups[0]) / (ups.len() - 1) as f64;
    (Some(p), ups.len())
}
