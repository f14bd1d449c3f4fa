//! Wave operators `W_+ = F_+^* F`, `W_+^* = F^{-1} F_+` and the pieces of the
//! boundedness argument: Hilbert transform, frequency cutoffs, the `S_1`
//! kernel and its Young constant, and discrete `W^{1,p}` ratios.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

use crate::grid::{Array2, GridFunction, UniformGrid};
use crate::jost::{B1Kernel, JostSolution};
use crate::spectral::{
    distorted_ft, distorted_ft_adjoint, distorted_ft_adjoint_dx, fourier, inverse_fourier, window,
    SpectralDecomposition,
};
use crate::{Error, Result, C64, I};

/// `W_+ f = F_+^* F f`.
pub fn apply_wplus(decomp: &SpectralDecomposition, f: &GridFunction) -> Result<GridFunction> {
    let t = &decomp.table;
    Ok(distorted_ft_adjoint(t, &fourier(t, f)?))
}

/// `W_+^* f = F^{-1} F_+ f`.
pub fn apply_wplus_star(decomp: &SpectralDecomposition, f: &GridFunction) -> Result<GridFunction> {
    let t = &decomp.table;
    Ok(inverse_fourier(t, &distorted_ft(t, f)?))
}

/// Quintic smoothstep: 0 for `t <= 0`, 1 for `t >= 1`, `C^2` in between.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyCutoff {
    pub k0: f64,
}

impl FrequencyCutoff {
    pub fn new(k0: f64) -> Result<Self> {
        if !(k0 > 0.0) {
            return Err(Error::InvalidArgument(format!("cutoff k0 = {k0} must be positive")));
        }
        Ok(Self { k0 })
    }

    /// `psi(|k| <= k0)`: 1 below `k0`, 0 above `2 k0`.
    pub fn profile(&self, k: f64) -> f64 {
        1.0 - smoothstep((k.abs() - self.k0) / self.k0)
    }

    /// Spatial cutoff `chi(x >= 1)`: 0 for `x <= 1/2`, 1 for `x >= 1`.
    pub fn chi(x: f64) -> f64 {
        smoothstep(2.0 * x - 1.0)
    }
}

/// Periodic FFT wavenumbers `2 pi j / (N dx)` in FFT order.
fn fft_wavenumbers(n: usize, dx: f64) -> Vec<f64> {
    let l = n as f64 * dx;
    (0..n)
        .map(|j| {
            let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            2.0 * std::f64::consts::PI * m / l
        })
        .collect()
}

fn multiplier(f: &GridFunction, m: impl Fn(f64) -> C64) -> GridFunction {
    let n = f.len();
    let mut planner = FftPlanner::<f64>::new();
    let mut buf = f.values.clone();
    planner.plan_fft_forward(n).process(&mut buf);
    for (v, k) in buf.iter_mut().zip(fft_wavenumbers(n, f.grid.step)) {
        *v *= m(k) / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    GridFunction::new(f.grid, buf)
}

/// Multiplier `-i sgn(k)` on the periodic extension, with `sgn(0) = 0`.
/// At the Nyquist index the multiplier is also set to 0.
pub fn hilbert_transform(f: &GridFunction) -> GridFunction {
    let n = f.len();
    let nyq = if n % 2 == 0 { Some(std::f64::consts::PI / f.grid.step) } else { None };
    multiplier(f, |k| {
        if k == 0.0 || nyq.is_some_and(|q| (k.abs() - q).abs() < 1e-12 * q) {
            C64::new(0.0, 0.0)
        } else {
            -I * k.signum()
        }
    })
}

/// `(f_low, f_high)` with `f_low = psi(|D| <= k0) f`; `f_high = f - f_low`.
pub fn frequency_split(f: &GridFunction, cutoff: &FrequencyCutoff) -> (GridFunction, GridFunction) {
    let low = multiplier(f, |k| C64::new(cutoff.profile(k), 0.0));
    let high = f.sub(&low);
    (low, high)
}

/// Spectral derivative on the periodic extension.
pub fn spectral_derivative(f: &GridFunction) -> GridFunction {
    multiplier(f, |k| I * k)
}

/// Integral kernel `A(x_i, y_j)` on a rectangular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelOperator {
    pub x_grid: UniformGrid,
    pub y_grid: UniformGrid,
    pub values: Array2<f64>,
    /// Optional `d/dx` companion (NaN where undefined).
    pub dx_values: Option<Array2<f64>>,
}

impl KernelOperator {
    /// `(S_A phi)(x_i) = sum_j A(x_i, y_j) phi(y_j) dy` (trapezoid).
    pub fn apply(&self, phi: &[C64]) -> Vec<C64> {
        let h = self.y_grid.step;
        let n = self.y_grid.len;
        (0..self.x_grid.len)
            .map(|i| {
                self.values
                    .row(i)
                    .iter()
                    .zip(phi)
                    .enumerate()
                    .map(|(j, (a, p))| if j == 0 || j == n - 1 { 0.5 } else { 1.0 } * a * p)
                    .sum::<C64>()
                    * h
            })
            .collect()
    }
}

/// `1_{y >= x} B1(x, (y - x)/2)` for rows `x >= x_from` of `b1` and columns on
/// the same x lattice. `b1.y_grid.step` must be half the x step.
pub fn sj_kernel(b1: &B1Kernel, x_from: f64) -> Result<KernelOperator> {
    let xg = &b1.x_grid;
    let h = xg.step;
    if (b1.y_grid.step - 0.5 * h).abs() > 1e-12 * h {
        return Err(Error::InvalidArgument("B1 y step must be half the x step".into()));
    }
    let i0 = (0..xg.len)
        .find(|&i| xg.point(i) >= x_from - 1e-12)
        .ok_or_else(|| Error::InvalidArgument("x_from beyond the grid".into()))?;
    let nx = xg.len - i0;
    let rows = UniformGrid::new(xg.point(i0), h, nx);
    let ny_max = b1.y_grid.len;
    let mut vals = Array2::filled(nx, nx, 0.0);
    let mut dvals = Array2::filled(nx, nx, f64::NAN);
    for r in 0..nx {
        for c in r..nx {
            let iy = c - r;
            if iy < ny_max {
                *vals.at_mut(r, c) = b1.value(i0 + r, iy);
                *dvals.at_mut(r, c) = *b1.dx_values.at(i0 + r, iy);
            }
        }
    }
    Ok(KernelOperator { x_grid: rows, y_grid: rows, values: vals, dx_values: Some(dvals) })
}

/// `sup_x int |A(x,y)| dy + sup_y int |A(x,y)| dx` with trapezoid weights.
pub fn young_constant(op: &KernelOperator) -> f64 {
    let (nx, ny) = (op.values.rows, op.values.cols);
    let tw = |j: usize, n: usize, h: f64| if j == 0 || j == n - 1 { 0.5 * h } else { h };
    let mut row_sup: f64 = 0.0;
    let mut cols = vec![0.0; ny];
    for i in 0..nx {
        let wx = tw(i, nx, op.x_grid.step);
        let mut s = 0.0;
        for (j, c) in cols.iter_mut().enumerate() {
            let a = op.values.at(i, j).abs();
            s += a * tw(j, ny, op.y_grid.step);
            *c += a * wx;
        }
        row_sup = row_sup.max(s);
    }
    row_sup + cols.into_iter().fold(0.0, f64::max)
}

/// Discrete `||f||_p` with the table's x weights.
pub fn lp_norm(w: &[f64], f: &[C64], p: f64) -> f64 {
    f.iter().zip(w).map(|(v, w)| w * v.norm().powf(p)).sum::<f64>().powf(1.0 / p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobolevStudy {
    pub p: f64,
    /// `||W_+ f||_{W^{1,p}} / ||f||_{W^{1,p}}` per family member.
    pub ratios: Vec<f64>,
    /// Running maximum after each member.
    pub running_max: Vec<f64>,
}

impl SobolevStudy {
    pub fn sup(&self) -> f64 {
        self.running_max.last().copied().unwrap_or(0.0)
    }

    /// Sup over the first `n` members.
    pub fn sup_first(&self, n: usize) -> f64 {
        self.running_max[n.min(self.running_max.len()) - 1]
    }
}

/// Empirical lower bound for the `W^{1,p}` operator norm of `W_+`.
/// `f'` is the Fourier derivative and `(W_+ f)'` uses the tabulated `d/dx Psi_+`,
/// which is one-sided at the deltas.
pub fn sobolev_ratio(decomp: &SpectralDecomposition, p: f64, family: &[GridFunction]) -> Result<SobolevStudy> {
    Ok(sobolev_ratios(decomp, &[p], family)?.remove(0))
}

/// [`sobolev_ratio`] for several exponents, sharing the transforms.
pub fn sobolev_ratios(decomp: &SpectralDecomposition, ps: &[f64], family: &[GridFunction]) -> Result<Vec<SobolevStudy>> {
    if let Some(p) = ps.iter().find(|p| !(**p > 1.0) || !p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p = {p} must lie in (1, inf)")));
    }
    if family.is_empty() {
        return Err(Error::InvalidArgument("empty family".into()));
    }
    let t = &decomp.table;
    let w = &t.x_weights;
    let mut out: Vec<SobolevStudy> = ps
        .iter()
        .map(|&p| SobolevStudy { p, ratios: Vec::with_capacity(family.len()), running_max: Vec::with_capacity(family.len()) })
        .collect();
    for f in family {
        let ff = fourier(t, f)?;
        let dff: Vec<C64> = ff.iter().zip(&t.k.nodes).map(|(v, k)| I * k * v).collect();
        let df = inverse_fourier(t, &dff);
        let wf = distorted_ft_adjoint(t, &ff);
        let dwf = distorted_ft_adjoint_dx(t, &ff);
        for st in out.iter_mut() {
            let p = st.p;
            let num = lp_norm(w, &wf.values, p) + lp_norm(w, &dwf.values, p);
            let den = lp_norm(w, &f.values, p) + lp_norm(w, &df.values, p);
            let r = num / den;
            let best = st.running_max.last().copied().unwrap_or(0.0).max(r);
            st.ratios.push(r);
            st.running_max.push(best);
        }
    }
    Ok(out)
}

/// `||b(H) P_c f - W_+ b(H_0) W_+^* f|| / ||f||` where `b` is given as a
/// function of the spectral parameter `lambda = k^2`.
pub fn intertwining_check(decomp: &SpectralDecomposition, f: &GridFunction, borel: impl Fn(f64) -> C64) -> Result<f64> {
    let t = &decomp.table;
    let b: Vec<C64> = t.k.nodes.iter().map(|k| borel(k * k)).collect();
    let fp = distorted_ft(t, f)?;
    let lhs = distorted_ft_adjoint(t, &fp.iter().zip(&b).map(|(a, b)| a * b).collect::<Vec<_>>());
    let ws = inverse_fourier(t, &fp);
    let fw = fourier(t, &ws)?;
    let mid = inverse_fourier(t, &fw.iter().zip(&b).map(|(a, b)| a * b).collect::<Vec<_>>());
    let rhs = apply_wplus(decomp, &mid)?;
    Ok(t.norm(&lhs.sub(&rhs).values) / t.norm(&f.values))
}

/// Residuals `||W_+^* W_+ f - f|| / ||f||` and `||W_+ W_+^* f - P_c f|| / ||f||`.
pub fn identity_residuals(decomp: &SpectralDecomposition, f: &GridFunction) -> Result<(f64, f64)> {
    let t = &decomp.table;
    let nf = t.norm(&f.values);
    let a = apply_wplus_star(decomp, &apply_wplus(decomp, f)?)?;
    let r1 = t.norm(&a.sub(f).values) / nf;
    let b = apply_wplus(decomp, &apply_wplus_star(decomp, f)?)?;
    let pc = distorted_ft_adjoint(t, &distorted_ft(t, f)?);
    let r2 = t.norm(&b.sub(&pc).values) / nf;
    Ok((r1, r2))
}

/// Band-limited test family. Each member is the free synthesis of one to three
/// Gaussian packets in k (width 0.25, centers `|k_c|` in `[2.5, 3.75]`, either sign,
/// position shifts in `[-4, 4]`), multiplied by a window that vanishes outside
/// `0.5 <= |k| <= 6`.
pub fn band_limited_family(decomp: &SpectralDecomposition, n: usize, seed: u64) -> Vec<GridFunction> {
    let t = &decomp.table;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let spec = random_profile(&mut rng);
            let g: Vec<C64> = t.k.nodes.iter().map(|&k| spec(k)).collect();
            inverse_fourier(t, &g)
        })
        .collect()
}

/// `F_+^* h` for band-limited profiles `h` as in [`band_limited_family`], plus
/// a random combination of the bound states.
pub fn distorted_family(decomp: &SpectralDecomposition, n: usize, seed: u64) -> Vec<GridFunction> {
    let t = &decomp.table;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_d157);
    (0..n)
        .map(|_| {
            let spec = random_profile(&mut rng);
            let g: Vec<C64> = t.k.nodes.iter().map(|&k| spec(k)).collect();
            let mut f = distorted_ft_adjoint(t, &g);
            for b in &decomp.bound {
                let c = C64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
                f = f.add(&b.psi.scale(c));
            }
            f
        })
        .collect()
}

fn random_profile(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> C64 {
    let m = rng.random_range(1..=3);
    let packets: Vec<(f64, f64, C64)> = (0..m)
        .map(|_| {
            let kc = rng.random_range(2.5..3.75) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let xc = rng.random_range(-4.0..4.0);
            let a = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (kc, xc, a)
        })
        .collect();
    move |k: f64| {
        let w = window(k.abs(), 0.5, 6.0, 0.75);
        if w == 0.0 {
            return C64::new(0.0, 0.0);
        }
        packets
            .iter()
            .map(|&(kc, xc, a)| a * (-(k - kc).powi(2) / (2.0 * 0.0625)).exp() * C64::from_polar(1.0, -k * xc))
            .sum::<C64>()
            * w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SixTermReport {
    /// `max_{x >= 0} |sum of six terms - W_+ phi|`.
    pub max_abs: f64,
    /// The same relative to `max |W_+ phi|` on `x >= 0`.
    pub relative: f64,
}

/// Reassembles `W_+ phi` on `x >= 0` from
/// `F^{-1}[T 1_{k>0} phi^] + F^{-1}[1_{k<0} phi^] + F^{-1}[R1 1_{k>0} (P phi)^]`
/// and the three `(m1 - 1)` corrections, and compares with [`apply_wplus`].
/// `jost` must hold `m1` on the table's x grid at the positive `|k|` nodes.
pub fn six_term_reassembly(decomp: &SpectralDecomposition, jost: &JostSolution, phi: &GridFunction) -> Result<SixTermReport> {
    let t = &decomp.table;
    let m1 = jost.m1.as_ref().ok_or_else(|| Error::InvalidArgument("needs m1".into()))?;
    if jost.x_grid != t.x_grid {
        return Err(Error::InvalidArgument("Jost grid differs from the table grid".into()));
    }
    let ph = fourier(t, phi)?;
    let c = (2.0 * std::f64::consts::PI).sqrt().recip();
    let col = |k: f64| -> Result<usize> {
        let j = jost.k_grid.partition_point(|&v| v < k.abs() - 1e-12);
        if j < jost.k_grid.len() && (jost.k_grid[j] - k.abs()).abs() < 1e-12 {
            Ok(j)
        } else {
            Err(Error::InvalidArgument(format!("|k| = {} missing from the Jost grid", k.abs())))
        }
    };
    // phi^(-k) at node -k: nodes are mirror symmetric
    let nk = t.k.len();
    let mirror = |i: usize| nk - 1 - i;
    let w_direct = apply_wplus(decomp, phi)?;
    let mut max_abs: f64 = 0.0;
    let mut max_ref: f64 = 0.0;
    for ix in 0..t.x_grid.len {
        let x = t.x_grid.point(ix);
        if x < 0.0 {
            continue;
        }
        let mut s = C64::new(0.0, 0.0);
        for i in 0..nk {
            let k = t.k.nodes[i];
            let w = t.k.weights[i];
            let j = col(k)?;
            let e = C64::from_polar(1.0, k * x);
            if k > 0.0 {
                let m = *m1.at(ix, j);
                // Phi_1 and the T (m1 - 1) term
                s += w * c * t.t[i] * e * ph[i];
                s += w * c * t.t[i] * e * (m - 1.0) * ph[i];
                // Phi_3 and its (m1 - 1) term, from the mirrored node
                let pm = ph[mirror(i)];
                s += w * c * t.r1[i] * e * pm;
                s += w * c * t.r1[i] * e * (m - 1.0) * pm;
            } else {
                // m1(x, k) for k < 0 is conj(m1(x, -k))
                let m = m1.at(ix, j).conj();
                s += w * c * e * ph[i];
                s += w * c * e * (m - 1.0) * ph[i];
            }
        }
        let d = w_direct.values[ix];
        max_abs = max_abs.max((s - d).norm());
        max_ref = max_ref.max(d.norm());
    }
    Ok(SixTermReport { max_abs, relative: max_abs / max_ref.max(1e-300) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_ends() {
        assert_eq!(smoothstep(-1.0), 0.0);
        assert_eq!(smoothstep(2.0), 1.0);
        assert!((smoothstep(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_kernel_young_constant() {
        // unit square, A = 1: both sups are 1
        let g = UniformGrid::new(0.0, 0.25, 5);
        let mut b = Array2::filled(5, 5, 0.0);
        for i in 0..5 {
            for j in 0..5 {
                *b.at_mut(i, j) = 1.0;
            }
        }
        let op = KernelOperator { x_grid: g, y_grid: g, values: b, dx_values: None };
        assert!((young_constant(&op) - 2.0).abs() < 1e-14);
    }
}
