//! Jost functions `m1`, `m2` from their Volterra equations, the kernel `B1`
//! and the `K_n` series.
//!
//! `m1(x,k) = 1 + int_x^inf D_k(y-x) V(y) m1(y,k) dy` with
//! `D_k(s) = (e^{2iks} - 1) / (2ik)`. The backward sweep integrates the equation
//! exactly across each grid segment with `V_reg` frozen at the segment midpoint
//! (equivalently the constant-coefficient ODE for `f1 = e^{ikx} m1`), so the
//! error is `O(h^2)` uniformly in `k`; deltas enter as point terms at nodes.
//! Richardson extrapolation between `h` and `h/2` removes the leading term.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rustfft::FftPlanner;

use crate::grid::{d4, Array2, UniformGrid};
use crate::potential::{PotentialSpec, Side};
use crate::{Error, Result, C64, I};

/// `D_k(x) = int_0^x e^{2iky} dy`.
pub fn dk_kernel(k: C64, x: f64) -> C64 {
    let z = 2.0 * I * k * x;
    if z.norm() < 1e-3 {
        // x (1 + z/2 + z^2/6 + z^3/24 + z^4/120)
        x * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0))))
    } else {
        (z.exp() - 1.0) / (2.0 * I * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JostSide {
    M1,
    M2,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JostOptions {
    /// Internal sweep step is `x_grid.step / refine`.
    pub refine: usize,
    /// Largest accepted Richardson error estimate.
    pub richardson_tol: f64,
}

impl Default for JostOptions {
    fn default() -> Self {
        Self { refine: 2, richardson_tol: 1e-6 }
    }
}

/// Jost functions sampled on `x_grid` (rows) times `k_grid` (columns).
/// `*_dx` hold right derivatives `d/dx m(x+, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JostSolution {
    pub x_grid: UniformGrid,
    pub k_grid: Vec<f64>,
    pub m1: Option<Array2<C64>>,
    pub m1_dx: Option<Array2<C64>>,
    pub m2: Option<Array2<C64>>,
    pub m2_dx: Option<Array2<C64>>,
    pub which: JostSide,
    /// Singular lines of the potential (deltas and jumps of `V_reg`).
    pub breakpoints: Vec<f64>,
    pub richardson_estimate: f64,
}

impl JostSolution {
    pub fn m1_at(&self, ix: usize, ik: usize) -> Option<C64> {
        self.m1.as_ref().map(|m| *m.at(ix, ik))
    }

    pub fn m2_at(&self, ix: usize, ik: usize) -> Option<C64> {
        self.m2.as_ref().map(|m| *m.at(ix, ik))
    }

    /// `f1 = e^{ikx} m1`, `f2 = e^{-ikx} m2` and the Wronskian `f1 f2' - f1' f2`
    /// at one grid point.
    pub fn wronskian(&self, ix: usize, ik: usize) -> Option<C64> {
        let (m1, d1) = (self.m1.as_ref()?, self.m1_dx.as_ref()?);
        let (m2, d2) = (self.m2.as_ref()?, self.m2_dx.as_ref()?);
        let k = self.k_grid[ik];
        let (a, da, b, db) = (*m1.at(ix, ik), *d1.at(ix, ik), *m2.at(ix, ik), *d2.at(ix, ik));
        // e^{ikx} e^{-ikx} cancels
        let f1p = da + I * k * a;
        let f2p = db - I * k * b;
        Some(a * f2p - f1p * b)
    }
}

struct Sweep {
    m: Vec<C64>,
    dm_right: Vec<C64>,
    dm_left: Vec<C64>,
}

/// Per-grid data for the sweep.
struct Layout {
    grid: UniformGrid,
    c: Vec<f64>,
    v_mid: Vec<f64>,
    /// First node at or right of every singularity; `m1 = 1` from there on.
    top: usize,
}

fn layout(spec: &PotentialSpec, grid: UniformGrid) -> Result<Layout> {
    let mut c = vec![0.0; grid.len];
    for d in &spec.deltas {
        if d.y < grid.start - 1e-12 {
            continue;
        }
        let i = grid
            .index_of(d.y)
            .ok_or_else(|| Error::InvalidArgument(format!("delta at {} is not a grid node", d.y)))?;
        c[i] += d.c;
    }
    for b in spec.regular.breakpoints() {
        if b > grid.start && b < grid.end() && grid.index_of(b).is_none() {
            return Err(Error::InvalidArgument(format!("breakpoint {b} of V_reg is not a grid node")));
        }
    }
    let hi = spec.extent().map(|e| e.1).unwrap_or(f64::NEG_INFINITY);
    if hi > grid.end() + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "x grid ends at {} inside the potential (extends to {hi})",
            grid.end()
        )));
    }
    let top = (0..grid.len).find(|&i| grid.point(i) >= hi - 1e-12).unwrap_or(0);
    let v_mid = (0..grid.len.saturating_sub(1))
        .map(|i| spec.regular.eval(grid.point(i) + 0.5 * grid.step))
        .collect();
    Ok(Layout { grid, c, v_mid, top })
}

/// `cos(q h)` and `sin(q h)/q` for `q^2 = q2`.
fn cs(q2: C64, h: f64) -> (C64, C64, C64) {
    let z = q2 * h * h;
    if z.norm() < 1e-4 {
        let c = 1.0 - z * (0.5 - z / 24.0);
        let s = h * (1.0 - z * (1.0 / 6.0 - z / 120.0));
        (c, s, q2 * s)
    } else {
        let q = q2.sqrt();
        let (c, s) = ((q * h).cos(), (q * h).sin());
        (c, s / q, q * s)
    }
}

fn sweep(lay: &Layout, k: f64) -> Sweep {
    let g = &lay.grid;
    let n = g.len;
    let one = C64::new(1.0, 0.0);
    let mut m = vec![one; n];
    let mut dm_right = vec![C64::new(0.0, 0.0); n];
    let mut dm_left = vec![C64::new(0.0, 0.0); n];
    for i in lay.top..n {
        dm_left[i] = -lay.c[i] * one;
    }
    let ik = I * k;
    let k2 = C64::new(k * k, 0.0);
    let mut f = C64::from_polar(1.0, k * g.point(lay.top));
    let mut fp = ik * f;
    let free = cs(k2, g.step);
    for i in (0..lay.top).rev() {
        let fl = fp - lay.c[i + 1] * f;
        let v = lay.v_mid[i];
        let (c, s, qs) = if v == 0.0 { free } else { cs(k2 - v, g.step) };
        let nf = c * f - s * fl;
        fp = qs * f + c * fl;
        f = nf;
        let e = C64::from_polar(1.0, -k * g.point(i));
        m[i] = e * f;
        dm_right[i] = e * fp - ik * m[i];
        dm_left[i] = dm_right[i] - lay.c[i] * m[i];
    }
    Sweep { m, dm_right, dm_left }
}

/// Backward sweep on `x_grid` for each `k`, Richardson-extrapolated.
fn sweep_all(
    spec: &PotentialSpec,
    k_grid: &[f64],
    x_grid: &UniformGrid,
    opts: JostOptions,
) -> Result<(Array2<C64>, Array2<C64>, Array2<C64>, f64)> {
    let r = opts.refine.max(1);
    let coarse = layout(spec, x_grid.refined(r))?;
    let fine = if spec.regular.is_zero() { None } else { Some(layout(spec, x_grid.refined(2 * r))?) };
    let nx = x_grid.len;
    let nk = k_grid.len();
    let zero = C64::new(0.0, 0.0);
    let mut m = Array2::filled(nx, nk, zero);
    let mut dr = Array2::filled(nx, nk, zero);
    let mut dl = Array2::filled(nx, nk, zero);
    let mut est: f64 = 0.0;
    for (j, &k) in k_grid.iter().enumerate() {
        let a = sweep(&coarse, k);
        let b = fine.as_ref().map(|l| sweep(l, k));
        for i in 0..nx {
            let (v, vr, vl) = match &b {
                None => (a.m[r * i], a.dm_right[r * i], a.dm_left[r * i]),
                Some(b) => {
                    let ii = 2 * r * i;
                    est = est.max((b.m[ii] - a.m[r * i]).norm() / 3.0);
                    (
                        (4.0 * b.m[ii] - a.m[r * i]) / 3.0,
                        (4.0 * b.dm_right[ii] - a.dm_right[r * i]) / 3.0,
                        (4.0 * b.dm_left[ii] - a.dm_left[r * i]) / 3.0,
                    )
                }
            };
            *m.at_mut(i, j) = v;
            *dr.at_mut(i, j) = vr;
            *dl.at_mut(i, j) = vl;
        }
    }
    if est > opts.richardson_tol {
        return Err(Error::GridTooCoarse(format!(
            "Richardson estimate {est:.2e} exceeds {:.2e}",
            opts.richardson_tol
        )));
    }
    Ok((m, dr, dl, est))
}

pub fn solve_m1(spec: &PotentialSpec, k_grid: &[f64], x_grid: &UniformGrid) -> Result<JostSolution> {
    solve_m1_with(spec, k_grid, x_grid, JostOptions::default())
}

pub fn solve_m1_with(
    spec: &PotentialSpec,
    k_grid: &[f64],
    x_grid: &UniformGrid,
    opts: JostOptions,
) -> Result<JostSolution> {
    let (m, dr, _, est) = sweep_all(spec, k_grid, x_grid, opts)?;
    Ok(JostSolution {
        x_grid: *x_grid,
        k_grid: k_grid.to_vec(),
        m1: Some(m),
        m1_dx: Some(dr),
        m2: None,
        m2_dx: None,
        which: JostSide::M1,
        breakpoints: spec.breakpoints(),
        richardson_estimate: est,
    })
}

pub fn solve_m2(spec: &PotentialSpec, k_grid: &[f64], x_grid: &UniformGrid) -> Result<JostSolution> {
    solve_m2_with(spec, k_grid, x_grid, JostOptions::default())
}

/// `m2(x) = m1[V(-.)](-x)`: forward sweep as the mirror of the backward one.
pub fn solve_m2_with(
    spec: &PotentialSpec,
    k_grid: &[f64],
    x_grid: &UniformGrid,
    opts: JostOptions,
) -> Result<JostSolution> {
    let mirror = UniformGrid::new(-x_grid.end(), x_grid.step, x_grid.len);
    let (m, _, dl, est) = sweep_all(&spec.reflected(), k_grid, &mirror, opts)?;
    let nx = x_grid.len;
    let nk = k_grid.len();
    let zero = C64::new(0.0, 0.0);
    let mut m2 = Array2::filled(nx, nk, zero);
    let mut d2 = Array2::filled(nx, nk, zero);
    for i in 0..nx {
        for j in 0..nk {
            *m2.at_mut(i, j) = *m.at(nx - 1 - i, j);
            // right derivative at x is minus the left derivative of the mirror at -x
            *d2.at_mut(i, j) = -*dl.at(nx - 1 - i, j);
        }
    }
    Ok(JostSolution {
        x_grid: *x_grid,
        k_grid: k_grid.to_vec(),
        m1: None,
        m1_dx: None,
        m2: Some(m2),
        m2_dx: Some(d2),
        which: JostSide::M2,
        breakpoints: spec.breakpoints(),
        richardson_estimate: est,
    })
}

pub fn solve_both(spec: &PotentialSpec, k_grid: &[f64], x_grid: &UniformGrid) -> Result<JostSolution> {
    let a = solve_m1(spec, k_grid, x_grid)?;
    let b = solve_m2(spec, k_grid, x_grid)?;
    Ok(JostSolution {
        m2: b.m2,
        m2_dx: b.m2_dx,
        which: JostSide::Both,
        richardson_estimate: a.richardson_estimate.max(b.richardson_estimate),
        ..a
    })
}

/// Cross-check: Picard iteration of the trapezoid-discretized Volterra equation.
/// Returns `m1` on `grid` and the iteration count.
pub fn fixed_point_m1(spec: &PotentialSpec, k: f64, grid: &UniformGrid) -> Result<(Vec<C64>, usize)> {
    const CAP: usize = 200;
    let lay = layout(spec, *grid)?;
    let n = grid.len;
    let h = grid.step;
    let kc = C64::new(k, 0.0);
    let vr: Vec<f64> = (0..n).map(|i| spec.regular.eval_side(grid.point(i), Side::Right)).collect();
    let vl: Vec<f64> = (0..n).map(|i| spec.regular.eval_side(grid.point(i), Side::Left)).collect();
    let d: Vec<C64> = (0..n).map(|i| dk_kernel(kc, i as f64 * h)).collect();
    let mut m = vec![C64::new(1.0, 0.0); n];
    for it in 1..=CAP {
        let mut next = vec![C64::new(1.0, 0.0); n];
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for j in i..n.saturating_sub(1) {
                acc += 0.5 * h * (d[j - i] * vr[j] * m[j] + d[j + 1 - i] * vl[j + 1] * m[j + 1]);
            }
            for j in i + 1..n {
                if lay.c[j] != 0.0 {
                    acc += d[j - i] * lay.c[j] * m[j];
                }
            }
            next[i] += acc;
        }
        let diff = next.iter().zip(&m).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        m = next;
        if diff < 1e-10 {
            return Ok((m, it));
        }
    }
    Err(Error::NoConvergence(CAP))
}

/// Uniform symmetric k grid `(j - N/2) dk`, `j = 0..N`, as required by [`b1_from_m1`].
pub fn fft_k_grid(n: usize, dk: f64) -> Vec<f64> {
    (0..n).map(|j| (j as f64 - (n / 2) as f64) * dk).collect()
}

const TEMPLATE_RATE: f64 = 10.0;

/// One fitted singularity of `B1(x, .)` at `y = s`: jumps of the value, the
/// slope and the second derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singularity {
    pub s: f64,
    pub jump: f64,
    pub kink: f64,
    pub curv: f64,
}

impl Singularity {
    fn value(&self, y: f64) -> f64 {
        let t = y - self.s;
        if t < 0.0 {
            return 0.0;
        }
        let e = (-TEMPLATE_RATE * t).exp();
        let j = self.jump * (1.0 + TEMPLATE_RATE * t) * e;
        let j = if t == 0.0 && self.s > 0.0 { 0.5 * j } else { j };
        j + (self.kink * t + 0.5 * self.curv * t * t) * e
    }

    fn transform(&self, k: f64) -> C64 {
        let z = TEMPLATE_RATE - 2.0 * I * k;
        let ph = C64::from_polar(1.0, 2.0 * k * self.s);
        let z2 = z * z;
        ph * (self.jump * (1.0 / z + TEMPLATE_RATE / z2) + self.kink / z2 + self.curv / (z2 * z))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct B1Kernel {
    pub x_grid: UniformGrid,
    pub y_grid: UniformGrid,
    /// `B1(x_i, y_j)`, real part.
    pub values: Array2<f64>,
    /// `d/dx B1` by fourth-order differences; NaN where the stencil meets a singular line.
    pub dx_values: Array2<f64>,
    /// Largest imaginary part seen before taking the real part.
    pub imag_max: f64,
    /// Smooth remainder on the fine transform grid `l * dy_fine`, `l = 0..=N/2`.
    pub remainder: Array2<f64>,
    pub dy_fine: f64,
    pub singular: Vec<Vec<Singularity>>,
    pub aliasing_warning: bool,
}

impl B1Kernel {
    /// `1 + int_0^inf B1(x_i, y) e^{2iky} dy` from the stored representation.
    pub fn resynthesize(&self, ix: usize, k: f64) -> C64 {
        let mut acc: C64 = self.singular[ix].iter().map(|s| s.transform(k)).sum();
        let row = self.remainder.row(ix);
        let step = C64::from_polar(1.0, 2.0 * k * self.dy_fine);
        let mut ph = C64::new(1.0, 0.0);
        let mut sum = C64::new(0.0, 0.0);
        for (l, &r) in row.iter().enumerate() {
            let w = if l == 0 { 0.5 } else { 1.0 };
            sum += w * r * ph;
            ph *= step;
        }
        acc += sum * self.dy_fine;
        1.0 + acc
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        *self.values.at(ix, iy)
    }
}

/// Inverse transform of `m1 - 1` in `2k`. The jumps and kinks of `B1(x, .)` at
/// `y = 0` and `y = p - x` (for singular points `p > x`) are fitted on the
/// high-k tail and removed before the FFT, then added back in y-space.
pub fn b1_from_m1(jost: &JostSolution) -> Result<B1Kernel> {
    b1_from_m1_on(jost, jost.x_grid.step)
}

/// As [`b1_from_m1`], sampling the output in `y` with step `y_step`
/// (a multiple of the transform step `pi / (2 k_max)`).
pub fn b1_from_m1_on(jost: &JostSolution, y_step: f64) -> Result<B1Kernel> {
    let m1 = jost
        .m1
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("b1_from_m1 needs m1".into()))?;
    let n = jost.k_grid.len();
    if n < 16 || n % 2 != 0 {
        return Err(Error::InvalidArgument("k grid must have an even number >= 16 of nodes".into()));
    }
    let dk = (jost.k_grid[n - 1] - jost.k_grid[0]) / (n - 1) as f64;
    let expect = fft_k_grid(n, dk);
    if expect.iter().zip(&jost.k_grid).any(|(a, b)| (a - b).abs() > 1e-9 * dk.max(1.0)) {
        return Err(Error::InvalidArgument("k grid must be (j - N/2) dk".into()));
    }
    let k_max = (n / 2) as f64 * dk;
    let dy = PI / (n as f64 * dk);
    let stride = (y_step / dy).round() as usize;
    if stride == 0 || ((stride as f64) * dy - y_step).abs() > 1e-9 * y_step {
        return Err(Error::InvalidArgument(format!("y step {y_step} is not a multiple of {dy}")));
    }
    let n_half = n / 2;
    let ny = n_half / stride + 1;
    let nx = jost.x_grid.len;
    let mut plan = FftPlanner::<f64>::new();
    let fft = plan.plan_fft_forward(n);
    let mut values = Array2::filled(nx, ny, 0.0);
    let mut remainder = Array2::filled(nx, n_half + 1, 0.0);
    let mut singular = Vec::with_capacity(nx);
    let mut imag_max: f64 = 0.0;
    let mut aliasing = false;
    let pos: Vec<usize> = (0..n).filter(|&j| jost.k_grid[j] >= 0.25 * k_max).collect();
    for ix in 0..nx {
        let x = jost.x_grid.point(ix);
        let row = m1.row(ix);
        if (row[0] - 1.0).norm() > 1e-4 {
            aliasing = true;
        }
        let sing = fit_singularities(x, &jost.breakpoints, &jost.k_grid, row, &pos, k_max)?;
        let mut buf: Vec<C64> = (0..n)
            .map(|j| {
                let k = jost.k_grid[j];
                row[j] - 1.0 - sing.iter().map(|s| s.transform(k)).sum::<C64>()
            })
            .collect();
        // symmetric truncation: the k = -K node stands for both ends
        buf[0] = C64::new(buf[0].re, 0.0);
        fft.process(&mut buf);
        let scale = dk / PI;
        for l in 0..=n_half {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            let v = buf[l] * scale * sign;
            imag_max = imag_max.max(v.im.abs());
            *remainder.at_mut(ix, l) = v.re;
        }
        for iy in 0..ny {
            let l = iy * stride;
            let y = l as f64 * dy;
            *values.at_mut(ix, iy) = *remainder.at(ix, l) + sing.iter().map(|s| s.value(y)).sum::<f64>();
        }
        singular.push(sing);
    }
    if aliasing {
        log::warn!("|m1 - 1| exceeds 1e-4 at k_max = {k_max}: B1 bandwidth may be insufficient");
    }
    let y_grid = UniformGrid::new(0.0, y_step, ny);
    let dx_values = dx_kernel(&values, &jost.x_grid, &y_grid, &jost.breakpoints);
    Ok(B1Kernel {
        x_grid: jost.x_grid,
        y_grid,
        values,
        dx_values,
        imag_max,
        remainder,
        dy_fine: dy,
        singular,
        aliasing_warning: aliasing,
    })
}

fn fit_singularities(
    x: f64,
    breakpoints: &[f64],
    k_grid: &[f64],
    row: &[C64],
    pos: &[usize],
    k_max: f64,
) -> Result<Vec<Singularity>> {
    let merge = 4.0 * PI / k_max;
    let mut locs = vec![0.0];
    for &p in breakpoints {
        let s = p - x;
        if s > 0.0 && locs.iter().all(|&t: &f64| (t - s).abs() >= merge) {
            locs.push(s);
        }
    }
    const P: usize = 3;
    let nu = P * locs.len();
    let mut a = DMatrix::<f64>::zeros(2 * pos.len(), nu);
    let mut b = DVector::<f64>::zeros(2 * pos.len());
    let unit = |s: f64, c: usize| {
        let mut u = Singularity { s, jump: 0.0, kink: 0.0, curv: 0.0 };
        *[&mut u.jump, &mut u.kink, &mut u.curv][c] = 1.0;
        u
    };
    for (r, &j) in pos.iter().enumerate() {
        let k = k_grid[j];
        for (c, &s) in locs.iter().enumerate() {
            for q in 0..P {
                let t = unit(s, q).transform(k);
                a[(2 * r, P * c + q)] = t.re;
                a[(2 * r + 1, P * c + q)] = t.im;
            }
        }
        let f = row[j] - 1.0;
        b[2 * r] = f.re;
        b[2 * r + 1] = f.im;
    }
    // column scaling keeps the templates comparable
    let scales: Vec<f64> = (0..nu).map(|c| a.column(c).norm().max(1e-300)).collect();
    for (c, s) in scales.iter().enumerate() {
        a.column_mut(c).scale_mut(1.0 / s);
    }
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::InvalidArgument(format!("singularity fit failed: {e}")))?;
    let coef = |i: usize| sol[i] / scales[i];
    Ok(locs
        .iter()
        .enumerate()
        .map(|(c, &s)| Singularity { s, jump: coef(P * c), kink: coef(P * c + 1), curv: coef(P * c + 2) })
        .collect())
}

fn dx_kernel(values: &Array2<f64>, xg: &UniformGrid, yg: &UniformGrid, breaks: &[f64]) -> Array2<f64> {
    let (nx, ny) = (values.rows, values.cols);
    let mut out = Array2::filled(nx, ny, f64::NAN);
    let h = xg.step;
    let eps = 1e-9 * h;
    for iy in 0..ny {
        let y = yg.point(iy);
        let col: Vec<f64> = (0..nx).map(|ix| *values.at(ix, iy)).collect();
        for ix in 2..nx.saturating_sub(2) {
            let x = xg.point(ix);
            let (lo, hi) = (x - 2.0 * h, x + 2.0 * h);
            let crosses = breaks
                .iter()
                .any(|&p| (lo + y - eps <= p && p <= hi + y + eps) || (lo - eps <= p && p <= hi + eps));
            if !crosses {
                *out.at_mut(ix, iy) = d4(&col, ix, h);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnSeries {
    pub x_grid: UniformGrid,
    pub y_grid: UniformGrid,
    /// `K_0 .. K_{n_max}` on the requested grid.
    pub terms: Vec<Array2<f64>>,
    /// Partial sums `sum_{m <= n} K_m`.
    pub partial: Vec<Array2<f64>>,
    /// `||K_{n_max}||_inf`.
    pub tail: f64,
}

/// `K_n` terms by nested trapezoid quadrature on the grid step; Richardson
/// between `h` and `h/2` when `richardson`. Deltas enter with weight 1/2 on
/// the line `t + z = y_j`; the `z = 0` column of the inner integral uses right
/// limits in `z`.
pub fn kn_series(
    spec: &PotentialSpec,
    x_grid: &UniformGrid,
    y_grid: &UniformGrid,
    n_max: usize,
) -> Result<KnSeries> {
    kn_series_with(spec, x_grid, y_grid, n_max, !spec.regular.is_zero())
}

pub fn kn_series_with(
    spec: &PotentialSpec,
    x_grid: &UniformGrid,
    y_grid: &UniformGrid,
    n_max: usize,
    richardson: bool,
) -> Result<KnSeries> {
    if (x_grid.step - y_grid.step).abs() > 1e-12 * x_grid.step || y_grid.start != 0.0 {
        return Err(Error::InvalidArgument("x and y grids must share the step and y must start at 0".into()));
    }
    if spec.regular.support().is_none() && !spec.regular.is_zero() {
        return Err(Error::Unsupported("K_n series needs compactly supported V_reg".into()));
    }
    let coarse = kn_raw(spec, x_grid, y_grid, n_max, 1)?;
    let terms = if richardson {
        let fine = kn_raw(spec, x_grid, y_grid, n_max, 2)?;
        coarse
            .iter()
            .zip(&fine)
            .map(|(c, f)| {
                let mut o = c.clone();
                for (v, (a, b)) in o.data.iter_mut().zip(c.data.iter().zip(&f.data)) {
                    *v = (4.0 * b - a) / 3.0;
                }
                o
            })
            .collect()
    } else {
        coarse
    };
    let mut partial: Vec<Array2<f64>> = Vec::with_capacity(terms.len());
    for t in &terms {
        let mut s = t.clone();
        if let Some(prev) = partial.last() {
            for (a, b) in s.data.iter_mut().zip(&prev.data) {
                *a += b;
            }
        }
        partial.push(s);
    }
    let tail = terms.last().map_or(0.0, |t| t.data.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    Ok(KnSeries { x_grid: *x_grid, y_grid: *y_grid, terms, partial, tail })
}

/// Terms on the requested grid computed with step `h / r`.
fn kn_raw(
    spec: &PotentialSpec,
    x_grid: &UniformGrid,
    y_grid: &UniformGrid,
    n_max: usize,
    r: usize,
) -> Result<Vec<Array2<f64>>> {
    let h = x_grid.step / r as f64;
    let right = spec.extent().map_or(x_grid.end(), |e| e.1).max(x_grid.end());
    let nt = ((right - x_grid.start) / h).ceil() as usize + 1;
    let nz = (y_grid.len - 1) * r + 1;
    let tg = UniformGrid::new(x_grid.start, h, nt);
    // s = t + z runs over the extended grid
    let ns = nt + nz;
    let sg = UniformGrid::new(x_grid.start, h, ns);
    let mut dmass = vec![0.0; ns];
    for d in &spec.deltas {
        if d.y >= sg.start - 1e-12 {
            let i = sg.index_of(d.y).ok_or_else(|| {
                Error::InvalidArgument(format!("delta at {} is not a node of the K_n grid", d.y))
            })?;
            dmass[i] += d.c;
        }
    }
    // int_s^inf V_reg on sg nodes
    let mut reg_tail = vec![0.0; ns];
    for i in (0..ns - 1).rev() {
        let a = sg.point(i);
        reg_tail[i] = reg_tail[i + 1] + segment_integral(spec, a, a + h);
    }
    let k0 = |i: usize, right_limit: bool| -> f64 {
        let mut v = reg_tail[i];
        v += dmass[i + 1..].iter().sum::<f64>();
        if !right_limit {
            v += 0.5 * dmass[i];
        }
        v
    };
    let vr: Vec<f64> = (0..nt).map(|i| spec.regular.eval_side(tg.point(i), Side::Right)).collect();
    let vl: Vec<f64> = (0..nt).map(|i| spec.regular.eval_side(tg.point(i), Side::Left)).collect();
    // K on (t, z) for t in tg, z = j h
    let mut k = Array2::filled(nt, nz, 0.0);
    for it in 0..nt {
        for iz in 0..nz {
            *k.at_mut(it, iz) = k0(it + iz, false);
        }
    }
    let mut out = vec![sample(&k, x_grid, y_grid, r)];
    for n in 0..n_max {
        // I(s, z) = int_s^inf V(t) K(t, z) dt on tg x z
        let mut inner = Array2::filled(nt, nz, 0.0);
        // the half-weighted delta mass sitting exactly at the lower limit
        let mut on_limit = Array2::filled(nt, nz, 0.0);
        for iz in 0..nz {
            let kv = |it: usize| -> f64 {
                if iz == 0 && n == 0 {
                    k0(it, true)
                } else {
                    *k.at(it, iz)
                }
            };
            // deltas strictly above the lower limit count fully, one on it by half
            let mut acc = 0.0;
            *inner.at_mut(nt - 1, iz) = 0.5 * dmass[nt - 1] * kv(nt - 1);
            for it in (0..nt - 1).rev() {
                acc += 0.5 * h * (vr[it] * kv(it) + vl[it + 1] * kv(it + 1));
                acc += dmass[it + 1] * kv(it + 1);
                *inner.at_mut(it, iz) = acc + 0.5 * dmass[it] * kv(it);
            }
            for it in 0..nt {
                *on_limit.at_mut(it, iz) = 0.5 * dmass[it] * kv(it);
            }
        }
        // K_{n+1}(x, y) = int_0^y I(x + y - z, z) dz
        let mut next = Array2::filled(nt, nz, 0.0);
        for it in 0..nt {
            for iy in 1..nz {
                let mut s = 0.0;
                for iz in 0..=iy {
                    let is = it + iy - iz;
                    // z -> 0+ sees s from below and z -> y- from above
                    let v = if is >= nt {
                        0.0
                    } else if iz == 0 {
                        inner.at(is, iz) + on_limit.at(is, iz)
                    } else if iz == iy {
                        inner.at(is, iz) - on_limit.at(is, iz)
                    } else {
                        *inner.at(is, iz)
                    };
                    let w = if iz == 0 || iz == iy { 0.5 } else { 1.0 };
                    s += w * v;
                }
                *next.at_mut(it, iy) = s * h;
            }
        }
        k = next;
        out.push(sample(&k, x_grid, y_grid, r));
    }
    Ok(out)
}

fn segment_integral(spec: &PotentialSpec, a: f64, b: f64) -> f64 {
    // Gauss-Legendre 5 on a segment that never straddles a breakpoint
    const X: [f64; 5] = [0.0, -0.538_469_310_105_683, 0.538_469_310_105_683, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const W: [f64; 5] = [
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
        0.236_926_885_056_189,
    ];
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    X.iter().zip(W).map(|(x, w)| w * spec.regular.eval(c + r * x)).sum::<f64>() * r
}

fn sample(k: &Array2<f64>, xg: &UniformGrid, yg: &UniformGrid, r: usize) -> Array2<f64> {
    let mut o = Array2::filled(xg.len, yg.len, 0.0);
    for i in 0..xg.len {
        for j in 0..yg.len {
            *o.at_mut(i, j) = *k.at(i * r, j * r);
        }
    }
    o
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelBoundReport {
    /// `sup |B1| / (e^{gamma_1(x)} tail(x+y))`; `None` if no admissible point.
    pub c_b1: Option<f64>,
    /// `sup |d_x B1| / (e^{gamma_1(x)} (|V(x+y)| + tail(x+y)))`.
    pub c_dx: Option<f64>,
    pub points: usize,
}

/// Empirical constants of the pointwise kernel bounds. For pure delta
/// potentials grid points on the lines `x + y = y_j` are skipped.
pub fn verify_kernel_bounds(spec: &PotentialSpec, b1: &B1Kernel) -> Result<KernelBoundReport> {
    let xg = &b1.x_grid;
    let yg = &b1.y_grid;
    let breaks = spec.breakpoints();
    let g1: Vec<f64> = (0..xg.len).map(|i| crate::potential::gamma1(spec, xg.point(i))).collect::<Result<_>>()?;
    // tails on the lattice x + y
    let mut c_b1: Option<f64> = None;
    let mut c_dx: Option<f64> = None;
    let mut points = 0;
    let mut cache = std::collections::HashMap::new();
    for ix in 0..xg.len {
        let x = xg.point(ix);
        for iy in 0..yg.len {
            let s = x + yg.point(iy);
            let on_line = breaks.iter().any(|&p| (p - s).abs() < 1e-9 * xg.step);
            if spec.is_pure_delta() && on_line {
                continue;
            }
            let key = ((s - xg.start) / xg.step * 64.0).round() as i64;
            let tail = match cache.get(&key) {
                Some(&t) => t,
                None => {
                    let t = spec.tail(s)?;
                    cache.insert(key, t);
                    t
                }
            };
            let w = g1[ix].exp();
            let den = w * tail;
            if den > 1e-14 {
                points += 1;
                let r = b1.value(ix, iy).abs() / den;
                c_b1 = Some(c_b1.map_or(r, |c: f64| c.max(r)));
                let d = *b1.dx_values.at(ix, iy);
                if d.is_finite() {
                    let den2 = w * (spec.regular.eval(s).abs() + tail);
                    let r2 = d.abs() / den2;
                    c_dx = Some(c_dx.map_or(r2, |c: f64| c.max(r2)));
                }
            }
        }
    }
    Ok(KernelBoundReport { c_b1, c_dx, points })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MBoundReport {
    pub a: f64,
    /// Sup of `max(|m1-1|, |d_k m1|, |d_x m1|) (1+|k|) / int_x^inf |V_reg|(1+|t|)` over `x >= a`.
    pub far_m1: Option<f64>,
    /// Same for `m2` on `x <= -a`.
    pub far_m2: Option<f64>,
    /// Points in the far region where the majorant vanishes but `m - 1` does not.
    pub far_violations: usize,
    /// Sup of `|m_j|` on `|x| <= a`.
    pub compact_m: f64,
    /// Sup of `|d_x m_j|` on `|x| <= a`.
    pub compact_dx: f64,
    /// Sup of `|d_k m_j|` on `|x| <= a`.
    pub compact_dk: f64,
}

fn dk_column(m: &Array2<C64>, ix: usize, k: &[f64], j: usize) -> Option<C64> {
    let n = k.len();
    if j < 2 || j + 2 >= n {
        return None;
    }
    let h = k[j + 1] - k[j];
    let row = m.row(ix);
    Some(d4(row, j, h))
}

/// Empirical constants for the Jost bounds. Requires a uniform `k_grid`.
pub fn verify_m_bounds(spec: &PotentialSpec, jost: &JostSolution, a: f64) -> Result<MBoundReport> {
    let xg = &jost.x_grid;
    let k = &jost.k_grid;
    if k.len() >= 3 {
        let h = k[1] - k[0];
        if k.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0)) {
            return Err(Error::InvalidArgument("verify_m_bounds needs a uniform k grid".into()));
        }
    }
    let mut rep = MBoundReport {
        a,
        far_m1: None,
        far_m2: None,
        far_violations: 0,
        compact_m: 0.0,
        compact_dx: 0.0,
        compact_dk: 0.0,
    };
    let sides: [(Option<&Array2<C64>>, Option<&Array2<C64>>, bool); 2] = [
        (jost.m1.as_ref(), jost.m1_dx.as_ref(), true),
        (jost.m2.as_ref(), jost.m2_dx.as_ref(), false),
    ];
    for (m, dm, right) in sides {
        let (Some(m), Some(dm)) = (m, dm) else { continue };
        let mut far: Option<f64> = None;
        for ix in 0..xg.len {
            let x = xg.point(ix);
            let in_far = if right { x >= a } else { x <= -a };
            let tail = if !in_far {
                0.0
            } else if right {
                spec.weighted_tail_right(x)?
            } else {
                spec.weighted_tail_left(x)?
            };
            // at a delta on the left edge of the m2 far region the stored right
            // derivative belongs to the interior; use the left one
            let jump = if right { None } else { spec.deltas.iter().find(|d| (d.y - x).abs() < 1e-9 * xg.step).map(|d| d.c) };
            for j in 0..k.len() {
                let v = *m.at(ix, j);
                let d = *dm.at(ix, j);
                let d_far = if in_far { jump.map_or(d, |c| d - c * v) } else { d };
                let dkv = dk_column(m, ix, k, j);
                if x.abs() <= a {
                    rep.compact_m = rep.compact_m.max(v.norm());
                    rep.compact_dx = rep.compact_dx.max(d.norm());
                    if let Some(t) = dkv {
                        rep.compact_dk = rep.compact_dk.max(t.norm());
                    }
                }
                if in_far {
                    let q = (v - 1.0).norm().max(d_far.norm()).max(dkv.map_or(0.0, |t| t.norm()));
                    let maj = tail / (1.0 + k[j].abs());
                    if maj > 1e-14 {
                        let r = q / maj;
                        far = Some(far.map_or(r, |c: f64| c.max(r)));
                    } else if q > 1e-10 {
                        rep.far_violations += 1;
                    }
                }
            }
        }
        if right {
            rep.far_m1 = far;
        } else {
            rep.far_m2 = far;
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dk_kernel_values() {
        assert_eq!(dk_kernel(C64::new(0.0, 0.0), 3.0), C64::new(3.0, 0.0));
        assert!(dk_kernel(C64::new(1.0, 0.0), PI).norm() < 1e-15);
        let k = C64::new(2e-5, 0.0);
        let exact = ((2.0 * I * k * 1.5).exp() - 1.0) / (2.0 * I * k);
        assert!((dk_kernel(k, 1.5) - exact).norm() < 1e-10);
    }

    #[test]
    fn single_delta_m1_is_one_right_of_delta() {
        let spec = PotentialSpec::single_delta(1.0, 0.0);
        let g = UniformGrid::span(-2.0, 2.0, 0.25).unwrap();
        let j = solve_m1(&spec, &[0.5, 3.0], &g).unwrap();
        for i in 8..g.len {
            assert_eq!(j.m1_at(i, 0).unwrap(), C64::new(1.0, 0.0));
        }
    }
}
