//! Transfer matrices, scattering coefficients and bound states.
//!
//! Amplitudes `(A, B)` describe `A e^{ikx} + B e^{-ikx}`; the total matrix maps
//! the far-left pair to the far-right pair. `T = 1/M22`. `R2 = -M21/M22` is the
//! reflection seen by a wave incident from the left (the `B_0` of `e_+`) and
//! `R1 = M12/M22` the reflection for incidence from the right (`e_-`).

use crate::grid::d4_fn;
use crate::ode::{self, Mat2};
use crate::potential::PotentialSpec;
use crate::{Error, Result, C64, I};

/// Jump matrix of one delta `c` at `y`, with `beta = c / (2ik)`.
pub fn delta_matrix(c: f64, y: f64, k: C64) -> Mat2 {
    let b = c / (2.0 * I * k);
    let ph = (2.0 * I * k * y).exp();
    let one = C64::new(1.0, 0.0);
    [[one + b, b / ph], [-b * ph, one - b]]
}

fn require_pure(spec: &PotentialSpec) -> Result<()> {
    if spec.is_pure_delta() {
        Ok(())
    } else {
        Err(Error::Unsupported("operation needs a pure delta potential; use mixed_scattering".into()))
    }
}

/// Free Cauchy propagator for `(u, u')` over a gap of length `h`.
fn free_cauchy(k: C64, h: f64) -> Mat2 {
    let kh = k * h;
    let sinc = if kh.norm() < 1e-6 { h * (1.0 - kh * kh / 6.0) } else { kh.sin() / k };
    let c = kh.cos();
    [[c, sinc], [-k * k * sinc, c]]
}

/// Transfer matrix of a pure delta potential, far left to far right.
///
/// The deltas are chained in Cauchy data `(u, u')` and converted to
/// amplitudes once at each end. Multiplying the amplitude jump matrices
/// directly loses accuracy for small `k`, where each factor is `O(c/k)`.
pub fn transfer_matrix_at(spec: &PotentialSpec, k: C64) -> Result<Mat2> {
    require_pure(spec)?;
    if k.norm() == 0.0 {
        return Err(Error::ZeroWavenumber);
    }
    let (Some(first), Some(last)) = (spec.deltas.first(), spec.deltas.last()) else {
        return Ok(ode::identity());
    };
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut phi = ode::identity();
    let mut at = first.y;
    for d in &spec.deltas {
        phi = ode::mat_mul(&free_cauchy(k, d.y - at), &phi);
        phi = ode::mat_mul(&[[one, zero], [C64::new(d.c, 0.0), one]], &phi);
        at = d.y;
    }
    Ok(ode::mat_mul(&ode::cauchy_to_plane(k, last.y), &ode::mat_mul(&phi, &ode::plane_to_cauchy(k, first.y))))
}

/// Transfer matrix for any potential: deltas exactly, `V_reg` by ODE integration.
pub fn general_transfer_matrix(spec: &PotentialSpec, k: C64) -> Result<Mat2> {
    if spec.is_pure_delta() {
        return transfer_matrix_at(spec, k);
    }
    if k.norm() == 0.0 {
        return Err(Error::ZeroWavenumber);
    }
    let mut m = ode::identity();
    for ev in events(spec) {
        let step = match ev {
            Event::Delta(c, y) => delta_matrix(c, y, k),
            Event::Region(a, b) => {
                let phi = ode::fundamental(&spec.regular, a, b, a, b, k)?;
                ode::mat_mul(&ode::cauchy_to_plane(k, b), &ode::mat_mul(&phi, &ode::plane_to_cauchy(k, a)))
            }
        };
        m = ode::mat_mul(&step, &m);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Event {
    Delta(f64, f64),
    Region(f64, f64),
}

/// Deltas and smooth `V_reg` pieces in left-to-right order.
pub(crate) fn events(spec: &PotentialSpec) -> Vec<Event> {
    let mut out = Vec::new();
    let mut cuts: Vec<f64> = spec.breakpoints();
    let supp = spec.regular.effective_support();
    if let Some((a, b)) = supp {
        cuts.push(a);
        cuts.push(b);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut di = 0;
    for (i, &p) in cuts.iter().enumerate() {
        while di < spec.deltas.len() && spec.deltas[di].y <= p {
            if spec.deltas[di].y == p {
                out.push(Event::Delta(spec.deltas[di].c, p));
            }
            di += 1;
        }
        if let (Some((a, b)), Some(&q)) = (supp, cuts.get(i + 1)) {
            if p >= a && q <= b && region_nonzero(spec, p, q) {
                out.push(Event::Region(p, q));
            }
        }
    }
    out
}

fn region_nonzero(spec: &PotentialSpec, a: f64, b: f64) -> bool {
    (1..8).any(|j| spec.regular.eval(a + (b - a) * j as f64 / 8.0) != 0.0)
}

/// `(T, R1, R2)` from a unit-determinant transfer matrix.
pub fn coefficients(m: &Mat2) -> (C64, C64, C64) {
    let t = 1.0 / m[1][1];
    (t, m[0][1] * t, -m[1][0] * t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringData {
    pub k: Vec<f64>,
    pub t: Vec<C64>,
    pub r1: Vec<C64>,
    pub r2: Vec<C64>,
    pub bound_state_kappas: Vec<f64>,
}

impl ScatteringData {
    /// `max_k | |T|^2 + |R_j|^2 - 1 |` over both reflections.
    pub fn unitarity_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..self.k.len() {
            let t2 = self.t[i].norm_sqr();
            r = r.max((t2 + self.r1[i].norm_sqr() - 1.0).abs());
            r = r.max((t2 + self.r2[i].norm_sqr() - 1.0).abs());
        }
        r
    }
}

fn check_grid(k_grid: &[f64]) -> Result<()> {
    if k_grid.iter().any(|&k| k == 0.0) {
        return Err(Error::ZeroWavenumber);
    }
    Ok(())
}

/// Scattering data of a pure delta potential on `k_grid`.
pub fn scattering_coeffs(spec: &PotentialSpec, k_grid: &[f64]) -> Result<ScatteringData> {
    require_pure(spec)?;
    check_grid(k_grid)?;
    let mut out = ScatteringData {
        k: k_grid.to_vec(),
        t: Vec::with_capacity(k_grid.len()),
        r1: Vec::with_capacity(k_grid.len()),
        r2: Vec::with_capacity(k_grid.len()),
        bound_state_kappas: bound_states(spec)?.iter().map(|b| b.kappa).collect(),
    };
    for &k in k_grid {
        let (t, r1, r2) = coefficients(&transfer_matrix_at(spec, C64::new(k, 0.0))?);
        out.t.push(t);
        out.r1.push(r1);
        out.r2.push(r2);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedScattering {
    pub data: ScatteringData,
    /// `max_k |W[f1, f2] T / (-2ik) - 1|` with `f1`, `f2` integrated independently.
    pub wronskian_residual: f64,
}

/// Scattering data for deltas plus a regular part, via ODE integration.
pub fn mixed_scattering(spec: &PotentialSpec, k_grid: &[f64]) -> Result<MixedScattering> {
    check_grid(k_grid)?;
    let mut data = ScatteringData {
        k: k_grid.to_vec(),
        t: vec![],
        r1: vec![],
        r2: vec![],
        bound_state_kappas: if spec.is_pure_delta() {
            bound_states(spec)?.iter().map(|b| b.kappa).collect()
        } else {
            bound_state_kappas_bracketed(spec)?
        },
    };
    let mut wres: f64 = 0.0;
    let ev = events(spec);
    let (lo, hi) = spec.extent().unwrap_or((0.0, 0.0));
    let mid = 0.5 * (lo + hi);
    for &kr in k_grid {
        let k = C64::new(kr, 0.0);
        let m = general_transfer_matrix(spec, k)?;
        let (t, r1, r2) = coefficients(&m);
        data.t.push(t);
        data.r1.push(r1);
        data.r2.push(r2);
        let f1 = sweep_cauchy(spec, &ev, k, hi + 1.0, mid, (1.0, 0.0))?;
        let f2 = sweep_cauchy(spec, &ev, k, lo - 1.0, mid, (0.0, 1.0))?;
        let w = f1.0 * f2.1 - f1.1 * f2.0;
        wres = wres.max((w * t / (-2.0 * I * k) - 1.0).norm());
    }
    Ok(MixedScattering { data, wronskian_residual: wres })
}

/// Carries a plane-wave state given at `start` (amplitudes of `e^{ikx}`, `e^{-ikx}`)
/// to `end`, returning `(u, u')` there.
fn sweep_cauchy(
    spec: &PotentialSpec,
    ev: &[Event],
    k: C64,
    start: f64,
    end: f64,
    amp: (f64, f64),
) -> Result<(C64, C64)> {
    let p = ode::plane_to_cauchy(k, start);
    let mut st = ode::mat_vec(&p, (C64::new(amp.0, 0.0), C64::new(amp.1, 0.0)));
    let mut x = start;
    let free = |st: (C64, C64), from: f64, to: f64| {
        let m = ode::mat_mul(&ode::plane_to_cauchy(k, to), &ode::cauchy_to_plane(k, from));
        ode::mat_vec(&m, st)
    };
    let forward = end >= start;
    let order: Vec<Event> = if forward { ev.to_vec() } else { ev.iter().rev().copied().collect() };
    for e in order {
        match e {
            Event::Delta(c, y) => {
                let inside = if forward { y > x && y < end } else { y < x && y > end };
                if inside {
                    st = free(st, x, y);
                    let s = if forward { c } else { -c };
                    st.1 += s * st.0;
                    x = y;
                }
            }
            Event::Region(a, b) => {
                let (from, to) = if forward { (a.max(x), b.min(end)) } else { (b.min(x), a.max(end)) };
                let ok = if forward { to > from } else { to < from };
                if ok {
                    st = free(st, x, from);
                    let phi = ode::fundamental(&spec.regular, a, b, from, to, k)?;
                    st = ode::mat_vec(&phi, st);
                    x = to;
                }
            }
        }
    }
    Ok(free(st, x, end))
}

/// Paper closed forms for the double delta `-q(delta(x+L) + delta(x-L))`.
///
/// These coincide with our transfer matrix for strengths `c = -2q` at `+-L`.
pub fn double_delta_closed_form(q: f64, l: f64, k: f64) -> Result<(C64, C64)> {
    if k == 0.0 {
        return Err(Error::ZeroWavenumber);
    }
    let ik = I * k;
    let e = (2.0 * ik * l).exp();
    let den = q * q * e - (ik + q) * (ik + q) / e;
    if den.norm() == 0.0 {
        return Err(Error::Singular);
    }
    let t = k * k / den / e;
    let r = (q * (ik - q) * e + q * (ik + q) / e) / den / e;
    Ok((t, r))
}

/// Paper closed forms for the single delta: `t = ik/(ik - q)`, `r = q/(ik - q)`,
/// matching our convention with `c = 2q`.
pub fn single_delta_closed_form(q: f64, k: f64) -> Result<(C64, C64)> {
    if k == 0.0 {
        return Err(Error::ZeroWavenumber);
    }
    let ik = I * k;
    Ok((ik / (ik - q), q / (ik - q)))
}

/// The printed derivative of the double-delta transmission coefficient.
pub fn tdot_closed_form(q: f64, l: f64, k: f64) -> C64 {
    let ik = I * k;
    let e4 = (4.0 * ik * l).exp();
    let d = k * k - 2.0 * ik * q + q * q * (e4 - 1.0);
    (2.0 * k * d - 2.0 * I * k * k * (2.0 * l * q * q * e4 - (ik + q))) / (d * d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdotReport {
    /// `sup |tdot(k)| |k|` over `k in [1e2, 1e4]`.
    pub large_k_sup: f64,
    /// Per-decade maxima of `|tdot| |k|` (`[1e2,1e3]`, `[1e3,1e4]`).
    pub large_k_windows: [f64; 2],
    /// `|tdot|` at `k = 1e-3, 1e-4, 1e-5`.
    pub small_k: [f64; 3],
    /// `1 / |4 q^2 L - 2q|`.
    pub predicted_scale: f64,
    /// Max relative gap between the printed formula and finite differences.
    pub formula_vs_fd: f64,
    pub bounded_large_k: bool,
    pub finite_small_k: bool,
}

/// Numerical check of the double-delta `tdot` asymptotics.
pub fn tdot_asymptotics_check(q: f64, l: f64) -> Result<TdotReport> {
    let gap = (q * l - 0.5).abs();
    if gap < 1e-6 {
        return Err(Error::Resonant(gap));
    }
    let t = |k: f64| double_delta_closed_form(q, l, k).map(|v| v.0).unwrap_or(C64::new(f64::NAN, 0.0));
    let tdot = |k: f64| d4_fn(t, k, 1e-4 * k.abs().max(1.0));
    let mut windows = [0.0f64; 2];
    let mut fd_gap: f64 = 0.0;
    let n = 4000;
    for i in 0..=n {
        let k = 10f64.powf(2.0 + 2.0 * i as f64 / n as f64);
        let d = tdot(k);
        let v = d.norm() * k;
        let w = if k < 1e3 { 0 } else { 1 };
        windows[w] = windows[w].max(v);
        let p = tdot_closed_form(q, l, k);
        fd_gap = fd_gap.max((d - p).norm() / p.norm().max(1e-300));
    }
    let small = [1e-3, 1e-4, 1e-5].map(|k| tdot_closed_form(q, l, k).norm());
    for k in [1e-3, 1e-2, 1e-1, 1.0] {
        let p = tdot_closed_form(q, l, k);
        fd_gap = fd_gap.max((tdot(k) - p).norm() / p.norm().max(1e-300));
    }
    let large = windows[0].max(windows[1]);
    Ok(TdotReport {
        large_k_sup: large,
        large_k_windows: windows,
        small_k: small,
        predicted_scale: 1.0 / (4.0 * q * q * l - 2.0 * q).abs(),
        formula_vs_fd: fd_gap,
        bounded_large_k: large.is_finite() && windows[1] <= 1.05 * windows[0],
        finite_small_k: small.iter().all(|v| v.is_finite())
            && (small[2] - small[1]).abs() <= 0.05 * small[1].max(1e-300),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RtReport {
    pub k: Vec<f64>,
    /// `<k> max(|R1|, |R2|, |T-1|, |dR|, |dT|)` per k.
    pub scaled: Vec<f64>,
    /// Maxima over decades `[1e-2,1e-1]`, ..., `[1e2,1e3]`.
    pub decade_max: Vec<f64>,
    /// The two top decades do not grow by more than 5%.
    pub bounded: bool,
}

/// Sweeps the `C / <k>` hypothesis for `T`, `R` and their k-derivatives.
pub fn rt_assume_check(spec: &PotentialSpec, points_per_decade: usize) -> Result<RtReport> {
    let coef = |k: f64| -> (C64, C64, C64) {
        general_transfer_matrix(spec, C64::new(k, 0.0))
            .map(|m| coefficients(&m))
            .unwrap_or((C64::new(f64::NAN, 0.0), C64::new(f64::NAN, 0.0), C64::new(f64::NAN, 0.0)))
    };
    let n = 5 * points_per_decade;
    let mut ks = Vec::with_capacity(n + 1);
    let mut scaled = Vec::with_capacity(n + 1);
    let mut decade_max = vec![0.0f64; 5];
    for i in 0..=n {
        let k = 10f64.powf(-2.0 + 5.0 * i as f64 / n as f64);
        let h = 1e-4 * k.max(1.0);
        let (t, r1, r2) = coef(k);
        let dt = d4_fn(|s| coef(s).0, k, h);
        let dr1 = d4_fn(|s| coef(s).1, k, h);
        let dr2 = d4_fn(|s| coef(s).2, k, h);
        let m = [r1.norm(), r2.norm(), (t - 1.0).norm(), dt.norm(), dr1.norm(), dr2.norm()]
            .into_iter()
            .fold(0.0f64, f64::max);
        let v = (1.0 + k * k).sqrt() * m;
        let d = ((k.log10() + 2.0).floor() as usize).min(4);
        decade_max[d] = decade_max[d].max(v);
        ks.push(k);
        scaled.push(v);
    }
    let bounded = scaled.iter().all(|v| v.is_finite()) && decade_max[4] <= 1.05 * decade_max[3];
    Ok(RtReport { k: ks, scaled, decade_max, bounded })
}

/// Default wavenumber grid: 1024 log-spaced nodes on `[1e-3, 1]` and 1024
/// linear nodes on `(1, 1e3]`.
pub fn default_k_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..1024).map(|i| 10f64.powf(-3.0 + 3.0 * i as f64 / 1023.0)).collect();
    g.extend((1..=1024).map(|i| 1.0 + 999.0 * i as f64 / 1024.0));
    g
}

/// A distorted wave at one real `k`, stored as Cauchy data `(u, u')` per
/// interval. Interval `j` lies left of `locations[j]`; its anchor is `y_0` for
/// the first interval and `y_{j-1}` (right limit) otherwise.
///
/// Amplitude pairs `A e^{ikx} + B e^{-ikx}` are avoided because inside the
/// potential they grow like `1/k` and cancel for small `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWaveCoefficients {
    pub k: f64,
    pub locations: Vec<f64>,
    pub cauchy: Vec<(C64, C64)>,
}

impl PlaneWaveCoefficients {
    fn anchor(&self, j: usize) -> f64 {
        match j {
            0 => self.locations.first().copied().unwrap_or(0.0),
            _ => self.locations[j - 1],
        }
    }

    fn at(&self, j: usize, x: f64) -> (C64, C64) {
        let (u, du) = self.cauchy[j];
        let m = free_cauchy(C64::new(self.k, 0.0), x - self.anchor(j));
        (m[0][0] * u + m[0][1] * du, m[1][0] * u + m[1][1] * du)
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.at(self.locations.partition_point(|&y| y < x), x).0
    }

    /// Right derivative at delta locations.
    pub fn eval_dx(&self, x: f64) -> C64 {
        self.at(self.locations.partition_point(|&y| y <= x), x).1
    }
}

/// `e_+(x,k)` and `e_-(x,k)` for a pure delta potential, `k != 0` real. Each
/// is built from its transmitted side using only `T`.
pub fn plane_wave_coefficients(
    spec: &PotentialSpec,
    k: f64,
) -> Result<(PlaneWaveCoefficients, PlaneWaveCoefficients)> {
    let m = transfer_matrix_at(spec, C64::new(k, 0.0))?;
    let t = 1.0 / m[1][1];
    let kc = C64::new(k, 0.0);
    let ik = I * kc;
    let ys: Vec<f64> = spec.deltas.iter().map(|d| d.y).collect();
    let n = ys.len();
    let apply = |m: Mat2, v: (C64, C64)| (m[0][0] * v.0 + m[0][1] * v.1, m[1][0] * v.0 + m[1][1] * v.1);
    if n == 0 {
        let one = C64::new(1.0, 0.0);
        return Ok((
            PlaneWaveCoefficients { k, locations: ys.clone(), cauchy: vec![(one, ik)] },
            PlaneWaveCoefficients { k, locations: ys, cauchy: vec![(one, -ik)] },
        ));
    }
    // e_+ = T e^{ikx} right of everything, swept leftwards
    let mut plus = vec![(C64::new(0.0, 0.0), C64::new(0.0, 0.0)); n + 1];
    let e = (ik * ys[n - 1]).exp();
    plus[n] = (t * e, ik * t * e);
    for j in (0..n).rev() {
        let (u, du) = plus[j + 1];
        let left = (u, du - spec.deltas[j].c * u);
        plus[j] = if j == 0 { left } else { apply(free_cauchy(kc, ys[j - 1] - ys[j]), left) };
    }
    // e_- = T e^{-ikx} left of everything, swept rightwards
    let mut minus = Vec::with_capacity(n + 1);
    let e = (-ik * ys[0]).exp();
    minus.push((t * e, -ik * t * e));
    for j in 0..n {
        let here = if j == 0 { minus[0] } else { apply(free_cauchy(kc, ys[j] - ys[j - 1]), minus[j]) };
        minus.push((here.0, here.1 + spec.deltas[j].c * here.0));
    }
    Ok((
        PlaneWaveCoefficients { k, locations: ys.clone(), cauchy: plus },
        PlaneWaveCoefficients { k, locations: ys, cauchy: minus },
    ))
}

/// Normalized bound state of a pure delta potential, piecewise
/// `a_j e^{-kappa (x - o_j)} + b_j e^{kappa (x - o_j)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundState {
    pub kappa: f64,
    pub energy: f64,
    pub locations: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl BoundState {
    fn local(&self, x: f64) -> (usize, f64) {
        let j = self.locations.partition_point(|&y| y < x);
        let o = if j == 0 { self.locations[0] } else { self.locations[j - 1] };
        (j, x - o)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (j, s) = self.local(x);
        self.a[j] * (-self.kappa * s).exp() + self.b[j] * (self.kappa * s).exp()
    }

    pub fn eval_dx(&self, x: f64) -> f64 {
        let j = self.locations.partition_point(|&y| y <= x);
        let o = if j == 0 { self.locations[0] } else { self.locations[j - 1] };
        let s = x - o;
        self.kappa * (-self.a[j] * (-self.kappa * s).exp() + self.b[j] * (self.kappa * s).exp())
    }
}

struct Shot {
    a: Vec<f64>,
    b: Vec<f64>,
    zeros: usize,
}

/// Left-decaying solution at energy `-kappa^2`, with its zero count.
fn shoot(spec: &PotentialSpec, kappa: f64) -> Shot {
    let n = spec.deltas.len();
    let mut a = vec![0.0f64; n + 1];
    let mut b = vec![0.0f64; n + 1];
    b[0] = 1.0;
    let mut zeros = 0;
    for j in 0..n {
        let d = if j == 0 { 0.0 } else { spec.deltas[j].y - spec.deltas[j - 1].y };
        let em = (-kappa * d).exp();
        let ep = (kappa * d).exp();
        if j > 0 && b[j] != 0.0 && -a[j] / b[j] > 0.0 {
            let s = (-a[j] / b[j]).ln() / (2.0 * kappa);
            if s > 0.0 && s <= d {
                zeros += 1;
            }
        }
        let u = a[j] * em + b[j] * ep;
        let du = kappa * (-a[j] * em + b[j] * ep) + spec.deltas[j].c * u;
        a[j + 1] = 0.5 * (u - du / kappa);
        b[j + 1] = 0.5 * (u + du / kappa);
        // rescale to keep magnitudes moderate
        let s = a[j + 1].abs().max(b[j + 1].abs());
        if s > 1e100 {
            for v in a.iter_mut().chain(b.iter_mut()) {
                *v /= s;
            }
        }
    }
    if n > 0 && b[n] != 0.0 && -a[n] / b[n] > 0.0 && (-a[n] / b[n]).ln() > 0.0 {
        zeros += 1;
    }
    Shot { a, b, zeros }
}

/// All bound states of a pure delta potential, strongest first.
///
/// Uses the Sturm zero count of the left-decaying solution to isolate each
/// `kappa`, then bisection; this resolves exponentially close pairs.
pub fn bound_states(spec: &PotentialSpec) -> Result<Vec<BoundState>> {
    require_pure(spec)?;
    if spec.deltas.is_empty() {
        return Ok(vec![]);
    }
    let k_hi = 1.0 + spec.deltas.iter().map(|d| d.c.abs()).sum::<f64>();
    let k_lo = 1e-12;
    let total = shoot(spec, k_lo).zeros;
    let mut out = Vec::with_capacity(total);
    for j in 1..=total {
        let (mut lo, mut hi) = (k_lo, k_hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if shoot(spec, mid).zeros >= j {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let kappa = 0.5 * (lo + hi);
        out.push(normalized_state(spec, kappa));
    }
    Ok(out)
}

fn normalized_state(spec: &PotentialSpec, kappa: f64) -> BoundState {
    let sh = shoot(spec, kappa);
    let n = spec.deltas.len();
    let mut a = sh.a;
    let mut b = sh.b;
    b[n] = 0.0;
    let two_k = 2.0 * kappa;
    let mut norm = b[0] * b[0] / two_k;
    for j in 1..n {
        let d = spec.deltas[j].y - spec.deltas[j - 1].y;
        norm += a[j] * a[j] * (1.0 - (-two_k * d).exp()) / two_k
            + b[j] * b[j] * ((two_k * d).exp() - 1.0) / two_k
            + 2.0 * a[j] * b[j] * d;
    }
    norm += a[n] * a[n] / two_k;
    let s = norm.sqrt();
    for v in a.iter_mut().chain(b.iter_mut()) {
        *v /= s;
    }
    BoundState {
        kappa,
        energy: -kappa * kappa,
        locations: spec.deltas.iter().map(|d| d.y).collect(),
        a,
        b,
    }
}

/// Bound-state `kappa`s from sign changes of `M22(i kappa)` on `(0, kmax]`,
/// 10^3 subdivisions then bisection. Works for mixed potentials.
pub fn bound_state_kappas_bracketed(spec: &PotentialSpec) -> Result<Vec<f64>> {
    if spec.is_free() {
        return Ok(vec![]);
    }
    let vmin = sample_min(spec);
    let k_hi = 1.0 + spec.deltas.iter().map(|d| d.c.abs()).sum::<f64>() + (-vmin).max(0.0).sqrt();
    let f = |kap: f64| -> Result<f64> {
        Ok(general_transfer_matrix(spec, C64::new(0.0, kap))?[1][1].re)
    };
    let n = 1000;
    let mut out = Vec::new();
    let mut prev_k = k_hi * 1e-6;
    let mut prev = f(prev_k)?;
    for i in 1..=n {
        let k = k_hi * i as f64 / n as f64;
        let v = f(k)?;
        if prev == 0.0 || prev.signum() != v.signum() {
            let (mut lo, mut hi, mut flo) = (prev_k, k, prev);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid)?;
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        prev = v;
        prev_k = k;
    }
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

fn sample_min(spec: &PotentialSpec) -> f64 {
    match spec.regular.effective_support() {
        None => 0.0,
        Some((a, b)) => (0..=2000)
            .map(|i| spec.regular.eval(a + (b - a) * i as f64 / 2000.0))
            .fold(0.0, f64::min),
    }
}
