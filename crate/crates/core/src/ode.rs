//! Adaptive Runge-Kutta propagation of `u'' = (V_reg(x) - k^2) u` across smooth pieces.

use ode_solvers::{Dop853, OutputType, SVector, System};

use crate::potential::{RegularPart, Side};
use crate::{Error, Result, C64};

pub(crate) type Mat2 = [[C64; 2]; 2];

pub(crate) const RTOL: f64 = 1e-12;
pub(crate) const ATOL: f64 = 1e-13;

/// Two complex solutions at once, in the variable `s` measured from the start point.
struct Pair<'a> {
    reg: &'a RegularPart,
    origin: f64,
    dir: f64,
    lo: f64,
    hi: f64,
    k2: C64,
}

impl Pair<'_> {
    fn v(&self, s: f64) -> f64 {
        let x = (self.origin + self.dir * s).clamp(self.lo, self.hi);
        if x <= self.lo {
            self.reg.eval_side(self.lo, Side::Right)
        } else if x >= self.hi {
            self.reg.eval_side(self.hi, Side::Left)
        } else {
            self.reg.eval(x)
        }
    }
}

impl System<f64, SVector<f64, 8>> for Pair<'_> {
    fn system(&self, s: f64, y: &SVector<f64, 8>, dy: &mut SVector<f64, 8>) {
        let q = C64::new(self.v(s), 0.0) - self.k2;
        for b in [0, 4] {
            let u = C64::new(y[b], y[b + 1]);
            let w = q * u;
            dy[b] = y[b + 2];
            dy[b + 1] = y[b + 3];
            dy[b + 2] = w.re;
            dy[b + 3] = w.im;
        }
    }
}

/// Fundamental matrix in the `(u, u')` basis from `from` to `to`, for
/// `V_reg` restricted to the smooth piece `[lo, hi]`.
pub(crate) fn fundamental(reg: &RegularPart, lo: f64, hi: f64, from: f64, to: f64, k: C64) -> Result<Mat2> {
    let len = (to - from).abs();
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    if len == 0.0 {
        return Ok([[one, zero], [zero, one]]);
    }
    let dir = if to >= from { 1.0 } else { -1.0 };
    let sys = Pair { reg, origin: from, dir, lo, hi, k2: k * k };
    // columns start as (u, du/dx) = (1, 0) and (0, 1); du/ds = dir * du/dx
    let y0 = SVector::<f64, 8>::from_column_slice(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, dir, 0.0]);
    let h_max = len.min(0.5 / (1.0 + k.norm()));
    let mut solver = Dop853::from_param(
        sys, 0.0, len, len, y0, RTOL, ATOL, 0.9, 0.0, 0.333, 6.0, h_max, 0.0, 1_000_000, 1000,
        OutputType::Sparse,
    );
    solver.integrate().map_err(|e| Error::Ode(e.to_string()))?;
    let y = solver.y_out().last().ok_or_else(|| Error::Ode("no output".into()))?;
    let u_a = C64::new(y[0], y[1]);
    let du_a = C64::new(y[2], y[3]) * dir;
    let u_b = C64::new(y[4], y[5]);
    let du_b = C64::new(y[6], y[7]) * dir;
    Ok([[u_a, u_b], [du_a, du_b]])
}

pub(crate) fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub(crate) fn mat_vec(a: &Mat2, v: (C64, C64)) -> (C64, C64) {
    (a[0][0] * v.0 + a[0][1] * v.1, a[1][0] * v.0 + a[1][1] * v.1)
}

#[cfg(test)]
pub(crate) fn det(a: &Mat2) -> C64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub(crate) fn identity() -> Mat2 {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    [[one, zero], [zero, one]]
}

/// Maps plane-wave amplitudes `(A, B)` of `A e^{ikx} + B e^{-ikx}` to `(u, u')` at `x`.
pub(crate) fn plane_to_cauchy(k: C64, x: f64) -> Mat2 {
    let ik = crate::I * k;
    let e = (ik * x).exp();
    let ei = (-ik * x).exp();
    [[e, ei], [ik * e, -ik * ei]]
}

/// Inverse of [`plane_to_cauchy`].
pub(crate) fn cauchy_to_plane(k: C64, x: f64) -> Mat2 {
    let ik = crate::I * k;
    let e = (ik * x).exp();
    let ei = (-ik * x).exp();
    let s = 1.0 / (2.0 * ik);
    [[ei * ik * s, ei * s], [e * ik * s, -e * s]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_piece_matches_exact_propagator() {
        let reg = RegularPart::default();
        let k = C64::new(1.7, 0.0);
        let m = fundamental(&reg, 0.0, 2.0, 0.0, 2.0, k).unwrap();
        let (s, c) = (k.re * 2.0).sin_cos();
        assert!((m[0][0].re - c).abs() < 1e-10);
        assert!((m[0][1].re - s / k.re).abs() < 1e-10);
        let back = fundamental(&reg, 0.0, 2.0, 2.0, 0.0, k).unwrap();
        let p = mat_mul(&back, &m);
        assert!((p[0][0] - 1.0).norm() < 1e-10 && p[0][1].norm() < 1e-10);
        assert!((det(&m) - 1.0).norm() < 1e-10);
    }

    #[test]
    fn plane_maps_invert() {
        let k = C64::new(0.3, 0.2);
        let p = mat_mul(&cauchy_to_plane(k, 1.3), &plane_to_cauchy(k, 1.3));
        assert!((p[0][0] - 1.0).norm() < 1e-14 && p[1][0].norm() < 1e-14);
    }
}
