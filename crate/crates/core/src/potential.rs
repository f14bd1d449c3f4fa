//! Potential model `V = sum_j c_j delta(x - y_j) + V_reg`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_GAMMA: f64 = 1.6;

const QUAD_ABS: f64 = 1e-10;
const QUAD_REL: f64 = 1e-8;

/// One delta term with jump `u'(y+) - u'(y-) = c u(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaTerm {
    pub c: f64,
    pub y: f64,
}

/// Closed-form presets and sampled tables for the regular part.
#[derive(Debug, Clone, PartialEq)]
pub enum RegularKind {
    Zero,
    /// `height` on `[a, b]`.
    Box { height: f64, a: f64, b: f64 },
    /// `amplitude * exp(-(x - center)^2 / (2 width^2))`.
    Gaussian { amplitude: f64, center: f64, width: f64 },
    /// `amplitude * exp(-rate |x|)`.
    Exponential { amplitude: f64, rate: f64 },
    /// Linear interpolation of `(x, v)` samples, zero outside `[x[0], x[n-1]]`.
    Sampled { x: Vec<f64>, v: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularPart {
    pub kind: RegularKind,
    /// Weight exponent of the L^1 norm.
    pub gamma: f64,
}

impl Default for RegularPart {
    fn default() -> Self {
        Self { kind: RegularKind::Zero, gamma: DEFAULT_GAMMA }
    }
}

impl RegularPart {
    pub fn new(kind: RegularKind) -> Self {
        Self { kind, gamma: DEFAULT_GAMMA }
    }

    pub fn boxed(height: f64, a: f64, b: f64) -> Self {
        Self::new(RegularKind::Box { height, a, b })
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            RegularKind::Zero => true,
            RegularKind::Box { height, a, b } => *height == 0.0 || b <= a,
            RegularKind::Gaussian { amplitude, .. } | RegularKind::Exponential { amplitude, .. } => {
                *amplitude == 0.0
            }
            RegularKind::Sampled { v, .. } => v.iter().all(|&s| s == 0.0),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            RegularKind::Zero => 0.0,
            RegularKind::Box { height, a, b } => {
                if x >= *a && x <= *b {
                    *height
                } else {
                    0.0
                }
            }
            RegularKind::Gaussian { amplitude, center, width } => {
                let s = (x - center) / width;
                amplitude * (-0.5 * s * s).exp()
            }
            RegularKind::Exponential { amplitude, rate } => amplitude * (-rate * x.abs()).exp(),
            RegularKind::Sampled { x: xs, v } => {
                let n = xs.len();
                if n < 2 || x < xs[0] || x > xs[n - 1] {
                    return 0.0;
                }
                let j = xs.partition_point(|&t| t <= x).clamp(1, n - 1);
                let t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
                v[j - 1] + t * (v[j] - v[j - 1])
            }
        }
    }

    /// One-sided limit at `x`.
    pub fn eval_side(&self, x: f64, side: Side) -> f64 {
        match &self.kind {
            RegularKind::Box { height, a, b } => {
                let inside = match side {
                    Side::Right => x >= *a && x < *b,
                    Side::Left => x > *a && x <= *b,
                };
                if inside {
                    *height
                } else {
                    0.0
                }
            }
            RegularKind::Sampled { x: xs, .. } if !xs.is_empty() => {
                let n = xs.len();
                if (side == Side::Left && x <= xs[0]) || (side == Side::Right && x >= xs[n - 1]) {
                    0.0
                } else {
                    self.eval(x)
                }
            }
            _ => self.eval(x),
        }
    }

    /// Points where `V_reg` or its derivative jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            RegularKind::Box { a, b, .. } => vec![*a, *b],
            RegularKind::Exponential { .. } => vec![0.0],
            RegularKind::Sampled { x, .. } => x.clone(),
            _ => vec![],
        }
    }

    /// Compact support, if declared.
    pub fn support(&self) -> Option<(f64, f64)> {
        match &self.kind {
            RegularKind::Zero => None,
            RegularKind::Box { a, b, .. } => Some((*a, *b)),
            RegularKind::Sampled { x, .. } => Some((x[0], x[x.len() - 1])),
            _ => None,
        }
    }

    /// Interval outside of which `|V_reg|(1+|x|)^gamma` is below `1e-16` of its scale.
    pub fn effective_support(&self) -> Option<(f64, f64)> {
        if self.is_zero() {
            return None;
        }
        match &self.kind {
            RegularKind::Gaussian { center, width, .. } => {
                let r = width.abs() * 10.0;
                Some((center - r, center + r))
            }
            RegularKind::Exponential { rate, .. } => {
                // exp(-r X) (1+X)^gamma < 1e-16
                let mut x = 40.0 / rate;
                while (-rate * x).exp() * (1.0 + x).powf(self.gamma.max(2.0)) > 1e-16 {
                    x *= 1.25;
                }
                Some((-x, x))
            }
            _ => self.support(),
        }
    }

    /// Integral of `w(t) |V_reg(t)|` over `[lo, hi]` intersected with the effective support.
    pub fn integrate_abs(&self, lo: f64, hi: f64, w: impl Fn(f64) -> f64) -> Result<f64> {
        let Some((s0, s1)) = self.effective_support() else {
            return Ok(0.0);
        };
        let a = lo.max(s0);
        let b = hi.min(s1);
        if b <= a {
            return Ok(0.0);
        }
        let mut cuts = vec![a];
        // weights of the form (1 + |s|)^g have a kink at 0
        cuts.extend(self.breakpoints().into_iter().chain([0.0]).filter(|&p| p > a && p < b));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts.push(b);
        let mut total = 0.0;
        for pair in cuts.windows(2) {
            let (p, q) = (pair[0], pair[1]);
            let mid = 0.5 * (p + q);
            // evaluate strictly inside the piece so box edges do not leak
            let f = |t: f64| {
                let t = t.clamp(p, q);
                let v = if t == p {
                    self.eval_side(t, Side::Right)
                } else if t == q {
                    self.eval_side(t, Side::Left)
                } else {
                    self.eval(t)
                };
                w(t) * v.abs()
            };
            let scale = f(mid).abs().max(1e-300) * (q - p);
            let tol = QUAD_ABS.max(QUAD_REL * scale);
            let out = quadrature::double_exponential::integrate(f, p, q, tol);
            if !out.integral.is_finite() || out.error_estimate > 1e3 * tol {
                return Err(Error::Quadrature(format!(
                    "piece [{p}, {q}]: estimate {:.3e}, error {:.3e}",
                    out.integral, out.error_estimate
                )));
            }
            total += out.integral;
        }
        Ok(total)
    }
}

/// Full potential: delta list plus regular part.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub deltas: Vec<DeltaTerm>,
    pub regular: RegularPart,
    /// Marks an intentionally free Hamiltonian.
    pub free: bool,
}

impl PotentialSpec {
    pub fn free() -> Self {
        Self { deltas: vec![], regular: RegularPart::default(), free: true }
    }

    pub fn from_deltas(terms: &[(f64, f64)]) -> Self {
        Self {
            deltas: terms.iter().map(|&(c, y)| DeltaTerm { c, y }).collect(),
            regular: RegularPart::default(),
            free: terms.is_empty(),
        }
    }

    pub fn single_delta(c: f64, y: f64) -> Self {
        Self::from_deltas(&[(c, y)])
    }

    pub fn new(deltas: Vec<DeltaTerm>, regular: RegularPart) -> Self {
        let free = deltas.is_empty() && regular.is_zero();
        Self { deltas, regular, free }
    }

    pub fn with_regular(mut self, regular: RegularPart) -> Self {
        self.free = self.deltas.is_empty() && regular.is_zero();
        self.regular = regular;
        self
    }

    pub fn is_pure_delta(&self) -> bool {
        self.regular.is_zero()
    }

    pub fn is_free(&self) -> bool {
        self.deltas.is_empty() && self.regular.is_zero()
    }

    /// Mirror image `V(-x)`.
    pub fn reflected(&self) -> Self {
        let mut deltas: Vec<DeltaTerm> =
            self.deltas.iter().map(|d| DeltaTerm { c: d.c, y: -d.y }).collect();
        deltas.reverse();
        let kind = match &self.regular.kind {
            RegularKind::Zero => RegularKind::Zero,
            RegularKind::Box { height, a, b } => RegularKind::Box { height: *height, a: -b, b: -a },
            RegularKind::Gaussian { amplitude, center, width } => {
                RegularKind::Gaussian { amplitude: *amplitude, center: -center, width: *width }
            }
            e @ RegularKind::Exponential { .. } => e.clone(),
            RegularKind::Sampled { x, v } => RegularKind::Sampled {
                x: x.iter().rev().map(|t| -t).collect(),
                v: v.iter().rev().copied().collect(),
            },
        };
        Self { deltas, regular: RegularPart { kind, gamma: self.regular.gamma }, free: self.free }
    }

    /// All points where the potential is singular or has a jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.deltas.iter().map(|d| d.y).collect();
        b.extend(self.regular.breakpoints());
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Interval containing every delta and the effective support of `V_reg`.
    pub fn extent(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for d in &self.deltas {
            lo = lo.min(d.y);
            hi = hi.max(d.y);
        }
        if let Some((a, b)) = self.regular.effective_support() {
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// Support radius `max(|y_j|, |support of V_reg|)`.
    pub fn support_radius(&self) -> f64 {
        self.extent().map_or(0.0, |(a, b)| a.abs().max(b.abs()))
    }

    /// `int_{x}^{inf} |V(t)| dt`, deltas with `y_j >= x` included.
    pub fn tail(&self, x: f64) -> Result<f64> {
        let d: f64 = self.deltas.iter().filter(|d| d.y >= x).map(|d| d.c.abs()).sum();
        Ok(d + self.regular.integrate_abs(x, f64::INFINITY, |_| 1.0)?)
    }

    /// `int_{x}^{inf} V(t) dt` (signed), deltas with `y_j > x` included.
    pub fn signed_tail(&self, x: f64) -> Result<f64> {
        let d: f64 = self.deltas.iter().filter(|d| d.y > x).map(|d| d.c).sum();
        let reg = signed_integral(&self.regular, x, f64::INFINITY)?;
        Ok(d + reg)
    }

    /// `int_x^inf |V_reg(t)| (1+|t|) dt`.
    pub fn weighted_tail_right(&self, x: f64) -> Result<f64> {
        self.regular.integrate_abs(x, f64::INFINITY, |t| 1.0 + t.abs())
    }

    /// `int_{-inf}^x |V_reg(t)| (1+|t|) dt`.
    pub fn weighted_tail_left(&self, x: f64) -> Result<f64> {
        self.regular.integrate_abs(f64::NEG_INFINITY, x, |t| 1.0 + t.abs())
    }
}

fn signed_integral(reg: &RegularPart, lo: f64, hi: f64) -> Result<f64> {
    // V_reg = V+ - V-, integrate each with the absolute-value routine
    let pos = RegularPart { kind: clamp_sign(&reg.kind, 1.0), gamma: reg.gamma };
    let neg = RegularPart { kind: clamp_sign(&reg.kind, -1.0), gamma: reg.gamma };
    Ok(pos.integrate_abs(lo, hi, |_| 1.0)? - neg.integrate_abs(lo, hi, |_| 1.0)?)
}

fn clamp_sign(kind: &RegularKind, s: f64) -> RegularKind {
    match kind {
        RegularKind::Box { height, a, b } => {
            RegularKind::Box { height: (s * height).max(0.0), a: *a, b: *b }
        }
        RegularKind::Gaussian { amplitude, center, width } => RegularKind::Gaussian {
            amplitude: (s * amplitude).max(0.0),
            center: *center,
            width: *width,
        },
        RegularKind::Exponential { amplitude, rate } => {
            RegularKind::Exponential { amplitude: (s * amplitude).max(0.0), rate: *rate }
        }
        RegularKind::Sampled { x, v } => {
            RegularKind::Sampled { x: x.clone(), v: v.iter().map(|t| (s * t).max(0.0)).collect() }
        }
        RegularKind::Zero => RegularKind::Zero,
    }
}

/// `int (1+|s|)^gamma |V_reg(s)| ds`; deltas are not part of this norm.
pub fn weighted_l1_norm(spec: &PotentialSpec, gamma: f64) -> Result<f64> {
    if gamma < 0.0 {
        return Err(Error::InvalidArgument(format!("gamma = {gamma} must be >= 0")));
    }
    spec.regular
        .integrate_abs(f64::NEG_INFINITY, f64::INFINITY, |s| (1.0 + s.abs()).powf(gamma))
}

/// `gamma_1(x) = int_x^inf (t - x) |V(t)| dt`, including delta terms.
pub fn gamma1(spec: &PotentialSpec, x: f64) -> Result<f64> {
    let d: f64 = spec.deltas.iter().filter(|d| d.y > x).map(|d| d.c.abs() * (d.y - x)).sum();
    Ok(d + spec.regular.integrate_abs(x, f64::INFINITY, |t| t - x)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub weighted_norm: f64,
    pub delta_count: usize,
    pub support_radius: f64,
}

/// Checks the typed invariants; every violation is listed in the error.
pub fn validate(spec: &PotentialSpec) -> Result<ValidationReport> {
    let mut bad = Vec::new();
    for (j, d) in spec.deltas.iter().enumerate() {
        if d.c == 0.0 {
            bad.push(format!("delta {j} has zero strength"));
        }
        if !d.c.is_finite() || !d.y.is_finite() {
            bad.push(format!("delta {j} is not finite"));
        }
    }
    for (j, w) in spec.deltas.windows(2).enumerate() {
        if w[1].y <= w[0].y {
            bad.push(format!(
                "delta locations not strictly increasing at {j}: {} then {}",
                w[0].y, w[1].y
            ));
        }
    }
    if spec.is_free() && !spec.free {
        bad.push("potential is trivial but not flagged as free".into());
    }
    match &spec.regular.kind {
        RegularKind::Box { a, b, .. } if b <= a => bad.push(format!("box [{a}, {b}] is empty")),
        RegularKind::Gaussian { width, .. } if *width <= 0.0 => {
            bad.push("gaussian width must be positive".into())
        }
        RegularKind::Exponential { rate, .. } if *rate <= 0.0 => {
            bad.push("exponential rate must be positive".into())
        }
        RegularKind::Sampled { x, v } => {
            if x.len() != v.len() || x.len() < 2 {
                bad.push("sampled table needs matching x/v with at least two rows".into());
            } else if x.windows(2).any(|w| w[1] <= w[0]) {
                bad.push("sampled x must be strictly increasing".into());
            }
        }
        _ => {}
    }
    let weighted_norm = if bad.is_empty() {
        match weighted_l1_norm(spec, spec.regular.gamma) {
            Ok(n) if n.is_finite() => n,
            Ok(_) => {
                bad.push("weighted norm is not finite".into());
                f64::NAN
            }
            Err(e) => {
                bad.push(format!("weighted norm: {e}"));
                f64::NAN
            }
        }
    } else {
        f64::NAN
    };
    if !bad.is_empty() {
        return Err(Error::Validation(bad));
    }
    Ok(ValidationReport {
        weighted_norm,
        delta_count: spec.deltas.len(),
        support_radius: spec.support_radius(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_side_limits() {
        let r = RegularPart::boxed(2.0, 0.0, 1.0);
        assert_eq!(r.eval_side(0.0, Side::Left), 0.0);
        assert_eq!(r.eval_side(0.0, Side::Right), 2.0);
        assert_eq!(r.eval_side(1.0, Side::Left), 2.0);
        assert_eq!(r.eval_side(1.0, Side::Right), 0.0);
    }

    #[test]
    fn reflection_round_trip() {
        let s = PotentialSpec::from_deltas(&[(1.0, -1.0), (2.0, 0.5)])
            .with_regular(RegularPart::boxed(0.5, 0.0, 1.0));
        assert_eq!(s.reflected().reflected(), s);
        assert_eq!(s.reflected().deltas[0].y, -0.5);
    }
}
