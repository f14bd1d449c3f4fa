//! Grids, quadrature weights and sampled functions.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::{Error, Result, C64};

/// Uniform grid `start + i * step`, `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Self {
        assert!(step > 0.0 && len >= 2, "grid needs positive step and two points");
        Self { start, step, len }
    }

    /// Grid on `[a, b]` with spacing `step`; `b - a` must be a multiple of `step`.
    pub fn span(a: f64, b: f64, step: f64) -> Result<Self> {
        let n = (b - a) / step;
        let nr = n.round();
        if (n - nr).abs() > 1e-8 * n.max(1.0) || nr < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "interval [{a}, {b}] is not a multiple of step {step}"
            )));
        }
        Ok(Self::new(a, step, nr as usize + 1))
    }

    /// Symmetric grid on `[-x_max, x_max]`.
    pub fn symmetric(x_max: f64, step: f64) -> Result<Self> {
        Self::span(-x_max, x_max, step)
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    /// Index of the node at `x`, if `x` is a node (relative tolerance 1e-8 of the step).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let t = (x - self.start) / self.step;
        let r = t.round();
        if (t - r).abs() < 1e-8 && r >= 0.0 && (r as usize) < self.len {
            Some(r as usize)
        } else {
            None
        }
    }

    /// Grid with `factor` times as many intervals over the same span.
    pub fn refined(&self, factor: usize) -> Self {
        Self::new(self.start, self.step / factor as f64, (self.len - 1) * factor + 1)
    }

    /// Quadrature weights on every piece between consecutive `breakpoints`,
    /// which must be grid nodes. Pieces with at least twelve nodes get the
    /// sixth-order Gregory rule, shorter ones fall back to lower order.
    pub fn weights(&self, breakpoints: &[f64]) -> Result<Vec<f64>> {
        let mut cuts = vec![0usize];
        for &b in breakpoints {
            if b <= self.start || b >= self.end() {
                continue;
            }
            let i = self.index_of(b).ok_or_else(|| {
                Error::InvalidArgument(format!("breakpoint {b} is not a grid node"))
            })?;
            cuts.push(i);
        }
        cuts.push(self.len - 1);
        cuts.sort_unstable();
        cuts.dedup();
        let mut w = vec![0.0; self.len];
        for pair in cuts.windows(2) {
            piece_weights(&mut w[pair[0]..=pair[1]], self.step);
        }
        Ok(w)
    }
}

/// Adds weights for one smooth piece (inclusive node range) into `w`.
fn piece_weights(w: &mut [f64], h: f64) {
    let n = w.len();
    match n {
        0 | 1 => {}
        2 => {
            w[0] += 0.5 * h;
            w[1] += 0.5 * h;
        }
        3..=7 => {
            // trapezoid with an end correction is not worth it on tiny pieces
            for (i, wi) in w.iter_mut().enumerate() {
                *wi += if i == 0 || i == n - 1 { 0.5 * h } else { h };
            }
        }
        8..=11 => {
            const E: [f64; 4] = [17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0];
            for (i, wi) in w.iter_mut().enumerate() {
                let c = if i < 4 {
                    E[i]
                } else if i >= n - 4 {
                    E[n - 1 - i]
                } else {
                    1.0
                };
                *wi += c * h;
            }
        }
        _ => {
            let g = gregory_ends();
            for (i, wi) in w.iter_mut().enumerate() {
                let c = if i < 6 {
                    g[i]
                } else if i >= n - 6 {
                    g[n - 1 - i]
                } else {
                    1.0
                };
                *wi += c * h;
            }
        }
    }
}

/// End weights of the Gregory rule with forward differences up to fifth order.
fn gregory_ends() -> [f64; 6] {
    // trapezoid plus sum_m g_m Delta^m f_0 at the left end
    const G: [f64; 5] = [1.0 / 12.0, -1.0 / 24.0, 19.0 / 720.0, -3.0 / 160.0, 863.0 / 60480.0];
    let mut w = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
    w[0] = 0.5;
    for (m, g) in G.iter().enumerate() {
        let m = m + 1;
        let mut binom = 1.0;
        for j in 0..=m {
            // Delta^m f_0 = sum_j (-1)^(m-j) C(m,j) f_j
            let sign = if (m - j) % 2 == 0 { 1.0 } else { -1.0 };
            w[j] += g * sign * binom;
            binom = binom * (m - j) as f64 / (j + 1) as f64;
        }
    }
    w
}

/// Complex samples on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: UniformGrid,
    pub values: Vec<C64>,
}

impl GridFunction {
    pub fn new(grid: UniformGrid, values: Vec<C64>) -> Self {
        assert_eq!(grid.len, values.len(), "values must match the grid");
        Self { grid, values }
    }

    pub fn from_fn(grid: UniformGrid, f: impl Fn(f64) -> C64) -> Self {
        let values = (0..grid.len).map(|i| f(grid.point(i))).collect();
        Self { grid, values }
    }

    pub fn from_real(grid: UniformGrid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| C64::new(f(x), 0.0))
    }

    pub fn zeros(grid: UniformGrid) -> Self {
        Self::new(grid, vec![C64::new(0.0, 0.0); grid.len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Plain trapezoid L2 norm.
    pub fn norm2(&self) -> f64 {
        let h = self.grid.step;
        let n = self.len();
        let s: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| if i == 0 || i == n - 1 { 0.5 } else { 1.0 } * v.norm_sqr())
            .sum();
        (s * h).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn scale(&self, a: C64) -> Self {
        Self::new(self.grid, self.values.iter().map(|v| v * a).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        )
    }

    /// Grid reflection `f(x) -> f(-x)`; the grid must be symmetric.
    pub fn parity(&self) -> Self {
        let mut v = self.values.clone();
        v.reverse();
        Self::new(self.grid, v)
    }
}

/// Quadrature rule on the wavenumber axis.
#[derive(Debug, Clone, PartialEq)]
pub struct KQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl KQuadrature {
    /// Composite Gauss-Legendre on `[-k_max, 0]` and `[0, k_max]` with panels
    /// of width at most `panel`. `k = 0` is a panel edge, never a node.
    pub fn gauss_panels(k_max: f64, panel: f64, order: usize) -> Self {
        Self::gauss_panels_range(0.0, k_max, panel, order, true)
    }

    /// Composite Gauss-Legendre on `[k_lo, k_hi]`, mirrored to negative k when `mirror`.
    pub fn gauss_panels_range(k_lo: f64, k_hi: f64, panel: f64, order: usize, mirror: bool) -> Self {
        let npan = ((k_hi - k_lo) / panel).ceil().max(1.0) as usize;
        let w = (k_hi - k_lo) / npan as f64;
        let rule = GaussLegendre::new(NonZeroUsize::new(order).expect("order >= 1"));
        let mut pairs: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut pos = Vec::with_capacity(npan * order);
        for p in 0..npan {
            let a = k_lo + p as f64 * w;
            for &(x, wt) in &pairs {
                pos.push((a + 0.5 * w * (x + 1.0), 0.5 * w * wt));
            }
        }
        let mut all = Vec::with_capacity(2 * pos.len());
        if mirror {
            all.extend(pos.iter().rev().map(|&(k, wt)| (-k, wt)));
        }
        all.extend(pos);
        Self {
            nodes: all.iter().map(|p| p.0).collect(),
            weights: all.iter().map(|p| p.1).collect(),
        }
    }

    /// Trapezoid rule on a uniform grid `k_n = n dk`, `|n| <= k_max/dk`, without `k = 0`.
    pub fn uniform(k_max: f64, dk: f64) -> Self {
        let m = (k_max / dk).round() as i64;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for n in -m..=m {
            if n == 0 {
                continue;
            }
            nodes.push(n as f64 * dk);
            weights.push(if n.abs() == m { 0.5 * dk } else { dk });
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn k_max(&self) -> f64 {
        self.nodes.iter().fold(0.0, |m, k| m.max(k.abs()))
    }
}

/// Dense row-major 2D array.
#[derive(Debug, Clone, PartialEq)]
pub struct Array2<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Clone> Array2<T> {
    pub fn filled(rows: usize, cols: usize, v: T) -> Self {
        Self { rows, cols, data: vec![v; rows * cols] }
    }
}

impl<T> Array2<T> {
    #[inline]
    pub fn at(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut T {
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Fourth-order central difference at interior index `i` (needs `2 <= i < n-2`).
#[inline]
pub fn d4<T>(v: &[T], i: usize, h: f64) -> T
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    (v[i - 2] - v[i + 2]) * (1.0 / (12.0 * h)) + (v[i + 1] - v[i - 1]) * (8.0 / (12.0 * h))
}

/// Fourth-order central difference of a scalar function.
pub fn d4_fn<T>(f: impl Fn(f64) -> T, x: f64, h: f64) -> T
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    (f(x - 2.0 * h) - f(x + 2.0 * h)) * (1.0 / (12.0 * h))
        + (f(x + h) - f(x - h)) * (8.0 / (12.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_integrate_quartic_exactly_on_pieces() {
        let g = UniformGrid::span(-2.0, 2.0, 0.125).unwrap();
        let w = g.weights(&[0.5]).unwrap();
        let s: f64 = (0..g.len).map(|i| w[i] * g.point(i).powi(3)).sum();
        assert!((s - 0.0).abs() < 1e-12);
        let s: f64 = (0..g.len).map(|i| w[i] * g.point(i).abs()).sum();
        // kink at 0 is not a breakpoint here, so only check the smooth case above
        assert!((s - 4.0).abs() < 1e-2);
        let w0 = g.weights(&[0.0]).unwrap();
        let s: f64 = (0..g.len).map(|i| w0[i] * g.point(i).abs()).sum();
        assert!((s - 4.0).abs() < 1e-12);
    }

    #[test]
    fn gregory_is_exact_for_quintics() {
        let g = UniformGrid::span(0.0, 3.0, 0.1).unwrap();
        let w = g.weights(&[]).unwrap();
        let s: f64 = (0..g.len).map(|i| w[i] * g.point(i).powi(5)).sum();
        assert!((s - 3f64.powi(6) / 6.0).abs() < 1e-10, "{s}");
    }

    #[test]
    fn gauss_panels_are_symmetric() {
        let q = KQuadrature::gauss_panels(4.0, 0.3, 8);
        let n = q.len();
        for i in 0..n {
            assert_eq!(q.nodes[i], -q.nodes[n - 1 - i]);
        }
        let s: f64 = q.weights.iter().sum();
        assert!((s - 8.0).abs() < 1e-12);
        let s: f64 = q.nodes.iter().zip(&q.weights).map(|(k, w)| w * k.powi(10)).sum();
        assert!((s - 2.0 * 4f64.powi(11) / 11.0).abs() < 1e-6);
    }
}
