//! Uniform cubic grids in ℝ³ and spectral application of Fourier
//! multipliers on them.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::lagrange_weights;
use crate::surface::Point;

/// Largest supported interpolation order.
pub const MAX_ORDER: usize = 12;

/// Values on the `n³` points `center + (i - n/2, j - n/2, k - n/2) * step`.
///
/// The center is a grid point; the grid spans `[center - side/2,
/// center + side/2)` along each axis with `side = n * step`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    pub center: Point,
    pub n: usize,
    pub step: f64,
    pub values: Vec<f64>,
}

impl Grid3 {
    pub fn new(center: Point, n: usize, side: f64) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::Resolution(format!("grid size {n} must be even and >= 2")));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::Domain(format!("grid side {side} must be positive")));
        }
        Ok(Self { center, n, step: side / n as f64, values: vec![0.0; n * n * n] })
    }

    /// Grid with `values[idx] = f(point(idx))`.
    pub fn from_fn(center: Point, n: usize, side: f64, f: impl Fn(&Point) -> f64) -> Result<Self> {
        let mut g = Self::new(center, n, side)?;
        for idx in 0..g.values.len() {
            g.values[idx] = f(&g.point(idx));
        }
        Ok(g)
    }

    pub fn side(&self) -> f64 {
        self.step * self.n as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        [idx / (self.n * self.n), (idx / self.n) % self.n, idx % self.n]
    }

    #[inline]
    pub fn point(&self, idx: usize) -> Point {
        let c = self.coords(idx);
        let half = (self.n / 2) as f64;
        std::array::from_fn(|d| self.center[d] + (c[d] as f64 - half) * self.step)
    }

    pub fn cell_volume(&self) -> f64 {
        self.step.powi(3)
    }

    /// Riemann sum `Σ v h³`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    /// `Σ |v| h³`.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Tensor Lagrange interpolant of even `order` centred on the cell
    /// containing `x`; samples outside the grid count as zero, which is exact
    /// for functions supported well inside the box.
    pub fn interpolate(&self, x: &Point, order: usize) -> f64 {
        debug_assert!(order >= 2 && order.is_multiple_of(2) && order <= MAX_ORDER);
        let half = (self.n / 2) as f64;
        let mut first = [0i64; 3];
        let mut w = [[0.0; MAX_ORDER]; 3];
        let mut nodes = [0.0; MAX_ORDER];
        for d in 0..3 {
            let t = (x[d] - self.center[d]) / self.step + half;
            first[d] = t.floor() as i64 - (order as i64 / 2 - 1);
            for (k, node) in nodes[..order].iter_mut().enumerate() {
                *node = (first[d] + k as i64) as f64;
            }
            lagrange_weights(&nodes[..order], t, &mut w[d][..order]);
        }
        let n = self.n as i64;
        let inside = |i: i64| (0..n).contains(&i);
        let mut acc = 0.0;
        for a in 0..order {
            let i = first[0] + a as i64;
            if !inside(i) {
                continue;
            }
            for b in 0..order {
                let j = first[1] + b as i64;
                if !inside(j) {
                    continue;
                }
                let wab = w[0][a] * w[1][b];
                let row = self.index(i as usize, j as usize, 0);
                for c in 0..order {
                    let k = first[2] + c as i64;
                    if inside(k) {
                        acc += wab * w[2][c] * self.values[row + k as usize];
                    }
                }
            }
        }
        acc
    }

    /// Second-order seven-point Laplacian; boundary points are set to zero.
    pub fn laplacian(&self) -> Grid3 {
        let n = self.n;
        let mut out = Grid3 { values: vec![0.0; self.values.len()], ..self.clone() };
        let h2 = self.step * self.step;
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                for k in 1..n - 1 {
                    let c = self.values[self.index(i, j, k)];
                    let sum = self.values[self.index(i - 1, j, k)]
                        + self.values[self.index(i + 1, j, k)]
                        + self.values[self.index(i, j - 1, k)]
                        + self.values[self.index(i, j + 1, k)]
                        + self.values[self.index(i, j, k - 1)]
                        + self.values[self.index(i, j, k + 1)];
                    out.values[self.index(i, j, k)] = (sum - 6.0 * c) / h2;
                }
            }
        }
        out
    }

    /// Applies the Fourier multiplier `symbol(ξ)` (convention
    /// `f̂(ξ) = ∫ f e^{-2πiξ·x}`) to the grid function extended by zero to a
    /// periodic box `padding` times wider, and returns the central block.
    pub fn apply_multiplier(&self, padding: usize, symbol: impl Fn(&[f64; 3]) -> f64) -> Result<Grid3> {
        if padding == 0 {
            return Err(Error::Domain("padding factor must be at least 1".into()));
        }
        let n = self.n;
        let np = n * padding;
        let offset = (np - n) / 2;
        let mut data = vec![Complex::new(0.0, 0.0); np * np * np];
        let pidx = |i: usize, j: usize, k: usize| (i * np + j) * np + k;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    data[pidx(i + offset, j + offset, k + offset)] =
                        Complex::new(self.values[self.index(i, j, k)], 0.0);
                }
            }
        }
        fft3(&mut data, np, false);
        let period = np as f64 * self.step;
        let freq = |m: usize| -> f64 {
            let m = m as i64;
            let signed = if m <= (np as i64) / 2 { m } else { m - np as i64 };
            signed as f64 / period
        };
        for i in 0..np {
            for j in 0..np {
                for k in 0..np {
                    let xi = [freq(i), freq(j), freq(k)];
                    data[pidx(i, j, k)] *= symbol(&xi);
                }
            }
        }
        fft3(&mut data, np, true);
        let scale = 1.0 / (np * np * np) as f64;
        let mut out = Grid3 { values: vec![0.0; self.values.len()], ..self.clone() };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out.values[self.index(i, j, k)] = data[pidx(i + offset, j + offset, k + offset)].re * scale;
                }
            }
        }
        Ok(out)
    }
}

/// In-place unnormalized 3-D FFT of an `n³` row-major array.
fn fft3(data: &mut [Complex<f64>], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    // innermost axis: contiguous lines
    fft.process(data);
    let mut line = vec![Complex::new(0.0, 0.0); n];
    // middle axis
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                line[j] = data[(i * n + j) * n + k];
            }
            fft.process(&mut line);
            for j in 0..n {
                data[(i * n + j) * n + k] = line[j];
            }
        }
    }
    // outer axis, processed a plane of lines at a time for locality
    let mut plane = vec![Complex::new(0.0, 0.0); n * n];
    for j in 0..n {
        for i in 0..n {
            plane[i * n..(i + 1) * n].copy_from_slice(&data[(i * n + j) * n..(i * n + j + 1) * n]);
        }
        // transpose so each line along i is contiguous
        let mut t = vec![Complex::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                t[k * n + i] = plane[i * n + k];
            }
        }
        fft.process(&mut t);
        for i in 0..n {
            for k in 0..n {
                data[(i * n + j) * n + k] = t[k * n + i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn grid_geometry() {
        let g = Grid3::new([1.0, 2.0, 3.0], 8, 4.0).unwrap();
        assert_eq!(g.step, 0.5);
        assert_eq!(g.point(g.index(4, 4, 4)), [1.0, 2.0, 3.0]);
        assert_eq!(g.point(g.index(0, 0, 0)), [-1.0, 0.0, 1.0]);
        assert_eq!(g.coords(g.index(1, 2, 3)), [1, 2, 3]);
        assert!(Grid3::new([0.0; 3], 7, 1.0).is_err());
        assert!(Grid3::new([0.0; 3], 8, 0.0).is_err());
    }

    #[test]
    fn identity_multiplier_round_trips() {
        let g = Grid3::from_fn([0.0; 3], 16, 4.0, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp()).unwrap();
        let out = g.apply_multiplier(2, |_| 1.0).unwrap();
        for (a, b) in g.values.iter().zip(&out.values) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn laplacian_symbol_on_gaussian() {
        // -Δ e^{-π|x|²} = (6π - 4π²|x|²) e^{-π|x|²}
        let g = Grid3::from_fn([0.0; 3], 64, 8.0, |x| (-PI * x.iter().map(|v| v * v).sum::<f64>()).exp()).unwrap();
        let out = g.apply_multiplier(1, |xi| 4.0 * PI * PI * xi.iter().map(|v| v * v).sum::<f64>()).unwrap();
        for idx in [g.index(32, 32, 32), g.index(33, 31, 32), g.index(40, 32, 26)] {
            let x = g.point(idx);
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let exact = (6.0 * PI - 4.0 * PI * PI * r2) * (-PI * r2).exp();
            assert_relative_eq!(out.values[idx], exact, epsilon = 1e-9);
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let f = |x: &Point| x[0].powi(3) - 2.0 * x[0] * x[1] * x[2] + x[2] * x[2] + 1.0;
        let g = Grid3::from_fn([0.1, -0.2, 0.3], 16, 4.0, f).unwrap();
        for x in [[0.1, -0.2, 0.3], [0.37, 0.11, -0.52], [-0.93, 0.4, 1.01]] {
            assert!((g.interpolate(&x, 4) - f(&x)).abs() < 1e-12);
            assert!((g.interpolate(&x, 8) - f(&x)).abs() < 1e-11);
        }
    }
}
