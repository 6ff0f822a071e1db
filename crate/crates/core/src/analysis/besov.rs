//! Besov-type difference-quotient seminorm on a planar patch,
//! `(∫∫ |f(x) - f(y)|^p / |x - y|^{2 + ps} dx dy)^{1/p}` for `0 < s < 1`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, lagrange_weights, Rule};

/// Samples `f(i h, j h)`, `0 ≤ i, j < n`, `h = side / (n - 1)`, stored at
/// `i * n + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchSamples {
    side: f64,
    n: usize,
    values: Vec<f64>,
}

/// Width of the local interpolation stencil.
const STENCIL: usize = 4;

impl PatchSamples {
    pub fn new(side: f64, n: usize, values: Vec<f64>) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::Domain(format!("patch side {side} must be positive")));
        }
        if n < STENCIL {
            return Err(Error::Resolution(format!("patch needs at least {STENCIL} samples per side")));
        }
        if values.len() != n * n {
            return Err(Error::SizeMismatch { expected: n * n, got: values.len() });
        }
        Ok(Self { side, n, values })
    }

    pub fn from_fn(side: f64, n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let h = side / (n.max(2) - 1) as f64;
        let values = (0..n * n).map(|k| f((k / n) as f64 * h, (k % n) as f64 * h)).collect();
        Self::new(side, n, values)
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn step(&self) -> f64 {
        self.side / (self.n - 1) as f64
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { values: self.values.iter().map(|v| a * v).collect(), ..self.clone() }
    }

    fn stencil(&self, x: f64, w: &mut [f64; STENCIL]) -> usize {
        let h = self.step();
        let t = (x / h).clamp(0.0, (self.n - 1) as f64);
        let first = (t.floor() as isize - (STENCIL as isize / 2 - 1)).clamp(0, (self.n - STENCIL) as isize) as usize;
        let nodes: [f64; STENCIL] = std::array::from_fn(|k| (first + k) as f64);
        lagrange_weights(&nodes, t, w);
        first
    }

    /// Piecewise-cubic tensor Lagrange interpolant.
    pub fn interpolate(&self, x: f64, y: f64) -> f64 {
        let mut wx = [0.0; STENCIL];
        let mut wy = [0.0; STENCIL];
        let fx = self.stencil(x, &mut wx);
        let fy = self.stencil(y, &mut wy);
        let mut acc = 0.0;
        for (a, wa) in wx.iter().enumerate() {
            let row = (fx + a) * self.n + fy;
            for (b, wb) in wy.iter().enumerate() {
                acc += wa * wb * self.values[row + b];
            }
        }
        acc
    }

    fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let d = 1e-4 * self.step();
        let xm = (x - d).max(0.0);
        let xp = (x + d).min(self.side);
        let ym = (y - d).max(0.0);
        let yp = (y + d).min(self.side);
        [
            (self.interpolate(xp, y) - self.interpolate(xm, y)) / (xp - xm),
            (self.interpolate(x, yp) - self.interpolate(x, ym)) / (yp - ym),
        ]
    }
}

fn check(s: f64, p: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("smoothness s = {s} must lie in (0, 1)")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("exponent p = {p} must lie in [1, ∞)")));
    }
    Ok(())
}

/// Seminorm of the interpolated samples.
///
/// In the difference variable `z = y - x` the double integral is
/// `∫ G(z) |z|^{-2-ps} dz` with `G(z) = ∫ |f(x+z) - f(x)|^p dx` over the
/// overlap of the patch with its translate. Outside the band `|z| < h`
/// (one grid step) this is integrated in polar coordinates with Gauss
/// rules; inside it, the Taylor model `G(z) ≈ |z|^p ∫ |ẑ·∇f|^p dx`, less
/// the strips along the edges that the translate leaves, is integrated in
/// closed radial form.
pub fn besov_seminorm_patch(f: &PatchSamples, s: f64, p: f64) -> Result<f64> {
    check(s, p)?;
    // the seminorm ignores constants; removing one makes constant data exact
    let base = f.values[0];
    let shifted = PatchSamples { values: f.values.iter().map(|v| v - base).collect(), ..f.clone() };
    let f = &shifted;
    let side = f.side;
    let h = f.step();
    let inner = gauss_legendre(24);
    let radial = gauss_legendre(40);
    let angular = gauss_legendre(16);

    // G(z) by tensor Gauss quadrature over the overlap rectangle
    let g_of = |z: [f64; 2]| -> f64 {
        let rx = inner.mapped((-z[0]).max(0.0), side.min(side - z[0]));
        let ry = inner.mapped((-z[1]).max(0.0), side.min(side - z[1]));
        let mut acc = 0.0;
        for (&x, &wx) in rx.nodes.iter().zip(&rx.weights) {
            for (&y, &wy) in ry.nodes.iter().zip(&ry.weights) {
                let diff = f.interpolate(x + z[0], y + z[1]) - f.interpolate(x, y);
                acc += wx * wy * diff.abs().powf(p);
            }
        }
        acc
    };

    // half plane of directions; G(-z) = G(z)
    let mut outer = 0.0;
    for k in 0..4 {
        let a = k as f64 * PI / 4.0;
        let rule: Rule = angular.mapped(a, a + PI / 4.0);
        for (&om, &wom) in rule.nodes.iter().zip(&rule.weights) {
            let (c, sn) = (om.cos(), om.sin());
            let rho_max = side / c.abs().max(sn.abs());
            // ρ = h (ρ_max / h)^t: the power-law decay becomes smooth in t
            let span = (rho_max / h).ln();
            let rr = radial.mapped(0.0, 1.0);
            let mut acc = 0.0;
            for (&t, &wt) in rr.nodes.iter().zip(&rr.weights) {
                let rho = h * (span * t).exp();
                let g = g_of([rho * c, rho * sn]);
                acc += wt * span * rho * g * rho.powf(-1.0 - p * s);
            }
            outer += wom * acc;
        }
    }

    // Taylor band |z| < h: G(z) ≈ ρ^p (A(ω) - ρ B(ω)), where A integrates
    // |ω·∇f|^p over the patch and B over the two edges the translate leaves
    let band_angles = gauss_legendre(32).mapped(0.0, PI);
    let patch = inner.mapped(0.0, side);
    let grads: Vec<[f64; 2]> = patch
        .nodes
        .iter()
        .flat_map(|&x| patch.nodes.iter().map(move |&y| (x, y)))
        .map(|(x, y)| f.gradient(x, y))
        .collect();
    let area_w: Vec<f64> = patch
        .weights
        .iter()
        .flat_map(|&wx| patch.weights.iter().map(move |&wy| wx * wy))
        .collect();
    let edge = |fixed_x: Option<f64>, fixed_y: Option<f64>| -> Vec<[f64; 2]> {
        patch
            .nodes
            .iter()
            .map(|&t| f.gradient(fixed_x.unwrap_or(t), fixed_y.unwrap_or(t)))
            .collect()
    };
    let (left, right, top) = (edge(Some(0.0), None), edge(Some(side), None), edge(None, Some(side)));
    let q = p * (1.0 - s);
    let mut band = 0.0;
    for (&om, &wom) in band_angles.nodes.iter().zip(&band_angles.weights) {
        let (c, sn) = (om.cos(), om.sin());
        let proj = |g: &[f64; 2]| (c * g[0] + sn * g[1]).abs().powf(p);
        let a: f64 = grads.iter().zip(&area_w).map(|(g, w)| w * proj(g)).sum();
        let x_edge = if c > 0.0 { &right } else { &left };
        let bx: f64 = x_edge.iter().zip(&patch.weights).map(|(g, w)| w * proj(g)).sum();
        let by: f64 = top.iter().zip(&patch.weights).map(|(g, w)| w * proj(g)).sum();
        let b = c.abs() * bx + sn * by;
        band += wom * (a * h.powf(q) / q - b * h.powf(q + 1.0) / (q + 1.0));
    }

    Ok((2.0 * (outer + band)).max(0.0).powf(1.0 / p))
}

/// Seminorm of `f(x) = x₁` on the square `[0, L]²`, reduced to an angular
/// integral: with `z = ρ(cos ω, sin ω)`, `G(z) = |z₁|^p (L - |z₁|)(L - |z₂|)`
/// and the radial integral up to `ρ_m = L / max(|cos ω|, |sin ω|)` is a
/// polynomial in `ρ_m`.
pub fn linear_seminorm_exact(side: f64, s: f64, p: f64) -> Result<f64> {
    check(s, p)?;
    let l = side;
    let q = p - 1.0 - p * s;
    let rule = gauss_legendre(64);
    let piece = |a: f64, b: f64| {
        rule.mapped(a, b).integrate(|om| {
            let (c, sn) = (om.cos(), om.sin());
            let rm = l / c.max(sn);
            c.powf(p)
                * (l * l * rm.powf(q + 1.0) / (q + 1.0) - l * (c + sn) * rm.powf(q + 2.0) / (q + 2.0)
                    + c * sn * rm.powf(q + 3.0) / (q + 3.0))
        })
    };
    Ok((4.0 * (piece(0.0, PI / 4.0) + piece(PI / 4.0, PI / 2.0))).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_zero_seminorm() {
        let f = PatchSamples::from_fn(1.0, 8, |_, _| 3.5).unwrap();
        assert_eq!(besov_seminorm_patch(&f, 0.5, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        let f = PatchSamples::from_fn(1.0, 8, |x, _| x).unwrap();
        assert!(besov_seminorm_patch(&f, 0.0, 2.0).is_err());
        assert!(besov_seminorm_patch(&f, 1.0, 2.0).is_err());
        assert!(besov_seminorm_patch(&f, 0.5, 0.5).is_err());
        assert!(PatchSamples::new(1.0, 3, vec![0.0; 9]).is_err());
    }

    #[test]
    fn linear_function_matches_exact_value() {
        for &(s, p) in &[(0.5, 2.0), (0.3, 1.5), (0.7, 3.0)] {
            let exact = linear_seminorm_exact(1.0, s, p).unwrap();
            let f = PatchSamples::from_fn(1.0, 17, |x, _| x).unwrap();
            let v = besov_seminorm_patch(&f, s, p).unwrap();
            assert!((v / exact - 1.0).abs() < 1e-3, "s = {s}, p = {p}: {v} vs {exact}");
        }
    }

    #[test]
    fn homogeneous_in_f() {
        let f = PatchSamples::from_fn(1.0, 12, |x, y| (3.0 * x).sin() * y + x * x).unwrap();
        let a = besov_seminorm_patch(&f, 0.4, 2.0).unwrap();
        let b = besov_seminorm_patch(&f.scaled(2.0), 0.4, 2.0).unwrap();
        assert!((b - 2.0 * a).abs() <= 1e-12 * b);
    }

    #[test]
    fn interpolation_reproduces_cubics() {
        let f = PatchSamples::from_fn(2.0, 9, |x, y| x * x * x - 2.0 * x * y * y + y).unwrap();
        let (x, y) = (0.37, 1.91);
        let exact = x * x * x - 2.0 * x * y * y + y;
        assert!((f.interpolate(x, y) - exact).abs() < 1e-12);
    }
}
