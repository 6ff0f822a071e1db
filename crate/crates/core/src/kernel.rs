//! The Riesz kernel `Γ_s(x) = c(n, s) |x|^{s-n}` and related symbols.
//!
//! The normalization is chosen so that, with the Fourier transform
//! `f̂(ξ) = ∫ f(x) e^{-2πiξ·x} dx`, the transform of `Γ_s` is exactly
//! `|ξ|^{-s}`. The fractional Laplacian then has symbol `(2π|ξ|)^{2α}`, so
//! applying it to a single-layer potential of order `2α` produces the
//! constant `(2π)^{2α}` times the density's surface measure; that constant
//! is irrelevant for harmonicity away from the surface.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Normalization constant `c(n, s) = π^{s - n/2} Γ((n-s)/2) / Γ(s/2)`.
pub fn riesz_constant(n: usize, s: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension n = {n} must be at least 3")));
    }
    let nf = n as f64;
    if !(s > 0.0 && s < nf) {
        return Err(Error::Domain(format!("kernel order s = {s} must lie in (0, {n})")));
    }
    Ok(PI.powf(s - 0.5 * nf) * gamma(0.5 * (nf - s)) / gamma(0.5 * s))
}

/// Constant of the singular-integral form of the fractional Laplacian,
/// `(-Δ)^α v(x) = C/2 ∫ (2v(x) - v(x+y) - v(x-y)) / |y|^{n+2α} dy`,
/// normalized to agree with the symbol `(2π|ξ|)^{2α}`.
pub fn fractional_laplacian_constant(n: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    let nf = n as f64;
    Ok(4f64.powf(alpha) * gamma(0.5 * nf + alpha) / (PI.powf(0.5 * nf) * gamma(-alpha).abs()))
}

/// Symbol `(2π|ξ|)^{2α}` of the fractional Laplacian.
pub fn fractional_symbol(alpha: f64, xi: &[f64]) -> f64 {
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    (2.0 * PI * norm).powf(2.0 * alpha)
}

/// Dimension, order and cached normalization of a Riesz kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    n: usize,
    s: f64,
    c: f64,
    half_exponent: f64,
    shape: Shape,
}

/// Exponents with a cheaper exact evaluation than `powf`.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Shape {
    General,
    InverseSqrt,
    InverseThreeQuarter,
}

impl KernelSpec {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        let c = riesz_constant(n, s)?;
        let half_exponent = 0.5 * (s - n as f64);
        let shape = if half_exponent == -0.5 {
            Shape::InverseSqrt
        } else if half_exponent == -0.75 {
            Shape::InverseThreeQuarter
        } else {
            Shape::General
        };
        Ok(Self { n, s, c, half_exponent, shape })
    }

    /// Three-dimensional kernel of order `s`.
    pub fn order(s: f64) -> Result<Self> {
        Self::new(3, s)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    /// `Γ_s` as a function of the squared distance. No singularity check.
    #[inline]
    pub fn eval_sq(&self, r2: f64) -> f64 {
        match self.shape {
            Shape::InverseSqrt => self.c / r2.sqrt(),
            Shape::InverseThreeQuarter => {
                let r = r2.sqrt();
                self.c / (r * r.sqrt())
            }
            Shape::General => self.c * r2.powf(self.half_exponent),
        }
    }

    /// `Γ_s(x)` for an n-vector `x ≠ 0`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let r2 = self.norm_sq(x)?;
        if r2 == 0.0 {
            return Err(Error::Singularity);
        }
        Ok(self.eval_sq(r2))
    }

    /// `∇Γ_s(x) = c (s-n) |x|^{s-n-2} x`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let r2 = self.norm_sq(x)?;
        if r2 == 0.0 {
            return Err(Error::Singularity);
        }
        let scale = self.c * (self.s - self.n as f64) * r2.powf(self.half_exponent - 1.0);
        Ok(x.iter().map(|v| scale * v).collect())
    }

    fn norm_sq(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, got: x.len() });
        }
        Ok(x.iter().map(|v| v * v).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_adaptive;
    use approx::assert_relative_eq;

    #[test]
    fn constant_examples() {
        assert_relative_eq!(riesz_constant(3, 2.0).unwrap(), PI, max_relative = 1e-14);
        assert_relative_eq!(riesz_constant(3, 1.5).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(riesz_constant(4, 2.0).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn constant_rejects_bad_orders() {
        assert!(riesz_constant(3, 0.0).is_err());
        assert!(riesz_constant(3, 3.0).is_err());
        assert!(riesz_constant(2, 1.0).is_err());
        assert!(KernelSpec::order(-1.0).is_err());
    }

    #[test]
    fn eval_examples() {
        let k2 = KernelSpec::order(2.0).unwrap();
        assert_relative_eq!(k2.eval(&[1.0, 0.0, 0.0]).unwrap(), PI, max_relative = 1e-14);
        let k = KernelSpec::order(1.5).unwrap();
        assert_relative_eq!(k.eval(&[0.0, 4.0, 0.0]).unwrap(), 0.125, max_relative = 1e-14);
        assert!(matches!(k.eval(&[0.0; 3]), Err(Error::Singularity)));
        assert!(k.eval(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn gradient_examples() {
        let k2 = KernelSpec::order(2.0).unwrap();
        let g = k2.gradient(&[1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(g[0], -PI, max_relative = 1e-14);
        assert_eq!(g[1], 0.0);
        assert!(matches!(k2.gradient(&[0.0; 3]), Err(Error::Singularity)));
    }

    #[test]
    fn gradient_matches_central_differences() {
        for &s in &[0.4, 1.2, 1.5, 2.0, 2.7] {
            let k = KernelSpec::order(s).unwrap();
            let x = [0.48, -0.6, 0.64];
            let g = k.gradient(&x).unwrap();
            let h = 1e-4;
            for d in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[d] += h;
                xm[d] -= h;
                let fd = (k.eval(&xp).unwrap() - k.eval(&xm).unwrap()) / (2.0 * h);
                assert_relative_eq!(fd, g[d], max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn fast_paths_match_powf() {
        for &s in &[1.5, 2.0] {
            let k = KernelSpec::order(s).unwrap();
            for &r2 in &[1e-6f64, 0.3, 1.0, 7.5, 1e4] {
                let slow = k.constant() * r2.powf(0.5 * (s - 3.0));
                assert_relative_eq!(k.eval_sq(r2), slow, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn gradient_magnitude_halving() {
        let k = KernelSpec::order(1.3).unwrap();
        let x = [0.3, 0.4, 0.0];
        let x2 = [0.6, 0.8, 0.0];
        let m = |v: Vec<f64>| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let ratio = m(k.gradient(&x2).unwrap()) / m(k.gradient(&x).unwrap());
        assert_relative_eq!(ratio, 2f64.powf(1.3 - 3.0 - 1.0), max_relative = 1e-13);
    }

    #[test]
    fn symbol_examples() {
        assert_relative_eq!(fractional_symbol(0.5, &[1.0 / (2.0 * PI), 0.0, 0.0]), 1.0, max_relative = 1e-14);
        assert_relative_eq!(fractional_symbol(1.0, &[0.0, 1.0, 0.0]), 4.0 * PI * PI, max_relative = 1e-14);
        assert_relative_eq!(fractional_symbol(0.75, &[0.0, 0.0, 2.0]), (4.0 * PI).powf(1.5), max_relative = 1e-14);
        assert_eq!(fractional_symbol(0.75, &[0.0; 3]), 0.0);
    }

    #[test]
    fn gaussian_pairing_pins_normalization() {
        // ∫ Γ_s(y) e^{-π|y|²} dy by radial quadrature against the Parseval value
        // ∫ |ξ|^{-s} e^{-π|ξ|²} dξ = 4π Γ((3-s)/2) / (2 π^{(3-s)/2}).
        for i in 1..30 {
            let s = 0.1 * i as f64;
            let k = KernelSpec::order(s).unwrap();
            // substitute r = v^{1/s} to remove the r^{s-1} endpoint singularity
            let f = |v: f64| {
                if v == 0.0 {
                    return 4.0 * PI * k.constant() / s;
                }
                let r = v.powf(1.0 / s);
                4.0 * PI * k.constant() * (-PI * r * r).exp() / s
            };
            let lhs = integrate_adaptive(f, 0.0, 6f64.powf(s), 1e-15, 1e-13).value;
            let rhs = 4.0 * PI * gamma(0.5 * (3.0 - s)) / (2.0 * PI.powf(0.5 * (3.0 - s)));
            assert_relative_eq!(lhs, rhs, max_relative = 1e-8);
        }
    }

    #[test]
    fn constant_agrees_with_fourier_form() {
        // (2π)^{2α} Γ(n/2-α) / (π^{n/2} 2^{2α} Γ(α)) with s = 2α
        let mut a = 0.51;
        for _ in 0..20 {
            let alt = (2.0 * PI).powf(2.0 * a) * gamma(1.5 - a)
                / (PI.powf(1.5) * 4f64.powf(a) * gamma(a));
            assert_relative_eq!(riesz_constant(3, 2.0 * a).unwrap(), alt, max_relative = 1e-14);
            a += 0.0243;
        }
    }

    #[test]
    fn fractional_laplacian_constant_at_half() {
        // n = 3, α = 1/2: C = 2 Γ(2) / (π^{3/2} |Γ(-1/2)|) = 1/π²
        let c = fractional_laplacian_constant(3, 0.5).unwrap();
        assert_relative_eq!(c, 1.0 / (PI * PI), max_relative = 1e-13);
    }
}
