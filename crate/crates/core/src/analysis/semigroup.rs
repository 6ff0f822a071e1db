//! Convolution of the restricted kernels `Γ_{2α}(·, 0)` and `Γ_{3-2α}(·, 0)`
//! over the plane `ℝ²` compared with `Γ_2(·, 0)`.
//!
//! The restrictions are plane Riesz kernels `|w|^{2α-3}` and `|w|^{-2α}`,
//! so their convolution is again a multiple of `|x'-y'|^{-1}`. Relative to
//! `Γ_2(x'-y', 0) = π/|x'-y'|` that multiple is
//! `K(α) = Γ(α-½) Γ(1-α) / (Γ(3/2-α) Γ(α))`, which equals 1 only in the
//! limit `α → ½` and is computed separately by [`planar_composition_constant`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::kernel::riesz_constant;
use crate::quadrature::{composite_gauss, cutoff, gauss_jacobi_power};

/// Result of one planar convolution check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatSemigroupReport {
    pub alpha: f64,
    pub separation: f64,
    /// `∫_{ℝ²} Γ_{2α}(x'-z', 0) Γ_{3-2α}(y'-z', 0) dz'` by quadrature.
    pub lhs: f64,
    /// `Γ_2(x'-y', 0)`.
    pub rhs: f64,
    /// `lhs / rhs - 1`.
    pub relative_gap: f64,
    /// `K(α)`, the exact value of `lhs / rhs`.
    pub exact_ratio: f64,
    /// `lhs / (K(α) rhs) - 1`: the quadrature error alone.
    pub quadrature_error: f64,
}

/// `K(α) = Γ(α-½) Γ(1-α) / (Γ(3/2-α) Γ(α))`, the exact ratio of the planar
/// convolution of `Γ_{2α}(·,0)` and `Γ_{3-2α}(·,0)` to `Γ_2(·,0)`.
pub fn planar_composition_constant(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(gamma(alpha - 0.5) * gamma(1.0 - alpha) / (gamma(1.5 - alpha) * gamma(alpha)))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} must lie in (1/2, 1)")));
    }
    Ok(())
}

/// Evaluates both sides for points `xp`, `yp` in the plane.
///
/// The integrand depends only on distances, so `x' = 0`, `y' = (d, 0)`.
/// A smooth cutoff `χ(|z - y'| / (d/2))` separates the two singularities:
/// `χ F` is integrated in polar coordinates about `y'` with a Gauss–Jacobi
/// rule for `ρ^{1-2α}`, and `(1-χ) F` in polar coordinates about `x'` with a
/// Gauss–Jacobi rule for `ρ^{2α-2}` near the origin, graded Gauss panels out
/// to `1000 d`, and beyond that the exact far-field series
/// `2π c₁c₂ Σ_k ((α)_k / k!)² d^{2k} / ((2k+1) R^{2k+1})`.
pub fn flat_semigroup_check(alpha: f64, xp: [f64; 2], yp: [f64; 2]) -> Result<FlatSemigroupReport> {
    check_alpha(alpha)?;
    let d = ((xp[0] - yp[0]).powi(2) + (xp[1] - yp[1]).powi(2)).sqrt();
    if d == 0.0 {
        return Err(Error::Singularity);
    }
    let c1 = riesz_constant(3, 2.0 * alpha)?;
    let c2 = riesz_constant(3, 3.0 - 2.0 * alpha)?;
    let a = 0.5 * d;
    let chi = |r: f64| cutoff(r / a);
    // |z - x'|^{2α-3} and |z - y'|^{-2α} with x' = 0, y' = (d, 0)
    let kx = |r2: f64| r2.powf(alpha - 1.5);
    let ky = |r2: f64| r2.powf(-alpha);

    // around y': z = y' + ρ (cos θ, sin θ), symmetric in θ ↦ -θ
    let theta = composite_gauss(0.0, PI, 16, 16);
    let jy = gauss_jacobi_power(30, 1.0 - 2.0 * alpha);
    let mut part_y = 0.0;
    for (&t, &wt) in theta.nodes.iter().zip(&theta.weights) {
        let (c, s) = (t.cos(), t.sin());
        for (&u, &wu) in jy.nodes.iter().zip(&jy.weights) {
            let rho = a * u;
            let zx = d + rho * c;
            let zy = rho * s;
            part_y += wt * wu * a.powf(2.0 - 2.0 * alpha) * chi(rho) * kx(zx * zx + zy * zy);
        }
    }
    part_y *= 2.0;

    // around x': z = ρ (cos θ, sin θ)
    let partner = |rho: f64, c: f64, s: f64| -> f64 {
        let zx = rho * c - d;
        let zy = rho * s;
        let r2 = zx * zx + zy * zy;
        (1.0 - chi(r2.sqrt())) * ky(r2)
    };
    let jx = gauss_jacobi_power(30, 2.0 * alpha - 2.0);
    let middle = composite_gauss(a, 3.0 * a, 24, 16);
    let far_end = 1000.0 * d;
    let graded = composite_gauss(0.0, (far_end / (3.0 * a)).ln(), 48, 16);
    let mut part_x = 0.0;
    for (&t, &wt) in theta.nodes.iter().zip(&theta.weights) {
        let (c, s) = (t.cos(), t.sin());
        let mut acc = 0.0;
        for (&u, &wu) in jx.nodes.iter().zip(&jx.weights) {
            let rho = a * u;
            acc += wu * a.powf(2.0 * alpha - 1.0) * partner(rho, c, s);
        }
        acc += middle.integrate(|rho| rho.powf(2.0 * alpha - 2.0) * partner(rho, c, s));
        acc += graded.integrate(|v| {
            let rho = 3.0 * a * v.exp();
            rho * rho.powf(2.0 * alpha - 2.0) * partner(rho, c, s)
        });
        part_x += wt * acc;
    }
    part_x *= 2.0;

    // far-field series beyond R
    let mut tail = 0.0;
    let mut poch = 1.0;
    let ratio = d / far_end;
    for k in 0..20 {
        if k > 0 {
            poch *= (alpha + (k - 1) as f64) / k as f64;
        }
        tail += poch * poch * ratio.powi(2 * k) / (2 * k + 1) as f64;
    }
    tail *= 2.0 * PI / far_end;

    let lhs = c1 * c2 * (part_y + part_x + tail);
    let rhs = riesz_constant(3, 2.0)? / d;
    let exact_ratio = planar_composition_constant(alpha)?;
    Ok(FlatSemigroupReport {
        alpha,
        separation: d,
        lhs,
        rhs,
        relative_gap: lhs / rhs - 1.0,
        exact_ratio,
        quadrature_error: lhs / (exact_ratio * rhs) - 1.0,
    })
}

/// Plane Riesz convolution constant used to cross-check `K(α)`:
/// `|x|^{-a} * |x|^{-b} = π Γ(1-a/2) Γ(1-b/2) Γ((a+b)/2-1)
/// / (Γ(a/2) Γ(b/2) Γ(2-(a+b)/2)) |x|^{2-a-b}` in ℝ².
pub fn plane_convolution_constant(a: f64, b: f64) -> f64 {
    PI * gamma(1.0 - 0.5 * a) * gamma(1.0 - 0.5 * b) * gamma(0.5 * (a + b) - 1.0)
        / (gamma(0.5 * a) * gamma(0.5 * b) * gamma(2.0 - 0.5 * (a + b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ratio_constant_from_plane_convolution() {
        for &alpha in &[0.55, 0.6, 0.75, 0.9, 0.97] {
            let c1 = riesz_constant(3, 2.0 * alpha).unwrap();
            let c2 = riesz_constant(3, 3.0 - 2.0 * alpha).unwrap();
            let k = c1 * c2 * plane_convolution_constant(3.0 - 2.0 * alpha, 2.0 * alpha) / PI;
            assert_relative_eq!(k, planar_composition_constant(alpha).unwrap(), max_relative = 1e-12);
        }
        assert_relative_eq!(planar_composition_constant(0.75).unwrap(), 8.753758, max_relative = 1e-6);
    }

    #[test]
    fn quadrature_matches_exact_ratio() {
        for &(alpha, d) in &[(0.6, 1.0), (0.75, 1.0), (0.9, 2.0), (0.75, 0.3)] {
            let r = flat_semigroup_check(alpha, [0.0, 0.0], [d, 0.0]).unwrap();
            assert!(r.quadrature_error.abs() < 1e-8, "{r:?}");
        }
    }

    #[test]
    fn rhs_and_symmetry() {
        let r1 = flat_semigroup_check(0.75, [0.2, -0.1], [1.2, -0.1]).unwrap();
        let r2 = flat_semigroup_check(0.75, [1.2, -0.1], [0.2, -0.1]).unwrap();
        assert_relative_eq!(r1.rhs, PI, max_relative = 1e-12);
        assert!((r1.lhs - r2.lhs).abs() <= 1e-10 * r1.lhs);
        let r3 = flat_semigroup_check(0.75, [0.0, 0.0], [0.0, 2.0]).unwrap();
        assert_relative_eq!(r3.rhs, PI / 2.0, max_relative = 1e-12);
        assert!(matches!(flat_semigroup_check(0.75, [1.0, 1.0], [1.0, 1.0]), Err(Error::Singularity)));
    }
}
