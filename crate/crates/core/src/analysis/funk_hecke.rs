//! Eigenvalues of `S_s` on the unit sphere.
//!
//! The kernel `Γ_s(P - Q)` depends only on `t = P·Q` (`|P-Q|² = 2 - 2t`), so
//! by the Funk–Hecke formula every spherical harmonic of degree `ℓ` is an
//! eigenfunction with eigenvalue
//! `λ_ℓ(s) = 2π c(3,s) ∫_{-1}^{1} (2-2t)^{(s-3)/2} P_ℓ(t) dt`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::riesz_constant;
use crate::quadrature::{integrate_adaptive, legendre};

/// `λ_ℓ(s)` for `1 < s ≤ 2` by adaptive Gauss–Kronrod quadrature.
///
/// Substituting `1 - t = v^k` with `k = 2/(s-1)` cancels the endpoint
/// singularity exactly: the integrand becomes `k 2^{(s-3)/2} P_ℓ(1 - v^k)`,
/// bounded and continuous on `[0, 2^{1/k}]`.
pub fn funk_hecke_eigenvalue(s: f64, l: usize) -> Result<f64> {
    if s <= 1.0 {
        return Err(Error::NonIntegrable(s));
    }
    if s > 2.0 {
        return Err(Error::Domain(format!("kernel order s = {s} must lie in (1, 2]")));
    }
    let c = riesz_constant(3, s)?;
    let k = 2.0 / (s - 1.0);
    let scale = k * 2f64.powf(0.5 * (s - 3.0));
    let upper = 2f64.powf(1.0 / k);
    // split the range so that high-degree oscillations are resolved evenly
    let pieces = 1 + l / 4;
    let mut total = 0.0;
    for i in 0..pieces {
        let a = upper * i as f64 / pieces as f64;
        let b = upper * (i + 1) as f64 / pieces as f64;
        let r = integrate_adaptive(|v| legendre(l, 1.0 - v.powf(k)), a, b, 1e-15, 1e-13);
        total += r.value;
    }
    Ok(2.0 * PI * c * scale * total)
}

/// `λ_ℓ(s)` for every `ℓ ≤ lmax`.
pub fn funk_hecke_table(s: f64, lmax: usize) -> Result<Vec<f64>> {
    (0..=lmax).map(|l| funk_hecke_eigenvalue(s, l)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::function::gamma::ln_gamma;

    /// `∫_{-1}^{1} (1-t)^a P_ℓ(t) dt = 2^{a+1} Γ(a+1) Π_{k<ℓ}(k-a) / Γ(a+ℓ+2)`.
    fn closed_form(s: f64, l: usize) -> f64 {
        let a = 0.5 * (s - 3.0);
        let falling: f64 = (0..l).map(|k| k as f64 - a).product();
        let mag = ((a + 1.0) * 2f64.ln() + ln_gamma(a + 1.0) - ln_gamma(a + l as f64 + 2.0)).exp();
        2.0 * PI * riesz_constant(3, s).unwrap() * 2f64.powf(a) * mag * falling
    }

    #[test]
    fn newtonian_spectrum() {
        for l in 0..=20 {
            let v = funk_hecke_eigenvalue(2.0, l).unwrap();
            assert_relative_eq!(v, 4.0 * PI * PI / (2 * l + 1) as f64, max_relative = 1e-10);
        }
    }

    #[test]
    fn degree_zero_closed_form() {
        for &s in &[1.1, 1.2, 1.5, 1.8, 2.0] {
            let exact = 2.0 * PI * riesz_constant(3, s).unwrap() * 2f64.powf(s - 1.0) / (s - 1.0);
            assert_relative_eq!(funk_hecke_eigenvalue(s, 0).unwrap(), exact, max_relative = 1e-11);
        }
        assert_relative_eq!(
            funk_hecke_eigenvalue(1.5, 0).unwrap(),
            4.0 * 2f64.sqrt() * PI,
            max_relative = 1e-12
        );
    }

    #[test]
    fn matches_gamma_closed_form() {
        for &s in &[1.2, 1.5, 1.8, 1.5001] {
            for l in [1, 2, 5, 8, 17, 30, 40] {
                let v = funk_hecke_eigenvalue(s, l).unwrap();
                assert_relative_eq!(v, closed_form(s, l), max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn rejects_divergent_orders() {
        assert!(matches!(funk_hecke_eigenvalue(1.0, 3), Err(Error::NonIntegrable(_))));
        assert!(funk_hecke_eigenvalue(2.5, 0).is_err());
    }

    #[test]
    fn eigenvalues_positive_and_decreasing() {
        let t = funk_hecke_table(1.5, 40).unwrap();
        assert!(t.iter().all(|v| *v > 0.0));
        assert!(t.windows(2).all(|w| w[1] < w[0]));
    }
}
