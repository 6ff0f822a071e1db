//! Spectral Sobolev norms on the unit sphere and the degree-wise mapping
//! constants of `S_s` between them.

use serde::{Deserialize, Serialize};

use crate::analysis::funk_hecke::funk_hecke_table;
use crate::analysis::sht::SpectralCoeffs;
use crate::error::{Error, Result};

/// `(Σ (1 + ℓ(ℓ+1))^s |φ̂_{ℓm}|²)^{1/2}` for `-2 ≤ s ≤ 2`.
pub fn spectral_sobolev_norm(coeffs: &SpectralCoeffs, s: f64) -> Result<f64> {
    if !(-2.0..=2.0).contains(&s) {
        return Err(Error::Domain(format!("smoothness s = {s} must lie in [-2, 2]")));
    }
    let total: f64 = (0..=coeffs.lmax())
        .map(|l| sobolev_weight(l, s).powi(2) * coeffs.degree_power(l))
        .sum();
    Ok(total.sqrt())
}

/// `(1 + ℓ(ℓ+1))^{s/2}`, the norm weight of degree `ℓ`.
#[inline]
pub fn sobolev_weight(l: usize, s: f64) -> f64 {
    (1.0 + (l * (l + 1)) as f64).powf(0.5 * s)
}

/// Degree-wise gain `μ_ℓ = λ_ℓ(2α) (1 + ℓ(ℓ+1))^{(2α-1)/2}` of the boundary
/// operator as a map `L² → H^{2α-1}`, and its extremes over `ℓ ≤ lmax`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappingGains {
    pub alpha: f64,
    pub gains: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
}

/// Envelope `[lower, upper]` of the gains over `ℓ ≤ 40`, from a
/// high-precision evaluation of the closed-form eigenvalues
/// `c(3,s) 2^{s-1} π Γ((s-1)/2) Γ(ℓ + (3-s)/2) / (Γ((3-s)/2) Γ(ℓ + (s+1)/2))`;
/// the gains decrease
/// monotonically, so `upper` is attained at `ℓ = 0` and `lower` at `ℓ = 40`.
pub fn frozen_gain_envelope(alpha: f64) -> Option<(f64, f64)> {
    const TABLE: [(f64, f64, f64); 3] = [
        (0.6, 16.353795112226388, 18.369061898163925),
        (0.75, 13.146424362244271, 17.771531752633466),
        (0.9, 16.008882361139975, 26.864748063361562),
    ];
    TABLE.iter().find(|(a, _, _)| (a - alpha).abs() < 1e-12).map(|&(_, lo, hi)| (lo, hi))
}

pub fn mapping_gains(alpha: f64, lmax: usize) -> Result<MappingGains> {
    let s = 2.0 * alpha;
    let lambdas = funk_hecke_table(s, lmax)?;
    let gains: Vec<f64> = lambdas
        .iter()
        .enumerate()
        .map(|(l, lam)| lam * sobolev_weight(l, s - 1.0))
        .collect();
    let lower = gains.iter().cloned().fold(f64::INFINITY, f64::min);
    let upper = gains.iter().cloned().fold(0.0, f64::max);
    Ok(MappingGains { alpha, gains, lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_order_is_l2() {
        let mut c = SpectralCoeffs::zeros(3);
        c.set(0, 0, 3.0);
        c.set(2, -1, 4.0);
        assert_relative_eq!(spectral_sobolev_norm(&c, 0.0).unwrap(), 5.0, max_relative = 1e-15);
    }

    #[test]
    fn single_mode_weight() {
        for &s in &[-2.0, -0.5, 0.7, 2.0] {
            let mut c = SpectralCoeffs::zeros(6);
            c.set(5, 0, 1.0);
            assert_relative_eq!(spectral_sobolev_norm(&c, s).unwrap(), 31f64.powf(0.5 * s), max_relative = 1e-14);
        }
        assert!(spectral_sobolev_norm(&SpectralCoeffs::zeros(1), 2.5).is_err());
    }

    #[test]
    fn gains_are_positive_and_bounded() {
        let g = mapping_gains(0.75, 20).unwrap();
        assert!(g.lower > 0.0 && g.upper.is_finite());
        assert!(g.gains.iter().all(|&v| v >= g.lower && v <= g.upper));
    }

    #[test]
    fn gains_match_frozen_envelope() {
        for &alpha in &[0.6, 0.75, 0.9] {
            let (lo, hi) = frozen_gain_envelope(alpha).unwrap();
            let g = mapping_gains(alpha, 40).unwrap();
            assert_relative_eq!(g.lower, lo, max_relative = 1e-10);
            assert_relative_eq!(g.upper, hi, max_relative = 1e-10);
            assert!(g.gains.windows(2).all(|w| w[1] < w[0]));
        }
        assert!(frozen_gain_envelope(0.7).is_none());
    }
}
