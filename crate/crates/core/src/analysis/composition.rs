//! Spectrum of the composition `S_{2α} S_{3-2α}` against `S_2` on the unit
//! sphere, from the Funk–Hecke eigenvalues.

use serde::{Deserialize, Serialize};

use crate::analysis::funk_hecke::funk_hecke_table;
use crate::analysis::semigroup::planar_composition_constant;
use crate::error::{Error, Result};
use crate::field::least_squares_line;

/// One degree of the composition table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionRow {
    pub l: usize,
    pub lambda_2a: f64,
    pub lambda_3m2a: f64,
    pub lambda_2: f64,
    /// `λ_ℓ(2α) λ_ℓ(3-2α) / λ_ℓ(2)`.
    pub ratio: f64,
}

/// Composition table with log-log decay fits over `fit_from ≤ ℓ ≤ lmax`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub alpha: f64,
    pub lmax: usize,
    pub fit_from: usize,
    pub rows: Vec<CompositionRow>,
    /// Slope of `log λ_ℓ(2)` against `log(ℓ + ½)`.
    pub reference_slope: f64,
    /// Slope of `log |λ_ℓ(2α) λ_ℓ(3-2α) - λ_ℓ(2)|`.
    pub difference_slope: f64,
    /// `reference_slope - difference_slope`: how much faster the difference
    /// decays than `λ_ℓ(2)`.
    pub slope_gap: f64,
    /// Limit of `ratio` as `ℓ → ∞`, the planar constant `K(α)`.
    pub limit_ratio: f64,
    /// Slope of `log |λ_ℓ(2α) λ_ℓ(3-2α) - K(α) λ_ℓ(2)|`.
    pub rescaled_difference_slope: f64,
    /// `reference_slope - rescaled_difference_slope`.
    pub rescaled_slope_gap: f64,
}

/// Builds the table for `0 ≤ ℓ ≤ lmax` (`lmax ≥ 4`) and fits the decay over
/// `ℓ ≥ lmax / 4` (at least 2), where the asymptotic regime has set in.
pub fn composition_spectrum_report(alpha: f64, lmax: usize) -> Result<CompositionReport> {
    if lmax < 4 {
        return Err(Error::Domain(format!("lmax = {lmax} must be at least 4")));
    }
    let limit_ratio = planar_composition_constant(alpha)?;
    let a = funk_hecke_table(2.0 * alpha, lmax)?;
    let b = funk_hecke_table(3.0 - 2.0 * alpha, lmax)?;
    let c = funk_hecke_table(2.0, lmax)?;
    let rows: Vec<CompositionRow> = (0..=lmax)
        .map(|l| CompositionRow {
            l,
            lambda_2a: a[l],
            lambda_3m2a: b[l],
            lambda_2: c[l],
            ratio: a[l] * b[l] / c[l],
        })
        .collect();
    let fit_from = (lmax / 4).max(2);
    let fit = |f: &dyn Fn(&CompositionRow) -> f64| -> f64 {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            rows[fit_from..].iter().map(|r| ((r.l as f64 + 0.5).ln(), f(r).abs().ln())).unzip();
        least_squares_line(&xs, &ys).0
    };
    let reference_slope = fit(&|r| r.lambda_2);
    let difference_slope = fit(&|r| r.lambda_2a * r.lambda_3m2a - r.lambda_2);
    let rescaled_difference_slope = fit(&|r| r.lambda_2a * r.lambda_3m2a - limit_ratio * r.lambda_2);
    Ok(CompositionReport {
        alpha,
        lmax,
        fit_from,
        rows,
        reference_slope,
        difference_slope,
        slope_gap: reference_slope - difference_slope,
        limit_ratio,
        rescaled_difference_slope,
        rescaled_slope_gap: reference_slope - rescaled_difference_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn table_columns() {
        let r = composition_spectrum_report(0.75, 10).unwrap();
        for row in &r.rows {
            assert!(row.lambda_2a > 0.0 && row.lambda_3m2a > 0.0 && row.lambda_2 > 0.0);
            assert_relative_eq!(row.lambda_2, 4.0 * PI * PI / (2 * row.l + 1) as f64, max_relative = 1e-10);
        }
        assert!(composition_spectrum_report(0.75, 3).is_err());
    }

    #[test]
    fn ratio_tends_to_planar_constant() {
        let r = composition_spectrum_report(0.75, 40).unwrap();
        let last = r.rows.last().unwrap().ratio;
        assert!((last / r.limit_ratio - 1.0).abs() < 1e-4);
        assert_relative_eq!(r.reference_slope, -1.0, epsilon = 0.02);
    }

    #[test]
    fn frozen_ratios_at_three_quarters() {
        // high-precision reference values of λ_ℓ(1.5)² / λ_ℓ(2)
        let frozen = [
            (0, 8.0),
            (5, 8.7447658956841814),
            (10, 8.7512810878896645),
            (15, 8.7526206475899784),
            (20, 8.7531077929626161),
            (25, 8.7533378800523332),
            (30, 8.7534644491499558),
            (35, 8.7535414264615026),
            (40, 8.7535917019997656),
        ];
        let r = composition_spectrum_report(0.75, 40).unwrap();
        for (l, value) in frozen {
            assert_relative_eq!(r.rows[l].ratio, value, max_relative = 1e-12);
        }
    }
}
