//! Experiment configuration: one JSON document per run, validated before
//! any work starts.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fraclayer::field::GridSpec;
use fraclayer::analysis::riesz::SemigroupGrids;
use fraclayer::{CorrectionParams, Point, SolverOptions, Surface};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Named diagnostics runnable through `check`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    FunkHecke,
    Spectral,
    ClosedForm,
    Conditioning,
    Symmetry,
    SemigroupFlat,
    Composition,
    Weak,
    RieszSemigroup,
    FourierGaussian,
    NormEquivalence,
    Besov,
}

impl CheckName {
    pub const ALL: [CheckName; 12] = [
        CheckName::FunkHecke,
        CheckName::Spectral,
        CheckName::ClosedForm,
        CheckName::Conditioning,
        CheckName::Symmetry,
        CheckName::SemigroupFlat,
        CheckName::Composition,
        CheckName::Weak,
        CheckName::RieszSemigroup,
        CheckName::FourierGaussian,
        CheckName::NormEquivalence,
        CheckName::Besov,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CheckName::FunkHecke => "funk-hecke",
            CheckName::Spectral => "spectral",
            CheckName::ClosedForm => "closed-form",
            CheckName::Conditioning => "conditioning",
            CheckName::Symmetry => "symmetry",
            CheckName::SemigroupFlat => "semigroup-flat",
            CheckName::Composition => "composition",
            CheckName::Weak => "weak",
            CheckName::RieszSemigroup => "riesz-semigroup",
            CheckName::FourierGaussian => "fourier-gaussian",
            CheckName::NormEquivalence => "norm-equivalence",
            CheckName::Besov => "besov",
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        CheckName::ALL.iter().copied().find(|c| c.as_str() == s).ok_or_else(|| {
            let known: Vec<&str> = CheckName::ALL.iter().map(CheckName::as_str).collect();
            CliError::Schema(format!("unknown check {s:?}; known checks: {}", known.join(", ")))
        })
    }
}

/// Mesh resolution: Gauss colatitudes × uniform longitudes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    pub nlat: usize,
    pub nlon: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { nlat: 32, nlon: 64 }
    }
}

impl Resolution {
    /// Same aspect ratio at `nlat` colatitudes.
    pub fn with_nlat(&self, nlat: usize) -> Self {
        Self { nlat, nlon: (nlat * self.nlon).div_ceil(self.nlat) }
    }
}

/// A density or boundary datum on the mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Datum {
    Constant { value: f64 },
    /// `amplitude · Y_ℓm(θ, φ)` in reference angles.
    Harmonic { l: usize, m: i64, amplitude: f64 },
    /// `1 + Σ_{1 ≤ ℓ ≤ lmax} c_ℓm Y_ℓm` with seeded `c_ℓm ∈ [-1, 1] / (1+ℓ)²`.
    Random { lmax: usize },
    /// Named column of a mesh CSV written by `mesh` or `solve`.
    File { path: PathBuf, column: String },
}

/// Settings of the spectral accuracy check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralSettings {
    /// Largest degree of the harmonic test densities.
    pub lmax: usize,
    /// Coarse resolution (nlat) for the refinement ratio.
    pub coarse_nlat: usize,
}

impl Default for SpectralSettings {
    fn default() -> Self {
        Self { lmax: 8, coarse_nlat: 16 }
    }
}

/// Evaluation points of `field`, the closed-form check and `bvp`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldSettings {
    /// Distances from the surface center along `direction`.
    pub radii: Vec<f64>,
    pub direction: Point,
    /// Extra evaluation points.
    pub points: Vec<Point>,
    /// Far-field radii of the decay fit.
    pub decay_radii: Vec<f64>,
}

impl Default for FieldSettings {
    fn default() -> Self {
        Self {
            radii: vec![0.0, 0.5, 1.5, 2.0],
            direction: [0.48, 0.6, 0.64],
            points: Vec::new(),
            decay_radii: vec![10.0, 20.0, 40.0, 80.0],
        }
    }
}

/// Settings of the conditioning check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConditioningSettings {
    pub nlats: Vec<usize>,
    /// Orders at which the growth between the first and last `nlats` is
    /// asserted; the others are reported only.
    pub growth_alphas: Vec<f64>,
}

impl Default for ConditioningSettings {
    fn default() -> Self {
        Self { nlats: vec![16, 32], growth_alphas: vec![0.75] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlatSettings {
    pub separations: Vec<f64>,
}

impl Default for FlatSettings {
    fn default() -> Self {
        Self { separations: vec![1.0, 2.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompositionSettings {
    /// Degree range of the eigenvalue table.
    pub lmax: usize,
    /// Degree range of the matrix-level comparison.
    pub compose_lmax: usize,
}

impl Default for CompositionSettings {
    fn default() -> Self {
        Self { lmax: 40, compose_lmax: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeakSettings {
    /// Mesh resolution of the potential.
    pub nlat: usize,
    pub bump_centers: Vec<Point>,
    pub bump_radius: f64,
    pub grid: GridSpec,
}

impl Default for WeakSettings {
    fn default() -> Self {
        Self { nlat: 16, bump_centers: vec![[0.0; 3], [2.0, 0.0, 0.0]], bump_radius: 0.5, grid: GridSpec::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RieszSettings {
    pub s1: f64,
    pub s2: f64,
    pub bump_center: Point,
    pub bump_radius: f64,
    /// Number of seeded evaluation points within `1.5 ×` the bump radius.
    pub points: usize,
    pub grids: SemigroupGrids,
    /// Orders of the Gaussian Fourier cross-check.
    pub gaussian_orders: Vec<f64>,
    pub gaussian_radii: Vec<f64>,
    pub gaussian_n: usize,
}

impl Default for RieszSettings {
    fn default() -> Self {
        Self {
            s1: 0.6,
            s2: 0.8,
            bump_center: [0.0; 3],
            bump_radius: 1.0,
            points: 5,
            grids: SemigroupGrids::default(),
            gaussian_orders: vec![0.6, 1.4],
            gaussian_radii: vec![0.0, 0.5, 1.0, 2.0],
            gaussian_n: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BesovSettings {
    pub side: f64,
    pub n: usize,
    /// `(s, p)` pairs.
    pub orders: Vec<(f64, f64)>,
}

impl Default for BesovSettings {
    fn default() -> Self {
        Self { side: 1.0, n: 17, orders: vec![(0.5, 2.0), (0.3, 1.5), (0.7, 3.0)] }
    }
}

/// Quantity tracked by `convergence`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceQuantity {
    /// Worst Rayleigh-quotient error against the eigenvalue oracle.
    Spectral,
    /// Worst nodal error of `A·1` against the closed-form sphere trace.
    Trace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceSettings {
    pub quantity: ConvergenceQuantity,
    pub nlats: Vec<usize>,
}

impl Default for ConvergenceSettings {
    fn default() -> Self {
        Self { quantity: ConvergenceQuantity::Spectral, nlats: vec![16, 24, 32, 48] }
    }
}

/// Pass thresholds; every comparison is strict (`value < limit`) unless the
/// name says `min`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub funk_hecke: f64,
    pub spectral: f64,
    pub spectral_ratio_min: f64,
    pub closed_form: f64,
    pub trace: f64,
    pub solve_residual: f64,
    pub bvp_density: f64,
    pub bvp_field: f64,
    pub decay_exponent: f64,
    pub singular_ratio_min: f64,
    pub condition_growth_factor: f64,
    pub far_field_asymmetry: f64,
    pub near_field_asymmetry: f64,
    pub flat_semigroup: f64,
    pub flat_rhs: f64,
    pub composition_slope_gap_min: f64,
    pub compose: f64,
    pub weak_residual: f64,
    pub riesz_semigroup: f64,
    pub fourier_gaussian: f64,
    pub gain_envelope: f64,
    pub besov_linear: f64,
    pub besov_homogeneity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            funk_hecke: 1e-10,
            spectral: 1e-3,
            spectral_ratio_min: 2.0,
            closed_form: 1e-4,
            trace: 1e-3,
            solve_residual: 1e-8,
            bvp_density: 1e-3,
            bvp_field: 1e-3,
            decay_exponent: 0.02,
            singular_ratio_min: 1e-8,
            condition_growth_factor: 1.5,
            far_field_asymmetry: 1e-12,
            near_field_asymmetry: 1e-3,
            flat_semigroup: 1e-4,
            flat_rhs: 1e-12,
            composition_slope_gap_min: 0.8,
            compose: 5e-3,
            weak_residual: 1e-2,
            riesz_semigroup: 1e-3,
            fourier_gaussian: 1e-4,
            gain_envelope: 1e-10,
            besov_linear: 1e-2,
            besov_homogeneity: 1e-12,
        }
    }
}

/// One experiment. Every field has a default, so `{}` is a valid config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Order of the fractional Laplacian; the kernel order is `2α`.
    pub alpha: f64,
    /// Orders swept by the multi-order checks.
    pub alphas: Vec<f64>,
    pub surface: Surface,
    pub resolution: Resolution,
    pub correction: CorrectionParams,
    /// Operator dump from `assemble`, used instead of assembling when its
    /// mesh fingerprint and order match.
    pub operator_file: Option<PathBuf>,
    pub solver: SolverOptions,
    /// Checks run by `check` when none are named on the command line.
    pub checks: Vec<CheckName>,
    pub output: PathBuf,
    pub seed: u64,
    /// Right-hand side of `solve` and `bvp`.
    pub boundary: Datum,
    /// Density of `field`.
    pub density: Datum,
    pub field: FieldSettings,
    pub funk_hecke_lmax: usize,
    pub spectral: SpectralSettings,
    pub conditioning: ConditioningSettings,
    pub flat: FlatSettings,
    pub composition: CompositionSettings,
    pub weak: WeakSettings,
    pub riesz: RieszSettings,
    pub norm_lmax: usize,
    pub besov: BesovSettings,
    pub convergence: ConvergenceSettings,
    pub tolerances: Tolerances,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            alpha: 0.75,
            alphas: vec![0.6, 0.75, 0.9],
            surface: Surface::Sphere { center: [0.0; 3], radius: 1.0 },
            resolution: Resolution::default(),
            correction: CorrectionParams::default(),
            operator_file: None,
            solver: SolverOptions::default(),
            checks: Vec::new(),
            output: PathBuf::from("out"),
            seed: 0,
            boundary: Datum::Constant { value: 4.0 * std::f64::consts::SQRT_2 * std::f64::consts::PI },
            density: Datum::Constant { value: 1.0 },
            field: FieldSettings::default(),
            funk_hecke_lmax: 20,
            spectral: SpectralSettings::default(),
            conditioning: ConditioningSettings::default(),
            flat: FlatSettings::default(),
            composition: CompositionSettings::default(),
            weak: WeakSettings::default(),
            riesz: RieszSettings::default(),
            norm_lmax: 40,
            besov: BesovSettings::default(),
            convergence: ConvergenceSettings::default(),
            tolerances: Tolerances::default(),
        }
    }
}

fn in_operator_range(alpha: f64) -> bool {
    alpha > 0.5 && alpha < 1.0
}

impl ExperimentConfig {
    /// Parses and validates a JSON config.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: Self = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Schema(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Schema(msg) => CliError::Schema(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks the invariants that serde cannot express.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Schema(msg));
        if !in_operator_range(self.alpha) {
            return bad(format!("alpha = {} must lie in (1/2, 1)", self.alpha));
        }
        if let Some(a) = self.alphas.iter().find(|a| !in_operator_range(**a)) {
            return bad(format!("alphas entry {a} must lie in (1/2, 1)"));
        }
        if let Some(a) = self.conditioning.growth_alphas.iter().find(|a| !self.alphas.contains(a)) {
            return bad(format!("conditioning.growth_alphas entry {a} is not in alphas"));
        }
        self.surface.validate().map_err(|e| CliError::Schema(e.to_string()))?;
        let Resolution { nlat, nlon } = self.resolution;
        if nlat < 4 || nlon < 4 {
            return bad(format!("resolution {nlat}x{nlon} must be at least 4x4"));
        }
        if self.spectral.coarse_nlat < 4 {
            return bad("spectral.coarse_nlat must be at least 4".into());
        }
        if self.conditioning.nlats.len() < 2 {
            return bad("conditioning.nlats needs at least two resolutions".into());
        }
        if self.convergence.nlats.len() < 2 {
            return bad("convergence.nlats needs at least two resolutions".into());
        }
        if self.field.decay_radii.len() < 2 {
            return bad("field.decay_radii needs at least two radii".into());
        }
        if self.composition.lmax < 4 {
            return bad("composition.lmax must be at least 4".into());
        }
        if self.riesz.points == 0 {
            return bad("riesz.points must be positive".into());
        }
        let tol = serde_json::to_value(&self.tolerances).map_err(|e| CliError::Schema(e.to_string()))?;
        if let Some((name, _)) = tol
            .as_object()
            .into_iter()
            .flatten()
            .find(|(_, v)| !v.as_f64().is_some_and(|x| x.is_finite() && x >= 0.0))
        {
            return bad(format!("tolerance {name} must be a finite non-negative number"));
        }
        Ok(())
    }

    /// Radius of the configured sphere, if it is one.
    pub fn sphere(&self) -> Option<(Point, f64)> {
        match self.surface {
            Surface::Sphere { center, radius } => Some((center, radius)),
            Surface::Ellipsoid { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn default_round_trips_through_json() {
        let c = ExperimentConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn schema_violations_are_rejected() {
        for text in [
            r#"{"alpha": 0.4}"#,
            r#"{"alphas": [0.75, 1.2]}"#,
            r#"{"unknown": 1}"#,
            r#"{"tolerances": {"spectral": -1}}"#,
            r#"{"tolerances": {"nonsense": 1}}"#,
            r#"{"checks": ["funk-hecke", "nope"]}"#,
            r#"{"surface": {"type": "torus"}}"#,
            r#"{"surface": {"type": "sphere", "center": [0, 0, 0], "radius": -1}}"#,
            r#"{"resolution": {"nlat": 2, "nlon": 4}}"#,
            r#"{"boundary": {"kind": "harmonic", "l": 1}}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(text), Err(CliError::Schema(_))), "{text}");
        }
    }

    #[test]
    fn check_names_parse() {
        for c in CheckName::ALL {
            assert_eq!(c.as_str().parse::<CheckName>().unwrap(), c);
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{c}\""));
        }
        assert!("funk_hecke".parse::<CheckName>().is_err());
    }

    #[test]
    fn resolution_keeps_aspect_ratio() {
        assert_eq!(Resolution::default().with_nlat(16), Resolution { nlat: 16, nlon: 32 });
        assert_eq!(Resolution { nlat: 8, nlon: 12 }.with_nlat(16), Resolution { nlat: 16, nlon: 24 });
    }
}
