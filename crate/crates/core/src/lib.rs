//! Single-layer operators with Riesz kernels on closed surfaces in ℝ³,
//! their discretization, solvers, exterior potentials and the diagnostics
//! used to validate them.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod assembly;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod quadrature;
pub mod solve;
pub mod surface;

pub use analysis::{
    besov_seminorm_patch, composition_spectrum_report, flat_semigroup_check, fourier_gaussian_check,
    funk_hecke_eigenvalue, funk_hecke_table, mapping_gains, riesz_potential_apply, riesz_semigroup_check, sht_forward,
    sht_inverse, spectral_sobolev_norm, CompositionReport, FlatSemigroupReport, FourierGaussianReport, MappingGains,
    PatchSamples, RieszSemigroupReport, SpectralCoeffs,
};
pub use assembly::{compose, BoundaryOperator, CorrectionInfo, CorrectionParams, SymmetryReport};
pub use error::{Error, Result};
pub use field::{
    decay_fit, eval_potential, frac_laplacian_bump, weak_residual, BumpSpec, DecayFit, FieldQuadrature, FieldSample,
    GridSpec, WeakResidualReport,
};
pub use grid::Grid3;
pub use kernel::{fractional_laplacian_constant, fractional_symbol, riesz_constant, KernelSpec};
pub use surface::{Density, Point, Surface, SurfaceMesh};
pub use solve::{
    condition_report, definiteness, solve_density, ConditionReport, DefinitenessReport, SolveMethod, SolveReport,
    SolverOptions,
};
