//! Analytic oracles and structural diagnostics.

pub mod besov;
pub mod composition;
pub mod funk_hecke;
pub mod riesz;
pub mod semigroup;
pub mod sht;
pub mod sobolev;

pub use besov::{besov_seminorm_patch, linear_seminorm_exact, PatchSamples};
pub use composition::{composition_spectrum_report, CompositionReport, CompositionRow};
pub use funk_hecke::{funk_hecke_eigenvalue, funk_hecke_table};
pub use semigroup::{flat_semigroup_check, planar_composition_constant, FlatSemigroupReport};
pub use sht::{real_harmonic, sht_forward, sht_inverse, SpectralCoeffs};
pub use sobolev::{frozen_gain_envelope, mapping_gains, sobolev_weight, spectral_sobolev_norm, MappingGains};
pub use riesz::{
    fourier_gaussian_check, gaussian_riesz_oracle, radial_riesz_potential, riesz_potential_apply,
    riesz_potential_apply_with, riesz_semigroup_check, FourierGaussianReport, RieszParams, RieszSemigroupReport,
    SemigroupGrids,
};
