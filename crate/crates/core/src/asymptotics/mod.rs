//! Numerical laboratory for the discrete-to-continuum limit: sampling
//! operators, index sets, weighted transforms on samples, discrete and
//! continuum energies, and the identity/convergence checks connecting
//! them.

pub mod dd;
pub mod energy;
pub mod field;
pub mod grid;
pub mod quad;
pub mod sample;

pub use dd::Dd;
pub use energy::{
    check_commutation, check_cross_identity, continuum_energy, derivative_errors, discrete_energy,
    doubleprime_errors, fitted_rate, pointwise_convergence_study, weighted_doubleprime_samples,
    weighted_prime_samples, EnergyReport, LabOp,
};
pub use field::{Axis1D, SmoothField, VectorField};
pub use grid::GridSpec;
pub use quad::{gauss_legendre_unit, GaussRule, Pp1};
pub use sample::{
    default_subdiv, sample_cross_band, sample_sn, sample_sn_band, sample_tn, BankProfiles,
    SampledArray,
};
