//! Tensor-product B-spline tight-frame filter banks and undecimated
//! frame transforms.

pub mod bank;
pub mod filter;
pub mod transform;

pub use bank::{build_bank, compute_band_constant, compute_cross_constant, verify_uep, BankName,
    FilterBank2D, Mask1D};
pub use filter::{C64, Filter2D};
pub use transform::{
    analyze, analyze_single, cross_analyze, cross_synthesize, synthesize,
    weighted_analyze_doubleprime, weighted_analyze_prime, BandLabel, CoefficientStack,
};
