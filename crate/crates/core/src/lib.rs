//! Dyadic harmonic analysis on Morrey spaces and their block-space preduals,
//! computed exactly on finite dyadic grids.

pub mod dyadic;
pub mod ensemble;
pub mod error;
pub mod estimation;
pub mod haar;
pub mod norms;
pub mod operators;
pub mod predual;

pub use dyadic::{
    children, cube_mean, pairing, parent_cube, DyadicCube, GridFunction, GridGeometry,
};
pub use ensemble::{random_ensemble, EnsembleSpec};
pub use error::{Error, Result};
pub use estimation::{
    compactness_diagnostic, cube_testing_lower, cube_testing_report, opnorm_probe,
    paraproduct_bmo_norm, CompactnessReport, CubeTesting, CubeTestingRow, DecayProfile, NormKind,
    OpNormEstimate, RatioBand, Witness,
};
pub use haar::{
    expectation_projection, forward_transform, haar_function, inverse_transform, level_slice,
    partial_sum, square_function, square_functions, HaarCoefficients, SignPattern,
};
pub use norms::{
    bmo_norm, bmo_report, lq_norm, morrey_norm, morrey_value, oscillation_norm, sharp_maximal,
    NormReport, SpaceParams,
};
pub use operators::{
    commutator_direct, commutator_tail_high, commutator_tail_low, commutator_terms,
    fractional_bump, fractional_integral, haar_band, paraproduct, paraproduct_pattern,
    paraproduct_unnormalized, pointwise_majorant, scale_truncate, spatial_truncate, BumpProfile,
    CommutatorTerms, FractionalParams, Majorant, Truncation,
};
pub use predual::{
    block_norm_lower, block_norm_upper, duality_gap_report, Block, BlockDecomposition, BlockParams,
    DualityGap, LowerBound, SolverOptions, UpperBound,
};
