//! Conformal inversions, reflection positivity and the sharp
//! Hardy–Littlewood–Sobolev functional on uniform grids.
//!
//! Fields are sampled at cell centers and treated as piecewise constant;
//! energies are exact cell-pair integrals of those interpolants, with error
//! estimates from one spacing-doubling step.

pub mod energy;
pub mod error;
pub mod fit;
pub mod fields;
pub mod geometry;
pub mod lizhu;
pub mod mass;
pub mod params;
pub mod positivity;
pub mod symmetrize;
pub mod quadrature;

pub use energy::{
    calibrate_fourier, el_residual, energy_direct, energy_fourier, energy_radial, invariance_check,
    rayleigh_quotient, rayleigh_with_error, sharp_constant, EnergyResult, FourierCalibration,
    InvarianceCheck, Quadrature, RadialProfile,
};
pub use error::{Error, Result};
pub use fields::{
    apply_cayley, apply_inversion, apply_reflection, lp_norm, make_extremizer, split_in_out,
    ExtremizerSpec, Field, Grid, LiftedOp,
};
pub use fit::{family_error, fit_family, FamilyFit};
pub use geometry::{cayley_point, invert_point, reflect_point, Ball, HalfSpace, Point, Region};
pub use lizhu::{
    check_mass_identity, check_pointwise_invariance, check_radial_decreasing, check_radial_derivative,
    fit_invariant_density, hemiball_on_ray, pushforward_mass, solve_mapping_ball, DensityFit,
    HemiBallResult, Measure, Query, RadialDerivative, RadialReport,
};
pub use mass::{
    ball_mass, ball_mass_radius, halfspace_mass, halfspace_mass_offset, region_fraction, Bisection,
    MASS_TOL,
};
pub use params::KernelParams;
pub use positivity::{
    find_negative_defect, halfspace_representation, kernel_k, newton_zero_overlap, positivity_defect,
    PositivityReport, SearchOptions, SignWitnesses, Witness, NewtonExample, STRICT_TOL,
};
pub use symmetrize::{
    hemiball_radius, hemispace_offset, run_symmetrization, BISECT_TOL, symmetrization_step, Choice, Schedule,
    StepRecord, SymmetrizationTrace,
};
