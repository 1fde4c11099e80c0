//! Exact arithmetic for the BCZ map on the Farey triangle: Farey sequences,
//! orbit series, generalized arithmetic sequences, excursions and the
//! experiment drivers built on them.

pub mod bcz;
pub mod error;
pub mod exact;
pub mod excursion;
pub mod experiments;
pub mod farey;
pub mod functions;
pub mod gas;

pub use bcz::{
    bcz_step, bcz_step_inverse, cocycle, f_n_functional, iota_series, orbit_stream,
    r_minus_khat_bounds_check, theta_series, CocycleSeries, SeriesKind, StepRecord,
};
pub use error::{Error, Result};
pub use exact::{
    in_farey_triangle, in_golden_region, rational_reduce, FareyPoint, HalfInteger, Rational,
};
pub use excursion::{
    build_excursion, energy, energy_bound_checks, excursion_length_estimate, excursion_sum,
    monotonicity_check, primitive_points, reset_sum_check, reverse_excursion,
    sub_excursion_inequality_check, theta_reset_at_r_i, Excursion, ModuliPoint,
};
pub use experiments::{
    condition_probe_alpha, equidistribution_check, fit_power_law, run_sweep, verify_all,
    verify_all_with, FitReport, Grid, SweepConfig, SweepFunction, SweepMode, SweepReport,
    VerifyOptions, VerifySummary,
};
pub use farey::{denominator_stream, farey_length, farey_stream, FareyFraction, FareyLength};
pub use functions::{g_lambda, return_time, GLambda, PointFunction, StepFunction};
pub use gas::{
    eliminate, find_local_maxima, h_hat_value, h_value, negative_cf_convergents,
    negative_cf_from_cf, reduce_to_simplest, validate_gas, CfMode, GasSeq, ItinerarySeq,
};
