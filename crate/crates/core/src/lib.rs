//! Numerical stability analysis for the radical functional equation
//!
//! ```text
//! phi(x) + phi(y) + phi(z) = q phi(((x^s + y^s + z^s) / q)^(1/s)),   s odd >= 3,  0 < |q| <= 1
//! ```
//!
//! in modular spaces over the reals. Given a perturbed solution `phi` whose
//! defect is bounded by a control function `alpha`, the crate constructs the
//! exact radical mapping by scaling limits ([`direct`]) and by fixed-point
//! iteration ([`fixed_point`]), evaluates the matching error bounds, and
//! checks the results ([`verify`]).

pub mod direct;
pub mod error;
pub mod expr;
pub mod fixed_point;
pub mod grid;
pub mod modular;
pub mod radical;
mod syntax;
pub mod verify;

pub use direct::{
    approximant_t1, approximant_t2, construct_limit, corollary_bound, series_bound_t1, series_bound_t2,
    LimitMode, LimitResult, SeriesBound,
};
pub use error::{Error, ParseError, Result};
pub use expr::{FunctionHandle, RealFn};
pub use fixed_point::{
    estimate_l, fixed_point_solve, lambda_apply, rho_hat_distance, ContractionCertificate, FixedPointResult,
    FixedPointSettings, GapDecay,
};
pub use grid::SampleGrid;
pub use modular::{ModularKind, ModularSpec};
pub use radical::{
    control_eval, defect, pair_additivity_defect, radical_combine, radical_root, Control, ControlFunction,
    EquationParams,
};
pub use verify::{cross_check, verify_oddness, verify_radical_additivity, verify_stability_bound, CheckOutcome};
