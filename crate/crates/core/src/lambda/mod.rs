//! The progression functional Lambda, its gradient field and the exact
//! two-point perturbation formula.

mod cache;
mod eval;

pub use cache::{LambdaCache, PerturbationTerms};
pub use eval::{
    complement_identity_residual, complement_identity_residual_exact,
    complement_identity_residual_spectral, count_t3, gradient_field, gradient_field_literal,
    gradient_parts, half_reflection, interval_lambda_check, lambda_count, lambda_direct,
    lambda_indicator, lambda_spectral, lambda_spectral_tol, GradientParts, IntervalCheck,
    IntervalSlack,
};
