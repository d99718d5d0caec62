//! Minimizing `Lambda` over densities of fixed mean, and the structure of the result.

mod descent;
mod structure;

pub use descent::{
    minimize, random_feasible_start, DensityConstraint, MinimizerConfig, MinimizerState, StateRecord, StepRule,
};
pub use structure::{
    check_first_order, check_first_order_with, equalize_pass, equalize_pass_at, equalize_until_stable,
    extract_level_set, fuzzy_region, round_to_indicator, EqualizeOutcome, FirstOrder, LevelSplit,
};
