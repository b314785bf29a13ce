//! Regret, variation measures, the one-step contraction check and the
//! regret bounds.

pub mod bounds;
pub mod contraction;
pub mod measures;

pub use bounds::{
    chain_check, recursion_check, report_for_run, first_bound, second_bound,
    local_second_bound, local_first_bound, Bound, BoundCheck, BoundInputs, BoundReport, ChainCheck,
    Measures, RecursionCheck,
};
pub use contraction::{contraction_check, step_constants, ContractionVerdict, QuadraticInstance, StepConstants};
pub use measures::{
    certified_slot_error, dynamic_regret, gradient_error_measures, optimal_gradient_energy,
    path_length, squared_path_length,
};
