//! Gradient-driven optimizers operating on named parameter groups.
//!
//! Callers fill each group's gradient slot and call [`ParamGroup::step`];
//! optimizers never evaluate losses themselves.

mod adam;
mod adaterm;
mod config;
mod group;
mod tadam;

pub use adam::{adabelief_step, adam_step, MomentState};
pub use adaterm::{adaptive_bias_step, adaterm_eta, adaterm_step, AdaTermState};
pub use config::{Ablation, Algorithm, LrSchedule, OptimizerConfig, Variant};
pub use group::{make_param_groups, GroupState, Optimizer, ParamGroup, StepReport};
pub use tadam::{tadam_step, TMomentState};
