//! Numerical laboratory for a two-species competition model in which the
//! invader occupies a ball whose radius moves by a Stefan condition, in a
//! time-periodic, radially heterogeneous environment.

pub mod analysis;
pub mod config;
pub mod eigensolver;
pub mod entire_solutions;
pub mod exec;
pub mod fbsolver;
pub mod model;
pub mod numerics;
pub mod periodic_ode;
pub mod presets;
pub mod stepper;
