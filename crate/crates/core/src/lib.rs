//! Numerical toolkit for control systems with unbounded controls.
//!
//! The crate covers four layers:
//!
//! * [`system`], [`growth`], [`kl`], [`trajectory`]: shared domain types
//!   (control-polynomial dynamics, targets, growth rates, comparison
//!   functions, partitions and trajectory records).
//! * [`transforms`]: rescaled dynamics `f / (1 + nu(|u|))`, the impulsive
//!   extension `F(x, w0, w)` on the simplex `w0 + |w| = 1`, the maps between
//!   the two control sets and the time changes linking trajectories.
//! * [`sampling`]: a sample-and-hold simulator built on an adaptive
//!   Dormand-Prince 5(4) integrator ([`ode`]) with target-hit and blow-up
//!   detection.
//! * [`clf`] and [`gac`]: control-Lyapunov certification, feedback synthesis,
//!   and the KL machinery (strip radii, dwell times, step bounds and their
//!   continuous majorants) used to check descent rates on trajectories.
//!
//! [`example`] packages the one-dimensional system `x' = x - x^3 u` together
//! with its closed-form solutions; it is the ground truth for the test suites
//! and is available in the CLI catalog as `cubic-damped`.

// guards such as `!(x > 0.0)` are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clf;
pub mod cli;
pub mod config;
pub mod error;
pub mod example;
pub mod expr;
pub mod gac;
pub mod growth;
pub mod kl;
pub mod ode;
pub mod sampling;
pub mod suite;
pub mod svg;
pub mod system;
pub mod trajectory;
pub mod transforms;

pub use error::{Error, Result};
pub use growth::GrowthRate;
pub use kl::{kl_check, KlFunction, KlReport};
pub use sampling::{
    simulate_open_loop, simulate_sample_hold, uniform_partition, ControlSignal, DynamicsForm,
    Feedback, SimOptions,
};
pub use system::{ControlCone, ControlPolynomialSystem, StateVector, Target};
pub use trajectory::{ControlValue, Partition, Status, TrajectoryRecord};
pub use transforms::{ExtendedControl, RestrictedControlSet};
