//! Solvers for throughput/energy trade-offs on speed-scalable machines.
//!
//! Machines run at a chosen speed `s(t)` and draw power `P(s) = s^alpha`. Each job
//! has a release date, a deadline, a weight and a processing volume (possibly
//! machine dependent). The crate provides
//!
//! * [`primal_dual`]: energy minimisation under a throughput demand on unrelated
//!   machines (preemptive, non-migratory), by water-filling speed profiles and
//!   raising dual prices on knapsack-cover constraints;
//! * [`dichotomy`]: throughput maximisation under an energy budget by bisecting the
//!   demand passed to the primal-dual routine;
//! * [`dp_equal`] and [`dp_agreeable`]: exact non-preemptive dynamic programs for a
//!   fixed number of identical machines, for equal-volume and agreeable instances.
//!
//! All arithmetic is exact over rationals when alpha is an integer.

pub mod dichotomy;
pub mod dp_agreeable;
pub mod dp_equal;
pub mod error;
pub mod grid;
pub mod io;
pub mod model;
pub mod primal_dual;
pub mod profile;
pub mod scalar;

pub use error::{Error, Result};
pub use model::{energy_of, throughput_of, validate_plan, Instance, Job, PowerModel, SchedulePlan, Slice};
pub use profile::StepFunction;
pub use scalar::Scalar;
