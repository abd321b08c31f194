//! Kinematics of a three-translational parallel mechanism driven by three
//! prismatic joints.
//!
//! * [`params`]: geometry, frames and shared value types
//! * [`fk`]: closed-form direct kinematics with branch enumeration
//! * [`ik`]: closed-form inverse kinematics with round-trip checking
//! * [`jacobian`]: velocity relation, singularity classes and a
//!   finite-difference verifier
//! * [`workspace`]: grid workspace search with singularity labels
//! * [`topology`]: mobility and coupling-degree arithmetic
//! * [`cli`]: the `tpm` command-line front end

pub mod cli;
pub mod error;
pub mod fk;
pub mod ik;
pub mod jacobian;
pub mod params;
pub mod sign;
pub mod topology;
pub mod workspace;

pub use error::{Error, Result};
pub use params::{JointInputs, MechanismParams, Pose, Tolerances, ValidatedParams};
pub use sign::Sign;
