//! Numerical laboratory for removable singularities of bounded p-harmonic
//! and quasiharmonic functions on weighted ℝⁿ.
//!
//! The one-dimensional modules ([`weights1d`], [`harmonic1d`], [`quasi1d`])
//! are exact up to quadrature. The grid modules ([`capacity`],
//! [`harmonicnd`]) minimize discrete p-energies, and [`verdict`] turns
//! capacity facts into removability verdicts.

pub mod capacity;
pub mod error;
pub mod exec;
pub mod grid;
pub mod quadrature;
pub mod quasi1d;
pub mod harmonic1d;
pub mod harmonicnd;
pub mod verdict;
pub mod weights1d;

pub use error::{Error, Result};
pub use exec::ExecPolicy;
