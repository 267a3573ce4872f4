//! Numerical toolkit for values of inhomogeneous quadratic forms at integer
//! points: lattice counting, congruence subgroup data, Siegel transforms and
//! incomplete Eisenstein series, Haar sampling on the modular surface,
//! Monte Carlo volumes and simultaneous Diophantine approximation.

pub mod congruence;
pub mod diophantine;
pub mod eisenstein;
pub mod enumerate;
pub mod error;
pub mod experiments;
pub mod haar;
pub mod lattice;
pub mod numtheory;
pub mod qforms;
pub mod rng;
pub mod stats;
pub mod volume;

pub use error::{Error, Result};
pub use numtheory::UnimodularMatrix;
