//! Norms, sublevel-set volumes and sum-of-squares Gram machinery for real
//! homogeneous forms, plus solvers for volume minimization over norm balls.

pub mod error;
pub mod extremal;
pub mod form;
pub mod io;
pub mod linalg;
pub mod norms;
pub mod rng;
pub mod sos;
pub mod special;
pub mod volume;

pub use error::{Error, Result};
