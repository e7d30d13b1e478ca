//! Explicit finite-difference solvers for second-order reaction–diffusion
//! equations and deep five-point stencil networks that learn to advance them
//! with time steps beyond the explicit stability limit.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod fcnn;
pub mod fdm;
pub mod grid;
pub mod initcond;
pub mod io;
pub mod training;
pub mod trajectory;

pub use error::{Error, Result};
pub use fcnn::{DeepFcnn, StencilLayer, StencilWeights};
pub use fdm::{EquationKind, EquationParams, TimeStepping};
pub use grid::{Field, GridSpec};
pub use initcond::Shape;
pub use trajectory::{Snapshot, Stepper, Trajectory};
