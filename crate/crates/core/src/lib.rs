//! Explicit solutions of integrable boundary problems for the KP equation and
//! the two-dimensional Toda lattice, with numerical oracles that check them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod glm;
pub mod jacobian;
pub mod kp;
pub mod real;
pub mod toda;
pub mod verify;
pub mod wave;

pub use error::{Error, Location, Result};
pub use field::{
    diff, diff_within, residual_scan, scan_items, scan_points, Arity, AxisRange, Exclusion, FieldPair, FnField,
    GridSpec, Point, ResidualReport, ScalarField,
};
pub use num_complex::Complex64 as C64;
pub use real::{Dd, Real, C};
pub use wave::WaveSum;
