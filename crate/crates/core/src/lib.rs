//! 2-D TM_z Maxwell FDTD solver with correction-function interface treatment.
//!
//! The solver advances (H_x, H_y, E_z) on a staggered periodic grid with a
//! second- or fourth-order centered scheme in space and classic RK4 in time.
//! Field discontinuities across an embedded interface are handled without
//! changing the stencils: for every node whose value is sampled from across
//! the interface, a space-time polynomial model of the jump is fitted on a
//! local patch by minimizing a quadratic residual of the jump PDE system in
//! a divergence-free polynomial space, and the stencil sample is shifted by
//! the fitted jump.

pub mod basis;
pub mod cfm;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod fdtd;
pub mod geometry;
pub mod grid;
pub mod linalg;
pub mod problems;
pub mod quadrature;

pub use error::{Error, Result};
