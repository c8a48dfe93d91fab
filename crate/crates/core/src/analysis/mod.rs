//! Special functions, PDE residuals, differential-geometric verification and
//! the reference K-surfaces.

pub mod fd;
pub mod geometry;
pub mod jacobi;
pub mod metric;
pub mod ksurf;
pub mod quad;
pub mod sine_gordon;

pub use jacobi::{jacobi, JacobiKind};
pub use quad::elliptic_e_incomplete;
