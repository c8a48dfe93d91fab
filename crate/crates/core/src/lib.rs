//! Loop-group construction of pluriharmonic and para-pluriharmonic maps.
//!
//! Potentials are integrated into holomorphic frames, split by a banded
//! Birkhoff/Iwasawa factorization into extended frames, morphed between the
//! harmonic and Lorentz-harmonic settings, and turned into CMC- and K-surfaces
//! through Sym-type formulas.

pub mod algebra;
pub mod analysis;
pub mod cli_io;
pub mod error;
pub mod factor;
pub mod frames;
pub mod loops;
pub mod potentials;
pub mod sym;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
