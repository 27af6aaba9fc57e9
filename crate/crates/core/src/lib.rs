//! Spectral simulation of a five-level condensate driven by two OAM probe
//! beams and two control beams, its dark-state two-flavor reduction, and the
//! classical out-coupling map.
//!
//! Units are `hbar = m = 1`. Fields live on a periodic 2D grid with spectral
//! derivatives; see [`grid::SpectralGrid`].

#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod beams;
pub mod diagnostics;
pub mod effective;
pub mod error;
mod fft;
pub mod full;
pub mod grid;
mod linalg;
pub mod outcoupling;
pub mod scenario;

pub use error::{Error, Result};
pub use grid::{ComplexField, ComplexVectorField, Mask, RealField, SpectralGrid, VectorField};
pub use num_complex::Complex64;
