//! Defaultable affine LIBOR model.
//!
//! The crate calibrates affine martingale families to default-free and
//! defaultable discount curves, evaluates LIBOR rates, default intensities and
//! hazard processes, prices CDS, options on defaultable bonds and vulnerable
//! options in closed form or by Fourier inversion, and provides a Monte Carlo
//! simulator of the Cox construction that serves as an independent oracle.

pub mod affine;
pub mod error;

pub use affine::{AffineComponentSpec, ComplexExponentPair, ExponentPair, ProductAffineSpec};
pub use error::{ModelError, Result};
pub mod special;
pub mod quadrature;
pub mod calibration;
pub mod term;
pub mod simulation;
pub mod pricing;
