//! Numerical laboratory for Patterson-Sullivan measures of Schottky groups in
//! real hyperbolic space: group construction, critical exponents, atomic
//! measures, Fourier decay, non-concentration and the stable holonomy formulas.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod dd;
pub mod dimension;
pub mod error;
pub mod fourier;
pub mod holonomy;
pub mod hyperbolic;
pub mod measure;
pub mod nonconc;
pub mod par;
pub mod schottky;
pub mod sum;

pub use error::{Error, Result};
pub use hyperbolic::{BoundaryPoint, GroupElement, HyperbolicPoint, ModelParams};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
