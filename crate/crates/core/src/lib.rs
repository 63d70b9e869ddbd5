//! Fourier-space toolkit for elastic waves with Kelvin-Voigt damping.
// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
mod dd;
pub mod elastic;
pub mod error;
pub mod exponents;
pub mod fit;
pub mod helmholtz;
pub mod lattice;
pub mod oscillator;
pub mod profiles;
pub mod propagator;
pub mod radial;
pub mod semilinear;
pub mod spectra;
pub mod table;

pub use elastic::{make_params, FrequencyPoint, StateVector, SystemParams, C64};
pub use error::{Error, Result};
