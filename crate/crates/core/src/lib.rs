//! Design and verification toolkit for two-sided acoustic metascreens.
//!
//! A metascreen cell is a rigid channel of piecewise-constant cross-section.
//! Its complex reflection and transmission coefficients come from a plane-wave
//! transfer-matrix model ([`duct`]). Sweeping the cell geometry gives a lookup
//! table ([`library`]) that is inverted to realise target phase profiles
//! ([`profiles`], [`iasa`]). Predicted fields are obtained with the angular
//! spectrum method ([`spectrum`], [`verify`]).
//!
//! All quantities are SI (metres, hertz, radians). Time dependence is
//! `exp(+jωt)`, so a forward-travelling wave reads `exp(-jkz)` everywhere,
//! including the spectral propagator.

pub mod design;
pub mod duct;
pub mod error;
pub mod export;
pub mod iasa;
pub mod letters;
pub mod library;
pub mod profiles;
pub mod spectrum;
pub mod stats;
pub mod verify;
pub mod wave;

pub use error::{Error, Result};
pub use num_complex::Complex64;
