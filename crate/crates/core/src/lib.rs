//! Participation analysis toolkit: discrete power-law fitting, a generative
//! model mixing habit formation with behavioral inertia, propensity curves,
//! calibration by repeated simulation, and burst detection.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*64` and
//! `*32` aliases below fix the precision.

pub mod bursts;
pub mod calibration;
pub mod error;
pub mod event_log;
pub mod evidence;
pub mod hfbi;
pub mod powerlaw;
pub mod scalar;
pub mod seed;
pub mod zeta;

pub use error::{Error, Result};
pub use scalar::Real;

pub type PowerLawFit64 = powerlaw::PowerLawFit<f64>;
pub type PowerLawFit32 = powerlaw::PowerLawFit<f32>;
pub type TwoSampleKs64 = powerlaw::TwoSampleKs<f64>;
pub type TwoSampleKs32 = powerlaw::TwoSampleKs<f32>;
pub type Ccdf64 = powerlaw::Ccdf<f64>;
pub type Ccdf32 = powerlaw::Ccdf<f32>;
pub type HfbiParams64 = hfbi::HfbiParams<f64>;
pub type HfbiParams32 = hfbi::HfbiParams<f32>;
pub type TheoryCheck64 = hfbi::TheoryCheck<f64>;
pub type TheoryCheck32 = hfbi::TheoryCheck<f32>;
pub type PropensityCurve64 = evidence::PropensityCurve<f64>;
pub type PropensityCurve32 = evidence::PropensityCurve<f32>;
pub type AlphaCalibration64 = calibration::AlphaCalibration<f64>;
pub type AlphaCalibration32 = calibration::AlphaCalibration<f32>;
pub type BurstTable64 = bursts::BurstTable<f64>;
pub type BurstTable32 = bursts::BurstTable<f32>;
