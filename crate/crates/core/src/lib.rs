//! Probabilistic observational properties (detectability, opacity and custom
//! two-trace formulas) of partially observable stochastic systems, verified
//! with terminal-reach barrier certificates.
//!
//! Numeric code is generic over [`scalar::Real`] (`f32`, `f64`) and, for the
//! exact finite oracles, [`scalar::Probability`] (`f64` or [`ExactProb`]).

pub mod certify;
pub mod error;
pub mod hyperprops;
pub mod ltlf;
pub mod oracle;
pub mod poss;
pub mod presets;
pub mod product;
pub mod quadrature;
pub mod region;
pub mod rng;
pub mod scalar;
pub mod system;
pub mod trainer;

pub use error::{Error, Result};

/// Exact rational used by the finite oracles.
pub type ExactProb = num_rational::BigRational;

pub type Mlp32 = trainer::Mlp<f32>;
pub type Mlp64 = trainer::Mlp<f64>;
pub type Certificate32 = certify::Certificate<f32>;
pub type Certificate64 = certify::Certificate<f64>;
pub type ValueTable32 = oracle::ValueTable<f32>;
pub type ValueTable64 = oracle::ValueTable<f64>;
pub type FiniteInstance64 = oracle::FiniteInstance<f64>;
pub type FiniteInstanceExact = oracle::FiniteInstance<ExactProb>;
pub type ExactValues64 = oracle::ExactValues<f64>;
pub type ExactValuesExact = oracle::ExactValues<ExactProb>;
