//! Classical and quantum Fisher information for estimation problems in which
//! the parameter enters the outcome measure or the measurement itself, with
//! the corrected Cramér–Rao bounds that apply there.
//!
//! Modules:
//!
//! - [`numcore`]: parametric families, states/operators, outcome spaces.
//! - [`fisher`]: classical and measure-generalized Fisher information.
//! - [`qbounds`]: SLD, quantum Fisher information, POVM Fisher information
//!   with parameter-dependent measurements, 𝒦_X and the corrected bounds.
//! - [`oscillator`]: gravimetry with a displaced mechanical oscillator.
//! - [`jaynescummings`]: frequency estimation through a resonant two-level atom.
//! - [`lab`]: sampling, maximum likelihood, Monte Carlo bound checks and sweeps.
//!
//! Units: ħ = 1 throughout.

mod error;
pub mod fisher;
pub mod jaynescummings;
pub mod lab;
pub mod numcore;
pub mod oscillator;
pub mod qbounds;

pub use error::{Error, Result};

/// Complex double.
pub type C64 = nalgebra::Complex<f64>;
