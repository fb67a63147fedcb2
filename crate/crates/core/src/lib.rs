//! Numerical laboratory for the one-dimensional linear peridynamic wave
//! equation `u_tt + μ₀u = J⋆u`.
//!
//! The crate builds the effective wave speed `c = √(μ₂/2)` and the nonlocal
//! derivative `D` (the Fourier multiplier `2πiψ(ξ)`) from a micromodulus
//! kernel `J`, evolves initial data exactly in Fourier space, and measures how
//! fast energy decays outside the acoustic cone `|x| = c|t|`.

pub mod classical_wave;
pub mod config;
pub mod data;
pub mod dispersion;
pub mod error;
pub mod evolution;
pub mod kernel_b;
pub mod micromodulus;
pub mod nonlocal_operator;
pub mod quadrature;
pub mod ray_probe;
pub mod run;
pub mod spectral;

pub use config::{parse_config, RunConfig};
pub use data::{GaussianPulse, InitialDataSpec};
pub use dispersion::DispersionProfile;
pub use error::{Error, Result};
pub use micromodulus::{KernelFamily, MicromodulusKernel, ValidationReport};
pub use run::{run, Command, Summary};
pub use spectral::{FieldState, Grid};
