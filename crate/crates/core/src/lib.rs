//! Semiclassical resonances of slowly perturbed one-dimensional periodic operators
//! `H = −d²/dx² + V(x) + W(εx + ζ)`.
//!
//! The pipeline is: Floquet bands of `V` ([`hill`]), the window of `ζ` where `E − W(ζ)` is in
//! the spectrum ([`window`]), the complex momentum `κ(ζ, E) = k(E − W(ζ))` ([`momentum`]),
//! phase and tunneling actions ([`actions`]), and the quantization condition ([`resonance`]).
//! [`oracle`] holds the independent checks: a Fourier Hill matrix and a finite-difference
//! Hamiltonian with a complex absorbing potential.

pub mod actions;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod hill;
pub mod momentum;
pub mod oracle;
pub mod quadrature;
pub mod resonance;
pub mod verify;
pub mod window;

pub use actions::{tunneling_coefficients, ActionData, Tunneling};
pub use config::RunConfiguration;
pub use error::{Error, Result};
pub use hill::{band_edges, BandStructure, MonodromyMatrix, PeriodicPotential, QuasiMomentum};
pub use resonance::{locate_resonances, PhaseConvention, ResonanceEstimate, SolverConfig};
pub use window::{decompose_window, Classification, PerturbationProfile, SpectralWindow};
