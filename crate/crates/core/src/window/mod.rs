//! The perturbation `W` and the spectral window `(E − W)⁻¹(σ(H₀)) ∩ ℝ`.

pub mod decompose;
pub mod profile;

pub use decompose::{
    classify_energy, decompose_window, Classification, Component, ComponentKind, Endpoint, SpectralWindow,
};
pub use profile::{evaluate_profile, Bump, PerturbationProfile};
