//! Floquet theory of `H₀ = −d²/dx² + V`.

pub mod bands;
pub mod monodromy;
pub mod potential;
pub mod quasi_momentum;

pub use bands::{band_edges, BandRecord, BandStructure, SpectralPosition};
pub use monodromy::{
    discriminant, discriminant_with_derivative, integrate_monodromy,
    integrate_monodromy_with_derivative, MonodromyMatrix, DEFAULT_TOL,
};
pub use potential::PeriodicPotential;
pub use quasi_momentum::{
    quasi_momentum_derivative, quasi_momentum_main, quasi_momentum_with_derivative, QuasiMomentum,
};
