//! Shared setup for the benchmarks.

use adiabat_core::fixtures::{self, Fixture};
use adiabat_core::{BandStructure, SolverConfig};

pub struct Setup {
    pub fixture: Fixture,
    pub bands: BandStructure,
    pub solver: SolverConfig,
}

/// The H6 barrier fixture at `eps`, with its band structure precomputed.
pub fn h6_setup(eps: f64) -> Setup {
    let fixture = fixtures::h6_barrier();
    let bands = fixture.bands().expect("fixture bands");
    let solver = SolverConfig::new(eps, 0.0, fixture.window);
    Setup { fixture, bands, solver }
}
