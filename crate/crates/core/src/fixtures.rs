//! Reference configurations over `V(x) = 2 cos 2πx` (plus one free case).

use crate::error::Result;
use crate::hill::{band_edges, BandStructure, PeriodicPotential};
use crate::window::PerturbationProfile;

#[derive(Clone, Debug, PartialEq)]
pub struct Fixture {
    pub name: &'static str,
    pub potential: PeriodicPotential,
    pub profile: PerturbationProfile,
    /// Reference energy.
    pub energy: f64,
    /// Energy window for the solver.
    pub window: (f64, f64),
    pub e_max: f64,
}

impl Fixture {
    pub fn bands(&self) -> Result<BandStructure> {
        band_edges(&self.potential, self.e_max, 1e-11)
    }

    /// `n` equispaced energies spanning the window, ends included.
    pub fn energy_grid(&self, n: usize) -> Vec<f64> {
        let (a, b) = self.window;
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }
}

pub fn mathieu() -> PeriodicPotential {
    PeriodicPotential::cosine(2.0)
}

/// (H6): a Lorentzian barrier lifts `E − W` from band 2 into gap 1 on the right of `U`;
/// `U₋` is empty, `U₊` nonempty, `δκ = 0`.
pub fn h6_barrier() -> Fixture {
    Fixture {
        name: "h6_barrier",
        potential: mathieu(),
        profile: PerturbationProfile::step(0.0, -2.1).with_bump(4.2, 6.0, 2.0),
        energy: 12.0,
        window: (11.7, 12.3),
        e_max: 50.0,
    }
}

/// [`h6_barrier`] without the barrier: (H5).
pub fn h5_step() -> Fixture {
    Fixture { name: "h5_step", profile: PerturbationProfile::step(0.0, -2.1), ..h6_barrier() }
}

/// Bound states in a well: `U±` empty and `κ₀ = 0` at both ends of `U`.
pub fn bound_well() -> Fixture {
    Fixture {
        name: "bound_well",
        potential: mathieu(),
        profile: PerturbationProfile::step(1.0, 0.0).with_bump(-4.0, 0.0, 3.0),
        energy: 0.0,
        window: (-0.6, 0.6),
        e_max: 50.0,
    }
}

/// Monotone step across the whole first band: `δκ = 1`, `U±` empty.
pub fn drift_step() -> Fixture {
    Fixture {
        name: "drift_step",
        potential: mathieu(),
        profile: PerturbationProfile::step(-4.9, -5.2),
        energy: -0.55,
        window: (-0.75, -0.35),
        e_max: 50.0,
    }
}

/// Bump pushing `E − W` below the top of band 1 from gap 1: `κ₀ = π` at both ends.
pub fn hole_well() -> Fixture {
    Fixture {
        name: "hole_well",
        potential: mathieu(),
        profile: PerturbationProfile { mu: 0.0, nu: 0.0, bumps: vec![] }.with_bump(4.0, 0.0, 3.0),
        energy: 9.85,
        window: (9.3, 10.4),
        e_max: 50.0,
    }
}

/// `V ≡ 0`: a well next to a barrier on a step, so that `U` and `U₊` exist.
pub fn free_well_barrier() -> Fixture {
    Fixture {
        name: "free_well_barrier",
        potential: PeriodicPotential::free(),
        profile: PerturbationProfile::step(0.0, -1.0).with_bump(-4.0, 0.0, 1.5).with_bump(3.0, 6.0, 1.0),
        energy: 0.5,
        window: (0.3, 0.7),
        e_max: 50.0,
    }
}

pub fn all() -> Vec<Fixture> {
    vec![h6_barrier(), h5_step(), bound_well(), drift_step(), hole_well(), free_well_barrier()]
}

pub fn by_name(name: &str) -> Option<Fixture> {
    all().into_iter().find(|f| f.name == name)
}
