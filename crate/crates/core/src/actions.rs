//! Phase integral `Φ₀`, momentum index `δκ`, tunneling actions `S±` and coefficients `t±`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hill::BandStructure;
use crate::momentum::{edge_value_index, gap_segment, im_kappa_unchecked, kappa0_with_energy_derivative, Side};
use crate::quadrature::{integrate_with_sqrt_ends, QuadratureSettings};
use crate::window::{decompose_window, PerturbationProfile, SpectralWindow};
use std::f64::consts::PI;

/// Root tolerance used when the window is decomposed on behalf of the action routines.
pub const WINDOW_TOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionData {
    pub energy: f64,
    /// `∫_{U(E)} κ₀ dζ`.
    pub phi0: f64,
    /// `dΦ₀/dE`, including the motion of the endpoints.
    pub phi0_prime: f64,
    /// `∫_{U(E)} ∂κ₀/∂E dζ`.
    pub phi0_prime_interior: f64,
    pub delta_kappa: i32,
    pub s_minus: f64,
    pub s_plus: f64,
    pub quadrature_error: f64,
    /// Band containing `E − W` on `U(E)`.
    pub band: usize,
    pub zeta0_minus: f64,
    pub zeta0_plus: f64,
    /// `κ₀` at `ζ₀∓` (0 or π).
    pub kappa_minus: f64,
    pub kappa_plus: f64,
    pub w_prime_minus: f64,
    pub w_prime_plus: f64,
}

impl ActionData {
    /// `Φ₀ − [κ₀ ζ]` between the ends of `U`, the phase measured from the band-edge values.
    pub fn edge_referenced_phase(&self) -> f64 {
        self.phi0 - self.kappa_plus * self.zeta0_plus + self.kappa_minus * self.zeta0_minus
    }

    /// `d/dE` of [`Self::edge_referenced_phase`].
    pub fn edge_referenced_derivative(&self) -> f64 {
        self.phi0_prime_interior
    }
}

/// `(Φ₀, Φ₀′, ∫∂κ₀/∂E, error)` over `U(E)`.
pub fn phase_integral(
    window: &SpectralWindow,
    bands: &BandStructure,
    profile: &PerturbationProfile,
    settings: &QuadratureSettings,
) -> Result<(f64, f64, f64, f64)> {
    let u = window.require_h6()?;
    let (l, r) = (u.left.unwrap(), u.right.unwrap());
    let est = integrate_with_sqrt_ends(l.zeta, r.zeta, (true, true), settings, |z| {
        let (k, dk) = kappa0_with_energy_derivative(u, bands, profile, window.energy, z)?;
        Ok([k, dk])
    })?;
    let [phi0, interior] = est.value;
    let k_minus = PI * edge_value_index(u.band, l.edge_index)? as f64;
    let k_plus = PI * edge_value_index(u.band, r.edge_index)? as f64;
    let phi0_prime = interior + k_plus / r.w_prime - k_minus / l.w_prime;
    Ok((phi0, phi0_prime, interior, est.error))
}

/// `δκ = (κ₀(ζ₀⁺) − κ₀(ζ₀⁻))/π` from the edge indices of the endpoints.
pub fn delta_kappa(window: &SpectralWindow) -> Result<i32> {
    let u = window.require_h6()?;
    let a = edge_value_index(u.band, u.left.unwrap().edge_index)?;
    let b = edge_value_index(u.band, u.right.unwrap().edge_index)?;
    Ok(b - a)
}

fn action_on(
    window: &SpectralWindow,
    bands: &BandStructure,
    profile: &PerturbationProfile,
    side: Side,
    settings: &QuadratureSettings,
) -> Result<(f64, f64)> {
    let (a, b) = gap_segment(window, side)?;
    if !a.is_finite() || !b.is_finite() {
        return Ok((f64::INFINITY, 0.0));
    }
    let est = integrate_with_sqrt_ends(a, b, (true, true), settings, |z| {
        Ok([im_kappa_unchecked(bands, profile, window.energy, z)?])
    })?;
    Ok((est.value[0], est.error))
}

/// `(S₋, S₊, error)`; an empty `U∓` gives `+∞`.
pub fn actions_pm(
    window: &SpectralWindow,
    bands: &BandStructure,
    profile: &PerturbationProfile,
    settings: &QuadratureSettings,
) -> Result<(f64, f64, f64)> {
    let (s_minus, e1) = action_on(window, bands, profile, Side::Left, settings)?;
    let (s_plus, e2) = action_on(window, bands, profile, Side::Right, settings)?;
    Ok((s_minus, s_plus, e1.max(e2)))
}

pub fn compute_actions(
    window: &SpectralWindow,
    bands: &BandStructure,
    profile: &PerturbationProfile,
    settings: &QuadratureSettings,
) -> Result<ActionData> {
    let u = window.require_h6()?;
    let (l, r) = (u.left.unwrap(), u.right.unwrap());
    let (phi0, phi0_prime, interior, err0) = phase_integral(window, bands, profile, settings)?;
    let (s_minus, s_plus, err1) = actions_pm(window, bands, profile, settings)?;
    if !(phi0 > 0.0) {
        return Err(Error::InternalConsistency(format!("Φ₀ = {phi0} is not positive")));
    }
    Ok(ActionData {
        energy: window.energy,
        phi0,
        phi0_prime,
        phi0_prime_interior: interior,
        delta_kappa: delta_kappa(window)?,
        s_minus,
        s_plus,
        quadrature_error: err0.max(err1),
        band: u.band,
        zeta0_minus: l.zeta,
        zeta0_plus: r.zeta,
        kappa_minus: PI * edge_value_index(u.band, l.edge_index)? as f64,
        kappa_plus: PI * edge_value_index(u.band, r.edge_index)? as f64,
        w_prime_minus: l.w_prime,
        w_prime_plus: r.w_prime,
    })
}

/// Window decomposition followed by [`compute_actions`].
pub fn actions_at(
    profile: &PerturbationProfile,
    bands: &BandStructure,
    e: f64,
    settings: &QuadratureSettings,
) -> Result<ActionData> {
    let w = decompose_window(profile, bands, e, WINDOW_TOL)?;
    compute_actions(&w, bands, profile, settings)
}

pub fn actions_on_grid(
    profile: &PerturbationProfile,
    bands: &BandStructure,
    energies: &[f64],
    settings: &QuadratureSettings,
) -> Result<Vec<ActionData>> {
    energies.par_iter().map(|&e| actions_at(profile, bands, e, settings)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tunneling {
    pub t_minus: f64,
    pub t_plus: f64,
    pub t: f64,
    /// A finite action produced a coefficient below `1e−300`, reported as 0.
    pub underflow: bool,
}

pub const UNDERFLOW_FLOOR: f64 = 1e-300;

/// `t± = exp(−S±/ε)`, `t = t₊ + t₋`.
pub fn tunneling_coefficients(a: &ActionData, eps: f64) -> Result<Tunneling> {
    tunneling_from_actions(a.s_minus, a.s_plus, eps)
}

pub fn tunneling_from_actions(s_minus: f64, s_plus: f64, eps: f64) -> Result<Tunneling> {
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("ε must be positive, got {eps}")));
    }
    let mut underflow = false;
    let mut coef = |s: f64| {
        if s.is_infinite() {
            return 0.0;
        }
        let t = (-s / eps).exp();
        if t < UNDERFLOW_FLOOR {
            underflow = true;
            0.0
        } else {
            t
        }
    };
    let (t_minus, t_plus) = (coef(s_minus), coef(s_plus));
    Ok(Tunneling { t_minus, t_plus, t: t_minus + t_plus, underflow })
}
