//! Finite-difference `H_{ζ,ε} = −d²/dx² + V(x) + W(εx + ζ)` on `[−L, L]` with Dirichlet ends
//! and the absorber `−iη((|x| − fL)₊ / ((1 − f)L))²`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::tridiag::{complex_symmetric_eigenvalues, eigenvalues_in, inverse_iteration, refine};
use crate::error::{Error, Result};
use crate::hill::{BandStructure, PeriodicPotential};
use crate::window::{decompose_window, PerturbationProfile};

fn default_margin() -> f64 {
    10.0
}

fn default_max_points() -> usize {
    60_000
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// `L`.
    pub half_length: f64,
    pub points_per_period: usize,
    /// `η`.
    pub cap_strength: f64,
    /// `f`.
    pub cap_onset: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
    /// Size the box from the window for each `(ζ, ε)` instead of using `half_length`.
    #[serde(default = "default_true")]
    pub auto_fit: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            half_length: 100.0,
            points_per_period: 32,
            cap_strength: 0.0,
            cap_onset: 0.7,
            margin: default_margin(),
            max_points: default_max_points(),
            auto_fit: true,
        }
    }
}

impl OracleConfig {
    /// `N = 2L · points_per_period`, with `L` rounded up to a whole number of grid steps.
    pub fn grid_points(&self) -> usize {
        (2.0 * self.half_length * self.points_per_period as f64).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_length > 0.0 && self.half_length.is_finite()) {
            return Err(Error::Config(format!("box half-length must be positive, got {}", self.half_length)));
        }
        if self.points_per_period < 32 {
            return Err(Error::Config(format!(
                "points_per_period must be at least 32, got {}",
                self.points_per_period
            )));
        }
        if !(self.cap_strength >= 0.0 && self.cap_strength.is_finite()) {
            return Err(Error::Config("CAP strength must be finite and ≥ 0".into()));
        }
        if !(self.cap_onset > 0.0 && self.cap_onset < 1.0) {
            return Err(Error::Config(format!("CAP onset fraction must lie in (0, 1), got {}", self.cap_onset)));
        }
        if !(self.margin >= 0.0) {
            return Err(Error::Config("margin must be ≥ 0".into()));
        }
        let n = self.grid_points();
        if n > self.max_points {
            return Err(Error::Config(format!(
                "box needs N = {n} grid points, above the limit {}; lower L or points_per_period",
                self.max_points
            )));
        }
        Ok(())
    }

    /// Smallest `L` satisfying [`Region::check`] for this `ε`, `ζ`.
    pub fn fitted(&self, region: &Region, zeta: f64, eps: f64) -> OracleConfig {
        let mut c = self.clone();
        let core = (region.zeta0.0.abs() + region.zeta0.1.abs() + self.margin) / eps;
        let outer = region.outer_reach(zeta) / eps / self.cap_onset;
        c.half_length = core.max(outer).ceil();
        c
    }
}

/// `ζ`-extent of the structure the box has to contain: `[ζ₀⁻, ζ₀⁺]` of the compact
/// component and the inner ends `ζ∓` of `U∓`, collected over an energy window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub zeta0: (f64, f64),
    pub outer: (Option<f64>, Option<f64>),
}

impl Region {
    /// Union over the windows at `E_a`, the midpoint and `E_b`. Outside (H6) the finite
    /// component ends stand in for `ζ₀±`.
    pub fn from_window(profile: &PerturbationProfile, bands: &BandStructure, window: (f64, f64)) -> Result<Region> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut outer: (Option<f64>, Option<f64>) = (None, None);
        for e in [window.0, 0.5 * (window.0 + window.1), window.1] {
            let w = decompose_window(profile, bands, e, 1e-12)?;
            match w.require_h6() {
                Ok(u) => {
                    lo = lo.min(u.left.unwrap().zeta);
                    hi = hi.max(u.right.unwrap().zeta);
                    if let Some(c) = w.u_minus() {
                        let z = c.right.unwrap().zeta;
                        outer.0 = Some(outer.0.map_or(z, |x| x.min(z)));
                    }
                    if let Some(c) = w.u_plus() {
                        let z = c.left.unwrap().zeta;
                        outer.1 = Some(outer.1.map_or(z, |x| x.max(z)));
                    }
                }
                Err(_) => {
                    for p in w.endpoints() {
                        lo = lo.min(p.zeta);
                        hi = hi.max(p.zeta);
                    }
                }
            }
        }
        if lo > hi {
            let x = profile.extent();
            (lo, hi) = (-x, x);
        }
        Ok(Region { zeta0: (lo, hi), outer })
    }

    /// Largest `|ζ' − ζ|` over the structure, plus one unit of slack.
    fn outer_reach(&self, zeta: f64) -> f64 {
        let mut m = (self.zeta0.0 - zeta).abs().max((self.zeta0.1 - zeta).abs());
        for z in [self.outer.0, self.outer.1].into_iter().flatten() {
            m = m.max((z - zeta).abs());
        }
        m + 1.0
    }

    /// Window-fits-box check; the absorber must also start beyond `ζ∓`.
    pub fn check(&self, oc: &OracleConfig, zeta: f64, eps: f64) -> Result<()> {
        let need = (self.zeta0.0.abs() + self.zeta0.1.abs() + oc.margin) / eps;
        if oc.half_length < need {
            return Err(Error::WindowDoesNotFit(format!(
                "box half-length {} is below (|ζ₀⁻| + |ζ₀⁺| + margin)/ε = {need:.1}",
                oc.half_length
            )));
        }
        let onset = oc.cap_onset * oc.half_length;
        let reach = self.outer_reach(zeta) / eps;
        if onset < reach {
            return Err(Error::WindowDoesNotFit(format!(
                "absorber starts at |x| = {onset:.1}, inside the structure which reaches |x| = {reach:.1}"
            )));
        }
        Ok(())
    }

    /// `x`-interval of `[ζ₀⁻ − 1, ζ₀⁺ + 1]`.
    fn x_interval(&self, zeta: f64, eps: f64) -> (f64, f64) {
        ((self.zeta0.0 - 1.0 - zeta) / eps, (self.zeta0.1 + 1.0 - zeta) / eps)
    }
}

/// Tridiagonal data: diagonal `2/h² + V + W`, absorber shape, constant off-diagonal `−1/h²`.
#[derive(Clone, Debug)]
pub struct GridHamiltonian {
    pub x: Vec<f64>,
    pub base: Vec<f64>,
    pub cap_shape: Vec<f64>,
    pub off: f64,
    pub eta: f64,
    /// Localization is measured on this `x`-interval.
    pub region: (f64, f64),
}

impl GridHamiltonian {
    pub fn size(&self) -> usize {
        self.x.len()
    }

    fn complex_diag(&self, eta: f64) -> Vec<Complex64> {
        self.base.iter().zip(&self.cap_shape).map(|(&b, &c)| Complex64::new(b, -eta * c)).collect()
    }

    fn localization(&self, d: &[Complex64], e: &[Complex64], lambda: Complex64) -> f64 {
        let v = inverse_iteration(d, e, lambda);
        let (a, b) = self.region;
        self.x.iter().zip(&v).filter(|(x, _)| **x >= a && **x <= b).map(|(_, c)| c.norm_sqr()).sum()
    }
}

pub fn build_grid_hamiltonian(
    v: &PeriodicPotential,
    profile: &PerturbationProfile,
    region: &Region,
    zeta: f64,
    eps: f64,
    oc: &OracleConfig,
) -> Result<GridHamiltonian> {
    oc.validate()?;
    if !(eps > 0.0) {
        return Err(Error::Config(format!("ε must be positive, got {eps}")));
    }
    region.check(oc, zeta, eps)?;
    let ppp = oc.points_per_period;
    let h = 1.0 / ppp as f64;
    let n = oc.grid_points();
    // grid on multiples of h so that ζ → ζ + ε is an exact shift by `ppp` points
    let half = n / 2;
    let l = half as f64 * h;
    let x: Vec<f64> = (1..2 * half).map(|j| (j as f64 - half as f64) * h).collect();
    let inv_h2 = 1.0 / (h * h);
    let onset = oc.cap_onset * l;
    let ramp = (1.0 - oc.cap_onset) * l;
    let base = x.iter().map(|&t| 2.0 * inv_h2 + v.value(t) + profile.value(eps * t + zeta)).collect();
    let cap_shape = x.iter().map(|&t| ((t.abs() - onset).max(0.0) / ramp).powi(2)).collect();
    Ok(GridHamiltonian { x, base, cap_shape, off: -inv_h2, eta: oc.cap_strength, region: region.x_interval(zeta, eps) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleEigenpair {
    pub eigenvalue: Complex64,
    /// Displacement of the eigenvalue when `η → η/2` (0 without absorber).
    pub stability: f64,
    /// Fraction of `|ψ|²` on the localization interval.
    pub localization: f64,
}

impl OracleEigenpair {
    /// Displacement below `fraction · |Im λ|`.
    pub fn is_stable(&self, fraction: f64) -> bool {
        self.stability < fraction * self.eigenvalue.im.abs()
    }
}

fn complex_window(h: &GridHamiltonian, eta: f64, window: (f64, f64)) -> Result<(Vec<Complex64>, Vec<Complex64>, Vec<Complex64>)> {
    let d = h.complex_diag(eta);
    let e = vec![Complex64::from(h.off); h.size() - 1];
    let all = complex_symmetric_eigenvalues(&d, &e)?;
    let mut picked: Vec<Complex64> = all
        .into_iter()
        .filter(|z| z.re >= window.0 && z.re <= window.1)
        .map(|z| refine(&d, &e, z, 1e-6 * (1.0 + z.norm())).unwrap_or(z))
        .collect();
    picked.sort_by(|a, b| a.re.total_cmp(&b.re));
    Ok((picked, d, e))
}

/// Eigenvalues with real part in `window`, ascending in `Re`.
pub fn oracle_spectrum(h: &GridHamiltonian, window: (f64, f64)) -> Result<Vec<OracleEigenpair>> {
    if !(window.0 < window.1) {
        return Err(Error::Config(format!("empty window [{}, {}]", window.0, window.1)));
    }
    let n = h.size();
    if h.eta == 0.0 {
        let e = vec![h.off; n - 1];
        let ev = eigenvalues_in(&h.base, &e, window.0, window.1, 1e-14);
        let dc = h.complex_diag(0.0);
        let ec = vec![Complex64::from(h.off); n - 1];
        return Ok(ev
            .into_iter()
            .map(|x| {
                let z = Complex64::from(x);
                OracleEigenpair { eigenvalue: z, stability: 0.0, localization: h.localization(&dc, &ec, z) }
            })
            .collect());
    }
    let (full, d, e) = complex_window(h, h.eta, window)?;
    // widen so that partners of values near the window ends are not lost
    let pad = 0.05 * (window.1 - window.0);
    let (half, _, _) = complex_window(h, 0.5 * h.eta, (window.0 - pad, window.1 + pad))?;
    Ok(full
        .into_iter()
        .map(|z| {
            let stability = half.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
            OracleEigenpair { eigenvalue: z, stability, localization: h.localization(&d, &e, z) }
        })
        .collect())
}
