//! Solver-versus-oracle comparisons behind the `verify` command and the acceptance suite.

use serde::{Deserialize, Serialize};

use crate::actions::actions_at;
use crate::error::{Error, Result};
use crate::hill::{BandStructure, PeriodicPotential};
use crate::momentum::fit_slope;
use crate::oracle::{build_grid_hamiltonian, oracle_spectrum, OracleConfig, OracleEigenpair, Region};
use crate::quadrature::QuadratureSettings;
use crate::resonance::{locate_resonances, SolverConfig};
use crate::window::PerturbationProfile;

pub const SPACING_TOL: f64 = 0.10;
pub const SLOPE_TOL: f64 = 0.15;
pub const DRIFT_TOL: f64 = 0.01;
/// Displacement under `η → η/2` relative to `|Im λ|` below which an eigenvalue is CAP-stable.
pub const STABILITY_FRACTION: f64 = 0.10;
/// `|Im λ|` below which a CAP-stable eigenvalue counts as a narrow resonance.
pub const NARROW_WIDTH: f64 = 1e-2;
/// Fraction of `|ψ|²` on the structure required of a resonance state.
pub const LOCALIZATION_MIN: f64 = 0.5;

/// Everything that defines `H_{ζ,ε}` and its leading-order data.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub potential: &'a PeriodicPotential,
    pub profile: &'a PerturbationProfile,
    pub bands: &'a BandStructure,
    pub window: (f64, f64),
}

impl Problem<'_> {
    pub fn region(&self) -> Result<Region> {
        Region::from_window(self.profile, self.bands, self.window)
    }

    /// Oracle eigenpairs at `(ζ, ε)`.
    pub fn oracle(&self, zeta: f64, eps: f64, oc: &OracleConfig) -> Result<Vec<OracleEigenpair>> {
        let region = self.region()?;
        let oc = if oc.auto_fit { oc.fitted(&region, zeta, eps) } else { oc.clone() };
        let h = build_grid_hamiltonian(self.potential, self.profile, &region, zeta, eps, &oc)?;
        oracle_spectrum(&h, self.window)
    }

    pub fn solver(&self, cfg: &SolverConfig) -> Result<Vec<crate::resonance::ResonanceEstimate>> {
        let cfg = SolverConfig { window: [self.window.0, self.window.1], ..cfg.clone() };
        locate_resonances(&cfg, self.profile, self.bands)
    }
}

/// CAP-stable, narrow and localized.
pub fn is_resonance(p: &OracleEigenpair) -> bool {
    p.is_stable(STABILITY_FRACTION) && p.eigenvalue.im.abs() < NARROW_WIDTH && p.localization > LOCALIZATION_MIN
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacingComparison {
    pub epsilon: f64,
    pub solver: Vec<f64>,
    pub oracle: Vec<f64>,
    pub count_difference: i64,
    /// `k` in the pairing `oracle[i] ↔ solver[i + k]`.
    pub index_shift: i64,
    pub max_spacing_error: f64,
    pub pass: bool,
}

/// Pair two ascending sequences under the global shift minimizing the mean offset and
/// compare consecutive spacings.
pub fn compare_spacings(solver: &[f64], oracle: &[f64]) -> (i64, f64) {
    let mut best = (0, f64::INFINITY);
    for k in -3i64..=3 {
        let pairs: Vec<(f64, f64)> = pairs(solver, oracle, k);
        if pairs.len() < 2 {
            continue;
        }
        let mean = pairs.iter().map(|(s, o)| (s - o).abs()).sum::<f64>() / pairs.len() as f64;
        if mean < best.1 {
            best = (k, mean);
        }
    }
    let p = pairs(solver, oracle, best.0);
    let err = p
        .windows(2)
        .map(|w| {
            let ds = w[1].0 - w[0].0;
            let d_o = w[1].1 - w[0].1;
            ((d_o - ds) / ds).abs()
        })
        .fold(0.0, f64::max);
    (best.0, if p.len() < 2 { f64::INFINITY } else { err })
}

fn pairs(solver: &[f64], oracle: &[f64], k: i64) -> Vec<(f64, f64)> {
    oracle
        .iter()
        .enumerate()
        .filter_map(|(i, &o)| {
            let j = i as i64 + k;
            (j >= 0 && (j as usize) < solver.len()).then(|| (solver[j as usize], o))
        })
        .collect()
}

/// Bound-state regime: all solver levels against all oracle eigenvalues (`η = 0`).
pub fn bound_state_spacings(p: &Problem, cfg: &SolverConfig, oc: &OracleConfig) -> Result<SpacingComparison> {
    let mut solver: Vec<f64> = p.solver(cfg)?.iter().map(|r| r.e_real).collect();
    solver.sort_by(f64::total_cmp);
    let oc = OracleConfig { cap_strength: 0.0, ..oc.clone() };
    let oracle: Vec<f64> = p.oracle(cfg.zeta, cfg.epsilon, &oc)?.iter().map(|e| e.eigenvalue.re).collect();
    let (index_shift, max_spacing_error) = compare_spacings(&solver, &oracle);
    let count_difference = oracle.len() as i64 - solver.len() as i64;
    Ok(SpacingComparison {
        epsilon: cfg.epsilon,
        pass: count_difference.abs() <= 1 && max_spacing_error < SPACING_TOL,
        solver,
        oracle,
        count_difference,
        index_shift,
        max_spacing_error,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    pub epsilon: f64,
    pub e_real: f64,
    /// `−2 Im λ`.
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthLadder {
    pub reference_energy: f64,
    pub entries: Vec<LadderEntry>,
    /// `min(S₊, S₋)` at the reference energy.
    pub action: f64,
    /// Fitted slope of `ln(width)` against `1/ε`.
    pub slope: f64,
    /// Same for `ln(width/ε)`.
    pub slope_without_prefactor: f64,
    /// `slope / (−action)`.
    pub ratio: f64,
    pub pass: bool,
}

/// CAP resonance nearest `e_ref` for each `ε`, and the exponential rate of its width.
pub fn width_ladder(p: &Problem, e_ref: f64, ladder: &[f64], zeta: f64, oc: &OracleConfig) -> Result<WidthLadder> {
    if ladder.len() < 2 {
        return Err(Error::Config("the ε-ladder needs at least two values".into()));
    }
    if !(oc.cap_strength > 0.0) {
        return Err(Error::Config("the width ladder needs a complex absorbing potential (cap_strength > 0)".into()));
    }
    let a = actions_at(p.profile, p.bands, e_ref, &QuadratureSettings::default())?;
    let action = a.s_plus.min(a.s_minus);
    let mut entries = Vec::new();
    for &eps in ladder {
        let eigs = p.oracle(zeta, eps, oc)?;
        let best = eigs
            .iter()
            .filter(|e| is_resonance(e))
            .min_by(|x, y| (x.eigenvalue.re - e_ref).abs().total_cmp(&(y.eigenvalue.re - e_ref).abs()))
            .ok_or_else(|| Error::InternalConsistency(format!("no CAP-stable resonance in the window at ε = {eps}")))?;
        entries.push(LadderEntry { epsilon: eps, e_real: best.eigenvalue.re, width: -2.0 * best.eigenvalue.im });
    }
    let xs: Vec<f64> = entries.iter().map(|e| 1.0 / e.epsilon).collect();
    let ys: Vec<f64> = entries.iter().map(|e| e.width.ln()).collect();
    let ys2: Vec<f64> = entries.iter().map(|e| (e.width / e.epsilon).ln()).collect();
    let slope = fit_slope(&xs, &ys);
    let ratio = slope / -action;
    Ok(WidthLadder {
        reference_energy: e_ref,
        entries,
        action,
        slope,
        slope_without_prefactor: fit_slope(&xs, &ys2),
        ratio,
        pass: (ratio - 1.0).abs() <= SLOPE_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftComparison {
    pub epsilon: f64,
    pub zeta: f64,
    /// `(l, finite difference, formula)`.
    pub levels: Vec<(i64, f64, f64)>,
    pub max_relative_error: f64,
    pub pass: bool,
}

/// Finite-difference `dE^l/dζ` between `ζ` and `ζ + 0.01ε` against the reported slope.
pub fn drift_comparison(p: &Problem, cfg: &SolverConfig) -> Result<DriftComparison> {
    let dz = 0.01 * cfg.epsilon;
    let a = p.solver(cfg)?;
    let b = p.solver(&SolverConfig { zeta: cfg.zeta + dz, ..cfg.clone() })?;
    let levels: Vec<(i64, f64, f64)> = a
        .iter()
        .filter_map(|x| b.iter().find(|y| y.l == x.l).map(|y| (x.l, (y.e_real - x.e_real) / dz, x.de_dzeta)))
        .collect();
    if levels.is_empty() {
        return Err(Error::InternalConsistency("no level is present at both ζ values".into()));
    }
    let max_relative_error = levels
        .iter()
        .map(|&(_, fd, f)| if f == 0.0 { fd.abs() } else { ((fd - f) / f).abs() })
        .fold(0.0, f64::max);
    Ok(DriftComparison {
        epsilon: cfg.epsilon,
        zeta: cfg.zeta,
        pass: max_relative_error < DRIFT_TOL,
        levels,
        max_relative_error,
    })
}

/// Largest distance from a point of `a` to the nearest point of `b`, symmetrized.
pub fn set_distance(a: &[num_complex::Complex64], b: &[num_complex::Complex64]) -> f64 {
    let one = |a: &[num_complex::Complex64], b: &[num_complex::Complex64]| {
        a.iter().map(|x| b.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    one(a, b).max(one(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_alignment() {
        let s: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let o: Vec<f64> = (1..10).map(|i| i as f64 + 0.01).collect();
        let (k, err) = compare_spacings(&s, &o);
        assert_eq!(k, 1);
        assert!(err < 1e-12);
        let stretched: Vec<f64> = s.iter().map(|x| 1.2 * x).collect();
        assert!(compare_spacings(&s, &stretched).1 > 0.19);
    }

    #[test]
    fn set_distance_is_symmetric() {
        use num_complex::Complex64 as C;
        let a = [C::new(0.0, 0.0), C::new(1.0, 0.0)];
        let b = [C::new(0.0, 0.1)];
        assert!((set_distance(&a, &b) - (1.0f64 + 0.01).sqrt()).abs() < 1e-12);
        assert_eq!(set_distance(&[], &[]), 0.0);
    }
}
