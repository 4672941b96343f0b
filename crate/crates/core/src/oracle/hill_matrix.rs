//! Band edges from truncated Fourier (Hill) matrices at quasi-momenta `0` and `π`.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hill::PeriodicPotential;

/// Edges compared between truncations `M` and `2M`.
pub const CHECKED_EDGES: usize = 8;
pub const CONVERGENCE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HillEdges {
    /// Sorted union of the periodic and antiperiodic eigenvalues at truncation `M`.
    pub edges: Vec<f64>,
    pub truncation: usize,
    /// Largest change of the first [`CHECKED_EDGES`] edges when `M` is doubled.
    pub displacement: f64,
    pub converged: bool,
}

/// Eigenvalues of `(2πn + θ)² δ_nm + V̂_{n−m}`, `|n|, |m| ≤ M`.
pub fn hill_matrix_eigenvalues(v: &PeriodicPotential, m: usize, theta: f64) -> Vec<f64> {
    let size = 2 * m + 1;
    let coeff = |j: i64| -> Complex64 {
        if j == 0 {
            return Complex64::from(v.mean);
        }
        let k = j.unsigned_abs() as usize - 1;
        let a = v.cos_coeffs.get(k).copied().unwrap_or(0.0);
        let b = v.sin_coeffs.get(k).copied().unwrap_or(0.0);
        // cos → (e⁺ + e⁻)/2, sin → (e⁺ − e⁻)/2i
        Complex64::new(0.5 * a, -0.5 * b * j.signum() as f64)
    };
    let h = DMatrix::from_fn(size, size, |r, c| {
        let (n, mm) = (r as i64 - m as i64, c as i64 - m as i64);
        let mut x = coeff(n - mm);
        if n == mm {
            x += (TAU * n as f64 + theta).powi(2);
        }
        x
    });
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn union(v: &PeriodicPotential, m: usize) -> Vec<f64> {
    let mut e = hill_matrix_eigenvalues(v, m, 0.0);
    e.extend(hill_matrix_eigenvalues(v, m, std::f64::consts::PI));
    e.sort_by(f64::total_cmp);
    e
}

/// Band edges `E_1 ≤ E_2 ≤ …` from the Hill matrices, with the `M`-doubling check.
pub fn hill_matrix_band_edges(v: &PeriodicPotential, m: usize) -> Result<HillEdges> {
    v.validate()?;
    let need = 4 * v.n_modes() + 8;
    if m < need {
        return Err(Error::Precondition(format!("truncation M = {m} is below 4·modes + 8 = {need}")));
    }
    let coarse = union(v, m);
    let fine = union(v, 2 * m);
    let displacement =
        coarse.iter().zip(&fine).take(CHECKED_EDGES).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(HillEdges { edges: coarse, truncation: m, displacement, converged: displacement < CONVERGENCE_TOL })
}
