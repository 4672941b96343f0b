use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-periodic potential `V(x) = mean + Σ_m (a_m cos 2πmx + b_m sin 2πmx)`, `m = 1, 2, …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPotential {
    pub mean: f64,
    #[serde(default)]
    pub cos_coeffs: Vec<f64>,
    #[serde(default)]
    pub sin_coeffs: Vec<f64>,
    /// Admit a constant potential (analytic reductions only).
    #[serde(default)]
    pub test_mode: bool,
}

impl PeriodicPotential {
    pub fn new(mean: f64, cos_coeffs: Vec<f64>, sin_coeffs: Vec<f64>) -> Result<Self> {
        let v = PeriodicPotential { mean, cos_coeffs, sin_coeffs, test_mode: false };
        v.validate()?;
        Ok(v)
    }

    /// `V ≡ 0`, flagged as test mode.
    pub fn free() -> Self {
        PeriodicPotential { mean: 0.0, cos_coeffs: vec![], sin_coeffs: vec![], test_mode: true }
    }

    /// `V(x) = amplitude · cos 2πx`.
    pub fn cosine(amplitude: f64) -> Self {
        PeriodicPotential { mean: 0.0, cos_coeffs: vec![amplitude], sin_coeffs: vec![], test_mode: false }
    }

    pub fn validate(&self) -> Result<()> {
        let all = std::iter::once(&self.mean).chain(&self.cos_coeffs).chain(&self.sin_coeffs);
        if all.clone().any(|c| !c.is_finite()) {
            return Err(Error::Config("potential coefficients must be finite".into()));
        }
        if !self.test_mode && self.is_constant() {
            return Err(Error::Config(
                "potential is constant; set test_mode = true to allow it".into(),
            ));
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        self.cos_coeffs.iter().chain(&self.sin_coeffs).all(|&c| c == 0.0)
    }

    /// Highest harmonic present.
    pub fn n_modes(&self) -> usize {
        let last = |c: &[f64]| c.iter().rposition(|&a| a != 0.0).map_or(0, |i| i + 1);
        last(&self.cos_coeffs).max(last(&self.sin_coeffs))
    }

    /// `Σ (|a_m| + |b_m|)`, a bound on `|V − mean|`.
    pub fn fourier_mass(&self) -> f64 {
        self.cos_coeffs.iter().chain(&self.sin_coeffs).map(|c| c.abs()).sum()
    }

    pub fn value(&self, x: f64) -> f64 {
        let mut v = self.mean;
        for (m, a) in self.cos_coeffs.iter().enumerate() {
            v += a * (TAU * (m + 1) as f64 * x).cos();
        }
        for (m, b) in self.sin_coeffs.iter().enumerate() {
            v += b * (TAU * (m + 1) as f64 * x).sin();
        }
        v
    }

    pub fn lower_bound(&self) -> f64 {
        self.mean - self.fourier_mass()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_rejected_outside_test_mode() {
        assert!(PeriodicPotential::new(1.0, vec![0.0], vec![]).is_err());
        assert!(PeriodicPotential::free().validate().is_ok());
        assert!(PeriodicPotential::new(0.0, vec![f64::NAN], vec![]).is_err());
    }

    #[test]
    fn evaluates_series() {
        let v = PeriodicPotential::new(0.5, vec![2.0, 0.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(v.n_modes(), 2);
        let x: f64 = 0.1;
        let expect = 0.5 + 2.0 * (TAU * x).cos() + (2.0 * TAU * x).sin();
        assert!((v.value(x) - expect).abs() < 1e-15);
        assert!((v.value(x + 3.0) - expect).abs() < 1e-12);
    }
}
