use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lorentzian bump `height / (1 + ((ζ − center)/width)²)`; written as `[height, center, width]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Bump {
    pub height: f64,
    pub center: f64,
    pub width: f64,
}

impl From<[f64; 3]> for Bump {
    fn from(t: [f64; 3]) -> Self {
        Bump { height: t[0], center: t[1], width: t[2] }
    }
}

impl From<Bump> for [f64; 3] {
    fn from(b: Bump) -> Self {
        [b.height, b.center, b.width]
    }
}

/// `W(ζ) = mu + nu·ζ/√(1+ζ²) + Σ_j b_j / (1 + ((ζ−c_j)/w_j)²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationProfile {
    pub mu: f64,
    #[serde(default)]
    pub nu: f64,
    #[serde(default)]
    pub bumps: Vec<Bump>,
}

/// Distance to a singularity below which evaluation is refused.
pub const SINGULARITY_GUARD: f64 = 1e-6;

impl PerturbationProfile {
    pub fn new(mu: f64, nu: f64, bumps: Vec<Bump>) -> Result<Self> {
        let p = PerturbationProfile { mu, nu, bumps };
        p.validate()?;
        Ok(p)
    }

    pub fn step(mu: f64, nu: f64) -> Self {
        PerturbationProfile { mu, nu, bumps: vec![] }
    }

    pub fn with_bump(mut self, height: f64, center: f64, width: f64) -> Self {
        self.bumps.push(Bump { height, center, width });
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.mu, self.nu].iter().all(|x| x.is_finite())
            && self.bumps.iter().all(|b| b.height.is_finite() && b.center.is_finite() && b.width.is_finite());
        if !finite {
            return Err(Error::Config("profile parameters must be finite".into()));
        }
        if let Some(b) = self.bumps.iter().find(|b| !(b.width > 0.0)) {
            return Err(Error::Config(format!("bump width must be positive, got {}", b.width)));
        }
        if self.nu == 0.0 && self.bumps.iter().all(|b| b.height == 0.0) {
            return Err(Error::Config("profile is constant: need nu ≠ 0 or a nonzero bump".into()));
        }
        Ok(())
    }

    pub fn w_plus(&self) -> f64 {
        self.mu + self.nu
    }

    pub fn w_minus(&self) -> f64 {
        self.mu - self.nu
    }

    pub fn decay_exponent(&self) -> f64 {
        2.0
    }

    /// `h = min(1, min_j w_j)`: every singularity is at least this far from the real axis.
    pub fn analyticity_height(&self) -> f64 {
        self.bumps.iter().map(|b| b.width).fold(1.0, f64::min)
    }

    /// Admissible cone constant `C₀ = 2/h`.
    pub fn cone_constant(&self) -> f64 {
        2.0 / self.analyticity_height()
    }

    /// Branch points `±i` of the step term and poles `c_j ± i w_j`.
    pub fn singularities(&self) -> Vec<Complex64> {
        let mut s = Vec::new();
        if self.nu != 0.0 {
            s.push(Complex64::new(0.0, 1.0));
            s.push(Complex64::new(0.0, -1.0));
        }
        for b in &self.bumps {
            if b.height != 0.0 {
                s.push(Complex64::new(b.center, b.width));
                s.push(Complex64::new(b.center, -b.width));
            }
        }
        s
    }

    /// Characteristic half-extent of the profile's structure.
    pub fn extent(&self) -> f64 {
        self.bumps.iter().map(|b| b.center.abs() + b.width).fold(0.0, f64::max)
    }

    pub fn value(&self, z: f64) -> f64 {
        let mut w = self.mu + self.nu * z / (1.0 + z * z).sqrt();
        for b in &self.bumps {
            let u = (z - b.center) / b.width;
            w += b.height / (1.0 + u * u);
        }
        w
    }

    pub fn derivative(&self, z: f64) -> f64 {
        let mut d = self.nu / (1.0 + z * z).powf(1.5);
        for b in &self.bumps {
            let u = (z - b.center) / b.width;
            let q = 1.0 + u * u;
            d -= 2.0 * b.height * u / (b.width * q * q);
        }
        d
    }

    fn guard(&self, z: Complex64) -> Result<()> {
        for s in self.singularities() {
            let d = (z - s).norm();
            if d < SINGULARITY_GUARD {
                return Err(Error::NearSingularity { distance: d, singularity: s });
            }
        }
        Ok(())
    }

    /// `W(ζ)` for complex `ζ` (principal branch of the square root in the step term).
    pub fn value_complex(&self, z: Complex64) -> Result<Complex64> {
        self.guard(z)?;
        if z.im == 0.0 {
            return Ok(Complex64::from(self.value(z.re)));
        }
        let mut w = Complex64::from(self.mu) + self.nu * z / (1.0 + z * z).sqrt();
        for b in &self.bumps {
            let u = (z - b.center) / b.width;
            w += b.height / (1.0 + u * u);
        }
        Ok(w)
    }

    pub fn derivative_complex(&self, z: Complex64) -> Result<Complex64> {
        self.guard(z)?;
        let mut d = self.nu / (1.0 + z * z).powf(1.5);
        for b in &self.bumps {
            let u = (z - b.center) / b.width;
            let q = 1.0 + u * u;
            d -= 2.0 * b.height * u / (b.width * q * q);
        }
        Ok(d)
    }
}

/// `W` evaluated at complex `ζ`.
pub fn evaluate_profile(profile: &PerturbationProfile, z: Complex64) -> Result<Complex64> {
    profile.value_complex(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let step = PerturbationProfile::step(0.0, 1.0);
        assert_eq!(evaluate_profile(&step, Complex64::from(0.0)).unwrap(), Complex64::from(0.0));
        for z in [10.0, 100.0, 1000.0] {
            let gap = 1.0 - step.value(z);
            assert!((gap * 2.0 * z * z - 1.0).abs() < 2.0 / (z * z));
        }
        let bump = PerturbationProfile { mu: 0.0, nu: 0.0, bumps: vec![Bump { height: 1.0, center: 0.0, width: 1.0 }] };
        assert!((bump.value(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn decay_and_limits() {
        let p = PerturbationProfile::step(0.3, -2.1).with_bump(4.2, 6.0, 2.0);
        let mut worst: f64 = 0.0;
        for z in [10.0, 30.0, 100.0] {
            worst = worst.max(z * z * (p.value(z) - p.w_plus()).abs());
            worst = worst.max(z * z * (p.value(-z) - p.w_minus()).abs());
        }
        assert!(worst < 100.0, "{worst}");
        assert_eq!(p.analyticity_height(), 1.0);
        assert_eq!(p.cone_constant(), 2.0);
    }

    #[test]
    fn complex_matches_real_and_derivative() {
        let p = PerturbationProfile::step(0.3, -2.1).with_bump(4.2, 6.0, 2.0);
        for x in [-3.0, 0.2, 5.5] {
            let z = Complex64::new(x, 0.3);
            let h = 1e-6;
            let fd = (p.value_complex(z + h).unwrap() - p.value_complex(z - h).unwrap()) / (2.0 * h);
            assert!((fd - p.derivative_complex(z).unwrap()).norm() < 1e-8);
            assert!((p.value_complex(Complex64::from(x)).unwrap().re - p.value(x)).abs() < 1e-15);
            assert!((p.value_complex(z.conj()).unwrap() - p.value_complex(z).unwrap().conj()).norm() < 1e-14);
        }
        assert!(matches!(
            p.value_complex(Complex64::new(6.0, 2.0 + 1e-8)),
            Err(Error::NearSingularity { .. })
        ));
    }

    #[test]
    fn bumps_serialize_as_triples() {
        let p = PerturbationProfile::step(0.0, -2.1).with_bump(4.2, 6.0, 2.0);
        let s = toml::to_string(&p).unwrap();
        assert!(s.contains("bumps = [[4.2, 6.0, 2.0]]"), "{s}");
        assert_eq!(toml::from_str::<PerturbationProfile>(&s).unwrap(), p);
    }
}
