//! Period-one transfer matrix of `−y″ + V y = E y`.
//!
//! The first-order system `Y′ = A(x) Y`, `A = [[0, 1], [V − E, 0]]`, is advanced with a
//! sixth-order Magnus integrator (three Gauss nodes). Every step is the exponential of a
//! traceless matrix, so `det Y = 1` holds to rounding regardless of the tolerance. The
//! step size is controlled by step doubling. The same steps carry `∂Y/∂E`, obtained from
//! the Fréchet derivative of the matrix exponential.

use nalgebra::{ComplexField, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::potential::PeriodicPotential;
use crate::error::{Error, Result};

/// Default per-step relative tolerance of the monodromy integration.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Transfer matrix over one period in the basis `(y, y′)(0) = (1, 0)` and `(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromyMatrix {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl MonodromyMatrix {
    fn from_matrix(m: &Matrix2<Complex64>) -> Self {
        MonodromyMatrix { m11: m[(0, 0)], m12: m[(0, 1)], m21: m[(1, 0)], m22: m[(1, 1)] }
    }

    pub fn trace(&self) -> Complex64 {
        self.m11 + self.m22
    }

    pub fn det(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// `D² − 4`, written so that it does not cancel near band edges (uses `det = 1`).
    pub fn discriminant_gap(&self) -> Complex64 {
        let d = self.m11 - self.m22;
        d * d + 4.0 * self.m12 * self.m21
    }
}

/// Scalars the integrator runs on: `f64` for real energies, `Complex64` otherwise.
trait Scalar: ComplexField<RealField = f64> + Copy {
    /// `c(σ) = cosh √σ`, `S(σ) = sinh √σ / √σ` and `S′(σ)`.
    fn phi(sigma: Self) -> (Self, Self, Self);
    fn abs_f64(self) -> f64;
}

fn phi_series<T: Scalar>(sigma: T) -> (T, T, T) {
    // c = Σ σᵏ/(2k)!, S = Σ σᵏ/(2k+1)!, S′ = Σ k σᵏ⁻¹/(2k+1)!
    let (mut c, mut s, mut ds) = (T::zero(), T::zero(), T::zero());
    let mut pow = T::one();
    let mut fact_even = 1.0;
    for k in 0..14 {
        let fact_odd = fact_even * (2 * k + 1) as f64;
        c += pow * T::from_real(1.0 / fact_even);
        s += pow * T::from_real(1.0 / fact_odd);
        let next_fact_odd = fact_odd * ((2 * k + 2) * (2 * k + 3)) as f64;
        ds += pow * T::from_real((k + 1) as f64 / next_fact_odd);
        fact_even = fact_odd * (2 * k + 2) as f64;
        pow *= sigma;
    }
    (c, s, ds)
}

impl Scalar for f64 {
    fn phi(sigma: f64) -> (f64, f64, f64) {
        if sigma.abs() < 0.5 {
            return phi_series(sigma);
        }
        let (c, s) = if sigma > 0.0 {
            let r = sigma.sqrt();
            (r.cosh(), r.sinh() / r)
        } else {
            let r = (-sigma).sqrt();
            (r.cos(), r.sin() / r)
        };
        (c, s, (c - s) / (2.0 * sigma))
    }

    fn abs_f64(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn phi(sigma: Complex64) -> (Complex64, Complex64, Complex64) {
        if sigma.norm() < 0.5 {
            return phi_series(sigma);
        }
        let r = sigma.sqrt();
        let (c, s) = (r.cosh(), r.sinh() / r);
        (c, s, (c - s) / (2.0 * sigma))
    }

    fn abs_f64(self) -> f64 {
        self.norm()
    }
}

fn comm<T: Scalar>(a: &Matrix2<T>, b: &Matrix2<T>) -> Matrix2<T> {
    a * b - b * a
}

/// `exp Ω` for traceless `Ω`, and its directional derivative along `Δ`.
fn expm_traceless<T: Scalar>(omega: &Matrix2<T>, delta: Option<&Matrix2<T>>) -> (Matrix2<T>, Option<Matrix2<T>>) {
    let sigma = (omega * omega).trace() * T::from_real(0.5);
    let (c, s, ds) = T::phi(sigma);
    let exp = Matrix2::identity() * c + omega * s;
    let dexp = delta.map(|d| {
        let sdot = (omega * d).trace();
        Matrix2::identity() * (s * T::from_real(0.5) * sdot) + omega * (ds * sdot) + d * s
    });
    (exp, dexp)
}

/// One Magnus step on `[x, x + h]`; returns the propagator and optionally its E-derivative.
fn magnus_step<T: Scalar>(
    v: &PeriodicPotential,
    x: f64,
    h: f64,
    e: T,
    with_derivative: bool,
) -> (Matrix2<T>, Option<Matrix2<T>>) {
    let re = T::from_real;
    let r = 15f64.sqrt() / 10.0;
    let gen = |x: f64| Matrix2::new(T::zero(), T::one(), re(v.value(x)) - e, T::zero());
    let a1 = gen(x + (0.5 - r) * h);
    let a2 = gen(x + 0.5 * h);
    let a3 = gen(x + (0.5 + r) * h);
    let alpha1 = a2 * re(h);
    let alpha2 = (a3 - a1) * re(15f64.sqrt() * h / 3.0);
    let alpha3 = (a3 - a2 * re(2.0) + a1) * re(10.0 * h / 3.0);
    let c1 = comm(&alpha1, &alpha2);
    let inner = alpha3 * re(2.0) + c1;
    let c2 = comm(&alpha1, &inner) * re(-1.0 / 60.0);
    let x_ = alpha1 * re(-20.0) - alpha3 + c1;
    let y_ = alpha2 + c2;
    let omega = alpha1 + alpha3 * re(1.0 / 12.0) + comm(&x_, &y_) * re(1.0 / 240.0);

    if !with_derivative {
        return expm_traceless(&omega, None);
    }
    // ∂A/∂E = [[0, 0], [−1, 0]]; only α₁ depends on E.
    let d_alpha1 = Matrix2::new(T::zero(), T::zero(), re(-h), T::zero());
    let d_c1 = comm(&d_alpha1, &alpha2);
    let d_c2 = (comm(&d_alpha1, &inner) + comm(&alpha1, &d_c1)) * re(-1.0 / 60.0);
    let d_x = d_alpha1 * re(-20.0) + d_c1;
    let d_omega = d_alpha1 + (comm(&d_x, &y_) + comm(&x_, &d_c2)) * re(1.0 / 240.0);
    expm_traceless(&omega, Some(&d_omega))
}

fn max_abs<T: Scalar>(m: &Matrix2<T>) -> f64 {
    m.iter().map(|z| z.abs_f64()).fold(0.0, f64::max)
}

/// Step-doubling driver. A step is accepted when the full step and the two half steps
/// differ by at most `tol` (relative); the half steps, roughly 2⁶ times more accurate,
/// are kept.
fn integrate_generic<T: Scalar>(
    v: &PeriodicPotential,
    e: T,
    e_norm: f64,
    tol: f64,
    with_derivative: bool,
) -> std::result::Result<(Matrix2<T>, Option<Matrix2<T>>), f64> {
    let mut y = Matrix2::<T>::identity();
    let mut dy = Matrix2::<T>::zeros();
    let mut x = 0.0;
    let scale = (e_norm + v.fourier_mass() + v.mean.abs()).sqrt().max(1.0);
    let mut h = (0.5 / scale).min(0.25);
    let mut steps = 0usize;
    while x < 1.0 {
        let last = h >= 1.0 - x;
        let h_try = if last { 1.0 - x } else { h };
        let (full, _) = magnus_step(v, x, h_try, e, false);
        let (p1, d1) = magnus_step(v, x, 0.5 * h_try, e, with_derivative);
        let (p2, d2) = magnus_step(v, x + 0.5 * h_try, 0.5 * h_try, e, with_derivative);
        let two = p2 * p1;
        let err = max_abs(&(full - two)) / max_abs(&two).max(1.0);
        if err <= tol {
            if let (Some(d1), Some(d2)) = (d1, d2) {
                let dtwo = d2 * p1 + p2 * d1;
                dy = dtwo * y + two * dy;
            }
            y = two * y;
            x = if last { 1.0 } else { x + h_try };
        }
        let factor = if err == 0.0 { 4.0 } else { (0.9 * (tol / err).powf(1.0 / 7.0)).clamp(0.2, 4.0) };
        h = h_try * factor;
        steps += 1;
        if h < 1e-12 || steps > 1_000_000 {
            return Err(x);
        }
    }
    Ok((y, with_derivative.then_some(dy)))
}

fn to_complex(m: &Matrix2<f64>) -> Matrix2<Complex64> {
    m.map(Complex64::from)
}

fn integrate(
    v: &PeriodicPotential,
    e: Complex64,
    tol: f64,
    with_derivative: bool,
) -> Result<(Matrix2<Complex64>, Option<Matrix2<Complex64>>)> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
    }
    if !(e.re.is_finite() && e.im.is_finite()) {
        return Err(Error::Precondition(format!("energy must be finite, got {e}")));
    }
    let fail = |x| Error::IntegrationFailure { x, energy: e };
    if e.im == 0.0 {
        let (m, dm) = integrate_generic(v, e.re, e.re.abs(), tol, with_derivative).map_err(fail)?;
        Ok((to_complex(&m), dm.as_ref().map(to_complex)))
    } else {
        integrate_generic(v, e, e.norm(), tol, with_derivative).map_err(fail)
    }
}

pub fn integrate_monodromy(v: &PeriodicPotential, e: Complex64, tol: f64) -> Result<MonodromyMatrix> {
    integrate(v, e, tol, false).map(|(m, _)| MonodromyMatrix::from_matrix(&m))
}

/// Monodromy together with its derivative in `E`.
pub fn integrate_monodromy_with_derivative(
    v: &PeriodicPotential,
    e: Complex64,
    tol: f64,
) -> Result<(MonodromyMatrix, MonodromyMatrix)> {
    let (m, dm) = integrate(v, e, tol, true)?;
    Ok((MonodromyMatrix::from_matrix(&m), MonodromyMatrix::from_matrix(&dm.unwrap())))
}

/// Hill discriminant `D(E) = tr M(E)`.
pub fn discriminant(v: &PeriodicPotential, e: Complex64) -> Result<Complex64> {
    Ok(integrate_monodromy(v, e, DEFAULT_TOL)?.trace())
}

/// `(D(E), D′(E))`.
pub fn discriminant_with_derivative(
    v: &PeriodicPotential,
    e: Complex64,
    tol: f64,
) -> Result<(Complex64, Complex64)> {
    let (m, dm) = integrate_monodromy_with_derivative(v, e, tol)?;
    Ok((m.trace(), dm.trace()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::from(re)
    }

    #[test]
    fn free_discriminant() {
        let v = PeriodicPotential::free();
        assert_relative_eq!(discriminant(&v, c(PI * PI)).unwrap().re, -2.0, epsilon = 1e-10);
        assert_relative_eq!(discriminant(&v, c(-1.0)).unwrap().re, 2.0 * 1f64.cosh(), epsilon = 1e-10);
        assert_relative_eq!(discriminant(&v, c(0.0)).unwrap().re, 2.0, epsilon = 1e-12);
        assert_relative_eq!(discriminant(&v, c(4.0 * PI * PI)).unwrap().re, 2.0, epsilon = 1e-10);
        let e = Complex64::new(3.0, 0.7);
        let expect = e.sqrt().cos() * 2.0;
        assert!((discriminant(&v, e).unwrap() - expect).norm() < 1e-10);
    }

    #[test]
    fn real_energy_gives_real_entries() {
        let v = PeriodicPotential::new(0.3, vec![2.0, -0.5], vec![0.7]).unwrap();
        let m = integrate_monodromy(&v, c(7.3), 1e-10).unwrap();
        for z in [m.m11, m.m12, m.m21, m.m22] {
            assert_eq!(z.im, 0.0);
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let v = PeriodicPotential::cosine(2.0);
        for e in [Complex64::new(5.0, 0.0), Complex64::new(-3.0, 0.4), Complex64::new(30.0, -0.2)] {
            let (_, dd) = discriminant_with_derivative(&v, e, 1e-13).unwrap();
            let h = 1e-5;
            let fd = (integrate_monodromy(&v, e + h, 1e-13).unwrap().trace()
                - integrate_monodromy(&v, e - h, 1e-13).unwrap().trace())
                / (2.0 * h);
            assert!((dd - fd).norm() < 1e-6 * (1.0 + dd.norm()), "{dd} vs {fd}");
        }
    }

    #[test]
    fn series_and_closed_form_agree() {
        for s in [Complex64::new(0.49, 0.0), Complex64::new(-0.49, 0.1)] {
            let (c0, s0, d0) = phi_series(s);
            let r = s.sqrt();
            assert!((c0 - r.cosh()).norm() < 1e-14);
            assert!((s0 - r.sinh() / r).norm() < 1e-14);
            assert!((d0 - (r.cosh() - r.sinh() / r) / (2.0 * s)).norm() < 1e-12);
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let v = PeriodicPotential::new(0.0, vec![1.5], vec![0.4]).unwrap();
        let e = Complex64::new(12.0, 0.8);
        let d1 = discriminant(&v, e).unwrap();
        let d2 = discriminant(&v, e.conj()).unwrap();
        assert!((d1 - d2.conj()).norm() < 1e-12 * d1.norm().max(1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn determinant_is_one(
            a in -3.0f64..3.0, b in -2.0f64..2.0, mean in -2.0f64..2.0,
            er in -50.0f64..50.0, ei in -1.0f64..1.0,
        ) {
            let v = PeriodicPotential::new(mean, vec![a, 0.5], vec![b]).unwrap();
            let m = integrate_monodromy(&v, Complex64::new(er, ei), 1e-10).unwrap();
            prop_assert!((m.det() - 1.0).norm() <= 1e-9);
        }
    }
}
