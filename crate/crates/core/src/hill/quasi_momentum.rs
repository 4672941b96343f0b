use std::f64::consts::PI;

use num_complex::Complex64;

use super::bands::{BandStructure, SpectralPosition};
use super::monodromy::{integrate_monodromy, integrate_monodromy_with_derivative, MonodromyMatrix};
use crate::error::{Error, Result};

/// `|sin k|` below which `k′` is reported singular.
pub const SINGULAR_SIN_K: f64 = 1e-6;

/// Value of the main branch `k_p`: band `n` is mapped onto `[π(n−1), πn]`, gap `n` onto
/// `πn + i[0, ∞)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuasiMomentum {
    pub value: Complex64,
    pub band_index: usize,
    pub on_gap: bool,
}

/// `k` and `sin k` from the monodromy at a real energy with known spectral position.
fn real_branch(pos: SpectralPosition, m: &MonodromyMatrix) -> (QuasiMomentum, Complex64) {
    let disc = m.discriminant_gap().re;
    let d = m.trace().re;
    match pos {
        SpectralPosition::Band(n) => {
            let s = (-disc).max(0.0).sqrt() * 0.5;
            let theta = s.atan2(0.5 * d);
            let (k, sin_k) = if n % 2 == 1 {
                (PI * (n - 1) as f64 + theta, s)
            } else {
                (PI * n as f64 - theta, -s)
            };
            (QuasiMomentum { value: Complex64::from(k), band_index: n, on_gap: false }, Complex64::from(sin_k))
        }
        SpectralPosition::Gap(n) => {
            let sh = disc.max(0.0).sqrt() * 0.5;
            let y = sh.asinh();
            let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
            (
                QuasiMomentum { value: Complex64::new(PI * n as f64, y), band_index: n, on_gap: true },
                Complex64::new(0.0, parity * sh),
            )
        }
    }
}

/// Upper half-plane: the Floquet multiplier inside the unit disc, shifted by `2πm` towards
/// the real-axis range of the band or gap below.
fn complex_branch(pos: SpectralPosition, m: &MonodromyMatrix) -> (QuasiMomentum, Complex64) {
    let half_d = m.trace() * 0.5;
    let q = m.discriminant_gap().sqrt() * 0.5;
    let (l1, l2) = (half_d + q, half_d - q);
    let big = if l1.norm() >= l2.norm() { l1 } else { l2 };
    let k0 = Complex64::i() * big.ln();
    let sin_k = (big.inv() - big) / (2.0 * Complex64::i());
    let (center, n, on_gap) = match pos {
        SpectralPosition::Band(n) => (PI * (n as f64 - 0.5), n, false),
        SpectralPosition::Gap(n) => (PI * n as f64, n, true),
    };
    let shift = ((center - k0.re) / (2.0 * PI)).round();
    let k = k0 + 2.0 * PI * shift;
    (QuasiMomentum { value: k, band_index: n, on_gap }, sin_k)
}

fn evaluate(
    bands: &BandStructure,
    e: Complex64,
    with_derivative: bool,
) -> Result<(QuasiMomentum, Complex64, Option<Complex64>)> {
    bands.check_range(e)?;
    if e.im < 0.0 {
        let (q, s, d) = evaluate(bands, e.conj(), with_derivative)?;
        let q = QuasiMomentum { value: q.value.conj(), ..q };
        return Ok((q, s.conj(), d.map(|z| z.conj())));
    }
    let (m, dd) = if with_derivative {
        let (m, dm) = integrate_monodromy_with_derivative(&bands.potential, e, bands.tol)?;
        (m, Some(dm.trace()))
    } else {
        (integrate_monodromy(&bands.potential, e, bands.tol)?, None)
    };
    let pos = bands.position(e.re);
    let (q, sin_k) = if e.im == 0.0 { real_branch(pos, &m) } else { complex_branch(pos, &m) };
    Ok((q, sin_k, dd))
}

/// Real-axis evaluation with the spectral position imposed by the caller, so that energies
/// within rounding of an edge stay on the intended side. Returns `k`, `sin k` and, on
/// request, `D′(E)`.
pub(crate) fn real_at_position(
    bands: &BandStructure,
    e: f64,
    pos: SpectralPosition,
    with_derivative: bool,
) -> Result<(QuasiMomentum, f64, Option<f64>)> {
    bands.check_range(Complex64::from(e))?;
    let (m, dd) = if with_derivative {
        let (m, dm) = integrate_monodromy_with_derivative(&bands.potential, Complex64::from(e), bands.tol)?;
        (m, Some(dm.trace().re))
    } else {
        (integrate_monodromy(&bands.potential, Complex64::from(e), bands.tol)?, None)
    };
    let (q, sin_k) = real_branch(pos, &m);
    Ok((q, if q.on_gap { sin_k.im } else { sin_k.re }, dd))
}

/// Main branch `k_p(E)`; for `Im E < 0` the conjugate `k_p(Ē)̄` is returned.
pub fn quasi_momentum_main(bands: &BandStructure, e: Complex64) -> Result<QuasiMomentum> {
    Ok(evaluate(bands, e, false)?.0)
}

/// `k_p(E)` and `k_p′(E) = −D′(E) / (2 sin k)`.
pub fn quasi_momentum_with_derivative(bands: &BandStructure, e: Complex64) -> Result<(QuasiMomentum, Complex64)> {
    let (q, sin_k, dd) = evaluate(bands, e, true)?;
    if sin_k.norm() < SINGULAR_SIN_K {
        return Err(Error::SingularDerivative { energy: e, sin_k: sin_k.norm() });
    }
    Ok((q, -dd.unwrap() / (2.0 * sin_k)))
}

pub fn quasi_momentum_derivative(bands: &BandStructure, e: Complex64) -> Result<Complex64> {
    Ok(quasi_momentum_with_derivative(bands, e)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hill::{band_edges, PeriodicPotential};

    fn c(x: f64) -> Complex64 {
        Complex64::from(x)
    }

    #[test]
    fn free_reduction() {
        let b = band_edges(&PeriodicPotential::free(), 110.0, 1e-12).unwrap();
        let q = quasi_momentum_main(&b, c(4.0)).unwrap();
        assert!((q.value - 2.0).norm() < 1e-10);
        assert!((quasi_momentum_derivative(&b, c(4.0)).unwrap() - 0.25).norm() < 1e-8);
        for i in 0..100 {
            let e = 0.1 + 99.9 * i as f64 / 99.0;
            let k = quasi_momentum_main(&b, c(e)).unwrap().value;
            assert!((k - e.sqrt()).norm() <= 1e-8, "E = {e}: {k}");
        }
        let e = Complex64::new(20.0, 0.5);
        assert!((quasi_momentum_main(&b, e).unwrap().value - e.sqrt()).norm() < 1e-8);
    }

    #[test]
    fn edges_map_to_multiples_of_pi() {
        let b = band_edges(&PeriodicPotential::cosine(2.0), 100.0, 1e-12).unwrap();
        for (j, &e) in b.edges.iter().enumerate() {
            let k = quasi_momentum_main(&b, c(e)).unwrap().value;
            let n = ((j + 1) / 2) as f64;
            assert!((k.re - PI * n).abs() < 1e-5, "edge {j}: {k}");
        }
    }

    #[test]
    fn gap_has_single_interior_maximum() {
        let b = band_edges(&PeriodicPotential::cosine(2.0), 100.0, 1e-12).unwrap();
        let (lo, hi) = b.gap(1).unwrap();
        let ys: Vec<f64> = (1..200)
            .map(|i| {
                let q = quasi_momentum_main(&b, c(lo + (hi - lo) * i as f64 / 200.0)).unwrap();
                assert!((q.value.re - PI).abs() < 1e-12 && q.on_gap);
                q.value.im
            })
            .collect();
        let imax = ys.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(imax > 0 && imax < ys.len() - 1);
        assert!(ys[..imax].windows(2).all(|w| w[0] < w[1]));
        assert!(ys[imax..].windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn band_is_monotone_and_continuous_from_above() {
        let b = band_edges(&PeriodicPotential::cosine(2.0), 100.0, 1e-12).unwrap();
        for n in 1..=3 {
            let (lo, hi) = b.band(n).unwrap();
            let mut last = f64::NEG_INFINITY;
            for i in 1..50 {
                let e = lo + (hi - lo) * i as f64 / 50.0;
                let k = quasi_momentum_main(&b, c(e)).unwrap().value;
                assert!(k.im == 0.0 && k.re > last);
                assert!(k.re >= PI * (n - 1) as f64 && k.re <= PI * n as f64);
                last = k.re;
                let above = quasi_momentum_main(&b, Complex64::new(e, 1e-7)).unwrap().value;
                assert!(above.im > 0.0 && (above - k).norm() < 1e-4);
            }
        }
        // gap continuity from above
        let (lo, hi) = b.gap(2).unwrap();
        let e = 0.5 * (lo + hi);
        let k = quasi_momentum_main(&b, c(e)).unwrap().value;
        let above = quasi_momentum_main(&b, Complex64::new(e, 1e-7)).unwrap().value;
        assert!((above - k).norm() < 1e-5);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let b = band_edges(&PeriodicPotential::cosine(2.0), 100.0, 1e-13).unwrap();
        for n in 1..=3 {
            let (lo, hi) = b.band(n).unwrap();
            let e = 0.5 * (lo + hi);
            let d = quasi_momentum_derivative(&b, c(e)).unwrap();
            let h = 1e-5;
            let fd = (quasi_momentum_main(&b, c(e + h)).unwrap().value
                - quasi_momentum_main(&b, c(e - h)).unwrap().value)
                / (2.0 * h);
            assert!((d - fd).norm() <= 1e-6 * d.norm(), "band {n}: {d} vs {fd}");
        }
    }

    #[test]
    fn square_root_edges() {
        let b = band_edges(&PeriodicPotential::cosine(2.0), 100.0, 1e-13).unwrap();
        let e2 = b.edges[1];
        let ratio = |d: f64| {
            let k = quasi_momentum_main(&b, c(e2 - d)).unwrap().value;
            (k - PI).norm() / d.sqrt()
        };
        let (r1, r2) = (ratio(1e-6), ratio(1e-8));
        assert!(r1 > 0.01 && (r1 - r2).abs() < 1e-2 * r1);
        let kp = quasi_momentum_derivative(&b, c(e2 - 1e-8)).unwrap().norm();
        let kp2 = quasi_momentum_derivative(&b, c(e2 - 1e-6)).unwrap().norm();
        assert!((kp / kp2 - 10.0).abs() < 0.1);
        assert!(matches!(
            quasi_momentum_derivative(&b, c(e2)),
            Err(Error::SingularDerivative { .. })
        ));
    }

    #[test]
    fn out_of_range() {
        let b = band_edges(&PeriodicPotential::cosine(2.0), 45.0, 1e-11).unwrap();
        assert!(matches!(quasi_momentum_main(&b, c(46.0)), Err(Error::OutOfRange { .. })));
        assert!(matches!(quasi_momentum_main(&b, Complex64::new(5.0, 1.5)), Err(Error::OutOfRange { .. })));
    }
}
