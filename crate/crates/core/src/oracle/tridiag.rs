//! Eigenvalue kernels for symmetric tridiagonal matrices (real) and complex-symmetric
//! tridiagonal matrices, stored as diagonal `d` and off-diagonal `e` (`e[i]` couples `i, i+1`).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Number of eigenvalues below `x` (Sturm sequence of the LDLᵀ pivots).
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let b2 = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] };
        q = d[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (1.0 + x.abs());
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Eigenvalues in `[lo, hi)` by bisection on the Sturm count, ascending.
pub fn eigenvalues_in(d: &[f64], e: &[f64], lo: f64, hi: f64, tol: f64) -> Vec<f64> {
    let (n_lo, n_hi) = (sturm_count(d, e, lo), sturm_count(d, e, hi));
    let mut out = Vec::with_capacity(n_hi - n_lo);
    // each stack entry brackets the eigenvalues with indices in [c_lo, c_hi)
    let mut stack = vec![(lo, hi, n_lo, n_hi)];
    while let Some((a, b, ca, cb)) = stack.pop() {
        if ca == cb {
            continue;
        }
        if b - a <= tol * (1.0 + a.abs().max(b.abs())) {
            out.extend(std::iter::repeat(0.5 * (a + b)).take(cb - ca));
            continue;
        }
        let m = 0.5 * (a + b);
        let cm = sturm_count(d, e, m);
        stack.push((a, m, ca, cm));
        stack.push((m, b, cm, cb));
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Principal square root without the polar round trip.
fn csqrt(z: Complex64) -> Complex64 {
    let r = (z.re * z.re + z.im * z.im).sqrt();
    if r == 0.0 {
        return z;
    }
    let t = (0.5 * (r + z.re.abs())).sqrt();
    if z.re >= 0.0 {
        Complex64::new(t, z.im / (2.0 * t))
    } else {
        Complex64::new(z.im.abs() / (2.0 * t), t.copysign(z.im))
    }
}

fn l1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// `sqrt(f² + g²)` with scaling against overflow.
fn csqrt_hypot(f: Complex64, g: Complex64) -> Complex64 {
    let s = l1(f).max(l1(g));
    if s > 1e-100 && s < 1e100 {
        return csqrt(f * f + g * g);
    }
    if s == 0.0 {
        return Complex64::from(0.0);
    }
    let k = 1.0 / s;
    let (f, g) = (f * k, g * k);
    csqrt(f * f + g * g) * s
}

/// All eigenvalues of a complex-symmetric tridiagonal matrix by implicit QL with complex
/// orthogonal rotations.
pub fn complex_symmetric_eigenvalues(d: &[Complex64], e: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = d.len();
    let mut d = d.to_vec();
    let mut e: Vec<Complex64> = e.iter().copied().chain(std::iter::once(Complex64::from(0.0))).collect();
    e.truncate(n);
    let one = Complex64::from(1.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = l1(d[m]) + l1(d[m + 1]);
                if l1(e[m]) <= 0.5 * f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::EigenSolver { size: n, reason: format!("QL did not converge at index {l}") });
            }
            let mut g = (d[l + 1] - d[l]) / (e[l] * 2.0);
            let mut r = csqrt_hypot(g, one);
            let denom = if (g + r).norm() >= (g - r).norm() { g + r } else { g - r };
            g = d[m] - d[l] + e[l] / denom;
            let (mut s, mut c, mut p) = (one, one, Complex64::from(0.0));
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = csqrt_hypot(f, g);
                e[i + 1] = r;
                if r == Complex64::from(0.0) {
                    d[i + 1] -= p;
                    e[m] = Complex64::from(0.0);
                    underflow = true;
                    break;
                }
                let inv = r.inv();
                s = f * inv;
                c = g * inv;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + c * b * 2.0;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            if !(g.norm().is_finite() && p.norm().is_finite()) {
                return Err(Error::EigenSolver { size: n, reason: "breakdown of a complex rotation".into() });
            }
            d[l] -= p;
            e[l] = g;
            e[m] = Complex64::from(0.0);
        }
    }
    Ok(d)
}

/// `(log det(T − λ))′ ` inverse: Newton step on the characteristic polynomial.
fn newton_step(d: &[Complex64], e: &[Complex64], lambda: Complex64) -> Complex64 {
    let mut q = d[0] - lambda;
    let mut dq = Complex64::from(-1.0);
    let mut sum = dq / q;
    for i in 1..d.len() {
        let b2 = e[i - 1] * e[i - 1];
        let (qp, dqp) = (q, dq);
        q = d[i] - lambda - b2 / qp;
        dq = -1.0 + b2 * dqp / (qp * qp);
        if q.norm() == 0.0 {
            q = Complex64::from(f64::EPSILON);
        }
        sum += dq / q;
    }
    -1.0 / sum
}

/// Newton polish of an eigenvalue estimate; `None` if the iteration wanders more than
/// `radius` away.
pub fn refine(d: &[Complex64], e: &[Complex64], lambda: Complex64, radius: f64) -> Option<Complex64> {
    let mut z = lambda;
    for _ in 0..20 {
        let step = newton_step(d, e, z);
        if !step.norm().is_finite() {
            return None;
        }
        z += step;
        if (z - lambda).norm() > radius {
            return None;
        }
        if step.norm() <= 1e-14 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    Some(z)
}

/// Eigenvector for an eigenvalue estimate by two steps of inverse iteration (Thomas
/// algorithm, no pivoting), normalized in `ℓ²`.
pub fn inverse_iteration(d: &[Complex64], e: &[Complex64], lambda: Complex64) -> Vec<Complex64> {
    let n = d.len();
    let shift = lambda + Complex64::new(1e-10, 1e-10) * (1.0 + lambda.norm());
    let mut x = vec![Complex64::from(1.0); n];
    for _ in 0..2 {
        let mut c = vec![Complex64::from(0.0); n];
        let mut y = x.clone();
        let mut piv = d[0] - shift;
        for i in 0..n {
            if i > 0 {
                piv = d[i] - shift - e[i - 1] * c[i - 1];
                y[i] = y[i] - e[i - 1] * y[i - 1];
            }
            if piv.norm() == 0.0 {
                piv = Complex64::from(f64::EPSILON);
            }
            if i + 1 < n {
                c[i] = e[i] / piv;
            }
            y[i] /= piv;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            y[i] = y[i] - c[i] * y[i + 1];
        }
        let norm = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        x = y.into_iter().map(|v| v / norm).collect();
    }
    x
}
