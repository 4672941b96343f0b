//! Gauss–Legendre quadrature with square-root endpoint substitution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights on `[−1, 1]` by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate<const N: usize, F>(&self, a: f64, b: f64, f: &mut F) -> Result<[f64; N]>
    where
        F: FnMut(f64) -> Result<[f64; N]>,
    {
        let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
        let mut acc = [0.0; N];
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(c + r * x)?;
            for k in 0..N {
                acc[k] += w * r * v[k];
            }
        }
        Ok(acc)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    /// Gauss–Legendre nodes per piece.
    pub nodes: usize,
    /// Fraction of the interval treated with `ζ = ζ_bp ± u²` at a singular end.
    pub buffer_fraction: f64,
    /// Panels in the regular middle part.
    pub panels: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings { nodes: 64, buffer_fraction: 0.1, panels: 1 }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 4 || self.panels < 1 || !(self.buffer_fraction > 0.0 && self.buffer_fraction < 0.5) {
            return Err(Error::Config(format!(
                "quadrature needs nodes ≥ 4, panels ≥ 1 and buffer_fraction in (0, 0.5), got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<const N: usize> {
    pub value: [f64; N],
    /// `|I_n − I_{n/2}|`, componentwise maximum.
    pub error: f64,
}

fn pieces<const N: usize, F>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    singular: (bool, bool),
    s: &QuadratureSettings,
    f: &mut F,
) -> Result<[f64; N]>
where
    F: FnMut(f64) -> Result<[f64; N]>,
{
    let buffer = s.buffer_fraction * (b - a);
    let mut total = [0.0; N];
    let mut add = |v: [f64; N]| {
        for k in 0..N {
            total[k] += v[k];
        }
    };
    let (mut lo, mut hi) = (a, b);
    if singular.0 {
        lo = a + buffer;
        let mut g = |u: f64| -> Result<[f64; N]> { Ok(f(a + u * u)?.map(|y| 2.0 * u * y)) };
        add(rule.integrate(0.0, buffer.sqrt(), &mut g)?);
    }
    if singular.1 {
        hi = b - buffer;
        let mut g = |u: f64| -> Result<[f64; N]> { Ok(f(b - u * u)?.map(|y| 2.0 * u * y)) };
        add(rule.integrate(0.0, buffer.sqrt(), &mut g)?);
    }
    let step = (hi - lo) / s.panels as f64;
    for p in 0..s.panels {
        let x0 = lo + step * p as f64;
        add(rule.integrate(x0, x0 + step, f)?);
    }
    Ok(total)
}

/// `∫_a^b f` where `f − f(end)` may behave like `√|ζ − end|` at the flagged ends.
pub fn integrate_with_sqrt_ends<const N: usize, F>(
    a: f64,
    b: f64,
    singular: (bool, bool),
    settings: &QuadratureSettings,
    mut f: F,
) -> Result<Estimate<N>>
where
    F: FnMut(f64) -> Result<[f64; N]>,
{
    settings.validate()?;
    if !(b > a) {
        return Err(Error::Precondition(format!("empty integration interval [{a}, {b}]")));
    }
    let fine = pieces(&GaussLegendre::new(settings.nodes), a, b, singular, settings, &mut f)?;
    let coarse = pieces(&GaussLegendre::new(settings.nodes / 2), a, b, singular, settings, &mut f)?;
    let error = fine.iter().zip(&coarse).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(Estimate { value: fine, error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        for n in [1, 2, 5, 16, 64] {
            let rule = GaussLegendre::new(n);
            assert!((rule.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..2 * n {
                let got = rule.integrate(-1.0, 1.0, &mut |x| Ok([x.powi(deg as i32)])).unwrap()[0];
                let expect = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg + 1) as f64 };
                assert!((got - expect).abs() < 1e-13, "n={n} deg={deg}: {got}");
            }
        }
    }

    #[test]
    fn square_root_ends() {
        // ∫₀¹ √(x(1−x)) dx = π/8
        let s = QuadratureSettings::default();
        let est = integrate_with_sqrt_ends(0.0, 1.0, (true, true), &s, |x| Ok([(x * (1.0 - x)).sqrt()])).unwrap();
        assert!((est.value[0] - std::f64::consts::PI / 8.0).abs() < 1e-13);
        assert!(est.error < 1e-12);
        // 1/√ singularities too: ∫₀¹ 1/√x dx = 2
        let est = integrate_with_sqrt_ends(0.0, 1.0, (true, false), &s, |x| Ok([1.0 / x.sqrt()])).unwrap();
        assert!((est.value[0] - 2.0).abs() < 1e-13);
    }
}
