use serde::{Deserialize, Serialize};

use super::profile::PerturbationProfile;
use crate::error::{Error, Result};
use crate::hill::BandStructure;
use num_complex::Complex64;

/// Points in the endpoint scan over `[−Z, Z]`.
pub const SCAN_POINTS: usize = 2000;
/// Minimal `|W′|` at a window endpoint.
pub const CRITICAL_SLOPE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    UnboundedLeft,
    Compact,
    UnboundedRight,
    FullLine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Classification {
    H5,
    H6,
    General,
    Empty,
}

/// Finite end of a component: `E − W(ζ) = edges[edge_index]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub zeta: f64,
    pub edge_index: usize,
    pub edge: f64,
    pub w_prime: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub kind: ComponentKind,
    /// Band containing `E − W(ζ)` on this component.
    pub band: usize,
    pub left: Option<Endpoint>,
    pub right: Option<Endpoint>,
}

impl Component {
    pub fn contains(&self, z: f64, slack: f64) -> bool {
        self.left.is_none_or(|l| z >= l.zeta - slack) && self.right.is_none_or(|r| z <= r.zeta + slack)
    }

    pub fn length(&self) -> f64 {
        match (self.left, self.right) {
            (Some(l), Some(r)) => r.zeta - l.zeta,
            _ => f64::INFINITY,
        }
    }
}

/// Decomposition of `{ζ ∈ ℝ : E − W(ζ) ∈ σ(H₀)}` into connected components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralWindow {
    pub energy: f64,
    pub components: Vec<Component>,
    pub classification: Classification,
}

impl SpectralWindow {
    /// `U(E)`: the compact component, if it is unique.
    pub fn compact(&self) -> Option<&Component> {
        let mut it = self.components.iter().filter(|c| c.kind == ComponentKind::Compact);
        let first = it.next();
        if it.next().is_some() {
            None
        } else {
            first
        }
    }

    /// `U₋(E)`.
    pub fn u_minus(&self) -> Option<&Component> {
        self.components.iter().find(|c| c.kind == ComponentKind::UnboundedLeft)
    }

    /// `U₊(E)`.
    pub fn u_plus(&self) -> Option<&Component> {
        self.components.iter().find(|c| c.kind == ComponentKind::UnboundedRight)
    }

    /// Right end of `U₋`, or `−∞`.
    pub fn zeta_minus(&self) -> f64 {
        self.u_minus().and_then(|c| c.right).map_or(f64::NEG_INFINITY, |e| e.zeta)
    }

    /// Left end of `U₊`, or `+∞`.
    pub fn zeta_plus(&self) -> f64 {
        self.u_plus().and_then(|c| c.left).map_or(f64::INFINITY, |e| e.zeta)
    }

    pub fn zeta0_minus(&self) -> Option<f64> {
        self.compact().and_then(|c| c.left).map(|e| e.zeta)
    }

    pub fn zeta0_plus(&self) -> Option<f64> {
        self.compact().and_then(|c| c.right).map(|e| e.zeta)
    }

    pub fn endpoints(&self) -> Vec<Endpoint> {
        self.components.iter().flat_map(|c| [c.left, c.right]).flatten().collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("window serializes")
    }

    /// The compact component when the configuration is (H6).
    pub fn require_h6(&self) -> Result<&Component> {
        match self.classification {
            Classification::H6 => Ok(self.compact().expect("H6 has a compact component")),
            c => Err(Error::Precondition(format!("window at E = {} is {c:?}, not H6", self.energy))),
        }
    }
}

fn label(bands: &BandStructure, x: f64) -> usize {
    bands.edges.partition_point(|&e| e <= x)
}

fn closed_gap_edge(bands: &BandStructure, j: usize) -> bool {
    // edges 2n−1 and 2n (0-based) bound gap n
    let gap = j.div_ceil(2);
    gap >= 1 && !bands.gap_is_open(gap)
}

/// Root of `E − W(ζ) = target` on `[a, b]` where the left value lies below the target iff `rising`.
fn endpoint_root(profile: &PerturbationProfile, e: f64, target: f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let f = |z: f64| e - profile.value(z) - target;
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a) <= tol * (1.0 + m.abs()) {
            break;
        }
        if (f(m) < 0.0) == (fa < 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    let mut z = 0.5 * (a + b);
    let (lo, hi) = (a.min(b) - tol, a.max(b) + tol);
    for _ in 0..3 {
        let d = profile.derivative(z);
        if d == 0.0 {
            break;
        }
        let next = z + f(z) / d;
        if !(next >= lo && next <= hi) {
            break;
        }
        z = next;
    }
    z
}

/// Components of `(E − W)⁻¹(σ(H₀)) ∩ ℝ` and the (H5)/(H6) classification.
pub fn decompose_window(
    profile: &PerturbationProfile,
    bands: &BandStructure,
    e: f64,
    tol: f64,
) -> Result<SpectralWindow> {
    let lim_minus = e - profile.w_minus();
    let lim_plus = e - profile.w_plus();
    for x in [lim_minus, lim_plus] {
        bands.check_range(Complex64::from(x))?;
    }
    let (l_minus, l_plus) = (label(bands, lim_minus), label(bands, lim_plus));

    let mut z_max = 10.0 + 4.0 * profile.extent();
    while label(bands, e - profile.value(-z_max)) != l_minus || label(bands, e - profile.value(z_max)) != l_plus {
        z_max *= 2.0;
        if z_max > 1e8 {
            return Err(Error::Precondition(format!(
                "E − W± sits on a band edge at E = {e}; the window does not settle"
            )));
        }
    }
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| -z_max + 2.0 * z_max * i as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    let loc: Vec<f64> = grid.iter().map(|&z| e - profile.value(z)).collect();
    for &x in &loc {
        bands.check_range(Complex64::from(x))?;
    }
    let labels: Vec<usize> = loc.iter().map(|&x| label(bands, x)).collect();

    let mut boundaries: Vec<Endpoint> = Vec::new();
    for i in 0..SCAN_POINTS - 1 {
        let (p0, p1) = (labels[i], labels[i + 1]);
        if p0 == p1 {
            continue;
        }
        for j in p0.min(p1)..p0.max(p1) {
            if closed_gap_edge(bands, j) {
                continue;
            }
            let edge = bands.edges[j];
            let z = endpoint_root(profile, e, edge, grid[i], grid[i + 1], tol);
            let w_prime = profile.derivative(z);
            if w_prime.abs() < CRITICAL_SLOPE {
                return Err(Error::CriticalEndpoint { zeta: z, w_prime });
            }
            boundaries.push(Endpoint { zeta: z, edge_index: j, edge, w_prime });
        }
    }
    boundaries.sort_by(|a, b| a.zeta.total_cmp(&b.zeta));

    let band_of = |p: usize| p.div_ceil(2);
    let mut components = Vec::new();
    let mut inside = l_minus % 2 == 1;
    let mut open_left: Option<Endpoint> = None;
    let mut band = band_of(l_minus);
    for b in boundaries {
        if inside {
            components.push(Component {
                kind: if open_left.is_some() { ComponentKind::Compact } else { ComponentKind::UnboundedLeft },
                band,
                left: open_left,
                right: Some(b),
            });
        } else {
            open_left = Some(b);
            // entering through the top edge of band n means edge index 2n−1, bottom edge 2n−2
            band = b.edge_index / 2 + 1;
        }
        inside = !inside;
    }
    if inside {
        let kind = if open_left.is_some() { ComponentKind::UnboundedRight } else { ComponentKind::FullLine };
        components.push(Component { kind, band: band_of(l_plus), left: open_left, right: None });
    }

    let n_compact = components
        .iter()
        .filter(|c| c.kind == ComponentKind::Compact && c.length() > tol)
        .count();
    let classification = if components.is_empty() {
        Classification::Empty
    } else {
        match n_compact {
            0 => Classification::H5,
            1 => Classification::H6,
            _ => Classification::General,
        }
    };
    Ok(SpectralWindow { energy: e, components, classification })
}

/// Only the (H5)/(H6)/GENERAL/EMPTY tag of [`decompose_window`].
pub fn classify_energy(profile: &PerturbationProfile, bands: &BandStructure, e: f64) -> Result<Classification> {
    Ok(decompose_window(profile, bands, e, 1e-12)?.classification)
}
