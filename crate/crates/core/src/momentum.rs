//! Complex momentum `κ(ζ, E) = k(E − W(ζ))`: normalized determination on `U(E)`, decay rate
//! on the gap segments, branch points, and iso-energy portraits.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hill::quasi_momentum::real_at_position;
use crate::hill::{BandStructure, SpectralPosition};
use crate::window::{Component, PerturbationProfile, SpectralWindow};

/// `κ = sign·k_p + 2πm`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Determination {
    pub sign: i8,
    pub m: i64,
}

impl Determination {
    /// The determination that puts band `n` onto `[0, π]`.
    pub fn normalizing(band: usize) -> Self {
        if band % 2 == 1 {
            Determination { sign: 1, m: -((band as i64 - 1) / 2) }
        } else {
            Determination { sign: -1, m: band as i64 / 2 }
        }
    }

    pub fn apply(&self, k: Complex64) -> Complex64 {
        k * self.sign as f64 + TAU * self.m as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentumSample {
    pub zeta: Complex64,
    pub kappa: Complex64,
    pub determination: Determination,
}

/// `κ₀ / π` at an end of `U(E)` (0 or 1), from the band and the edge index alone.
pub fn edge_value_index(band: usize, edge_index: usize) -> Result<i32> {
    let bottom = 2 * band - 2;
    let odd = band % 2 == 1;
    if edge_index == bottom {
        Ok(if odd { 0 } else { 1 })
    } else if edge_index == bottom + 1 {
        Ok(if odd { 1 } else { 0 })
    } else {
        Err(Error::InternalConsistency(format!(
            "endpoint solves E − W = E_{} which is not an edge of band {band}",
            edge_index + 1
        )))
    }
}

/// `κ₀(ζ)` and `∂κ₀/∂E` at an interior point of `U`; no singularity guard (used by quadrature).
pub(crate) fn kappa0_with_energy_derivative(
    u: &Component,
    bands: &BandStructure,
    profile: &PerturbationProfile,
    e: f64,
    z: f64,
) -> Result<(f64, f64)> {
    let det = Determination::normalizing(u.band);
    let (q, sin_k, dd) = real_at_position(bands, e - profile.value(z), SpectralPosition::Band(u.band), true)?;
    let kappa = det.apply(q.value).re;
    let dk = -dd.unwrap() / (2.0 * sin_k);
    Ok((kappa, det.sign as f64 * dk))
}

pub(crate) fn kappa0(u: &Component, bands: &BandStructure, profile: &PerturbationProfile, e: f64, z: f64) -> Result<f64> {
    let det = Determination::normalizing(u.band);
    let (q, _, _) = real_at_position(bands, e - profile.value(z), SpectralPosition::Band(u.band), false)?;
    Ok(det.apply(q.value).re)
}

/// `κ₀(ζ) ∈ [0, π]` on `U(E)`.
pub fn kappa_normalized(
    window: &SpectralWindow,
    bands: &BandStructure,
    profile: &PerturbationProfile,
    z: f64,
) -> Result<MomentumSample> {
    let u = window.require_h6()?;
    let (l, r) = (u.left.unwrap(), u.right.unwrap());
    let slack = 1e-12 * (1.0 + z.abs());
    if !u.contains(z, slack) {
        return Err(Error::Domain(format!("ζ = {z} is not in U(E) = [{}, {}]", l.zeta, r.zeta)));
    }
    let determination = Determination::normalizing(u.band);
    let kappa = if (z - l.zeta).abs() <= slack {
        PI * edge_value_index(u.band, l.edge_index)? as f64
    } else if (z - r.zeta).abs() <= slack {
        PI * edge_value_index(u.band, r.edge_index)? as f64
    } else {
        kappa0(u, bands, profile, window.energy, z)?
    };
    Ok(MomentumSample { zeta: Complex64::from(z), kappa: Complex64::from(kappa), determination })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Gap segment between `U` and `U∓`: `(ζ⁻, ζ₀⁻)` on the left, `(ζ₀⁺, ζ⁺)` on the right.
pub fn gap_segment(window: &SpectralWindow, side: Side) -> Result<(f64, f64)> {
    let u = window.require_h6()?;
    Ok(match side {
        Side::Left => (window.zeta_minus(), u.left.unwrap().zeta),
        Side::Right => (u.right.unwrap().zeta, window.zeta_plus()),
    })
}

pub(crate) fn im_kappa_unchecked(bands: &BandStructure, profile: &PerturbationProfile, e: f64, z: f64) -> Result<f64> {
    let x = e - profile.value(z);
    let gap = match bands.position(x) {
        SpectralPosition::Gap(n) => n,
        // rounding at the segment ends
        SpectralPosition::Band(n) => {
            let (lo, hi) = bands.band(n).unwrap();
            if x - lo < hi - x { n - 1 } else { n }
        }
    };
    Ok(real_at_position(bands, x, SpectralPosition::Gap(gap), false)?.0.value.im)
}

/// `|Im κ(ζ)|` on a gap segment.
pub fn im_kappa_gap(
    window: &SpectralWindow,
    bands: &BandStructure,
    profile: &PerturbationProfile,
    side: Side,
    z: f64,
) -> Result<f64> {
    let (a, b) = gap_segment(window, side)?;
    if !(z > a && z < b) {
        return Err(Error::Domain(format!("ζ = {z} is not in the {side:?} gap segment ({a}, {b})")));
    }
    im_kappa_unchecked(bands, profile, window.energy, z)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchBox {
    /// `[−Z, Z] × [−0.9h, 0.9h]`.
    pub fn default_for(profile: &PerturbationProfile) -> Self {
        let z = 10.0 + 4.0 * profile.extent();
        let h = 0.9 * profile.analyticity_height();
        SearchBox { re_min: -z, re_max: z, im_min: -h, im_max: h }
    }

    fn contains(&self, z: Complex64) -> bool {
        z.re > self.re_min && z.re < self.re_max && z.im > self.im_min && z.im < self.im_max
    }

    fn boundary_distance(&self, z: Complex64) -> f64 {
        (z.re - self.re_min).min(self.re_max - z.re).min(z.im - self.im_min).min(self.im_max - z.im)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub zeta: Complex64,
    pub edge_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPointSet {
    pub energy: f64,
    pub points: Vec<BranchPoint>,
    pub search_box: SearchBox,
    /// Zero count from the winding number of `W − (E − E_j)` along the box, summed over `j`.
    pub argument_count: usize,
}

const DEDUP_RADIUS: f64 = 1e-7;

fn newton_branch_point(
    profile: &PerturbationProfile,
    target: f64,
    seed: Complex64,
    search: &SearchBox,
) -> Option<Complex64> {
    let mut z = seed;
    let slack = 0.05 * (search.im_max - search.im_min);
    for _ in 0..60 {
        let g = profile.value_complex(z).ok()? - target;
        let dg = profile.derivative_complex(z).ok()?;
        if dg.norm() == 0.0 {
            return None;
        }
        let step = g / dg;
        z -= step;
        if z.re < search.re_min - slack
            || z.re > search.re_max + slack
            || z.im < search.im_min - slack
            || z.im > search.im_max + slack
        {
            return None;
        }
        if step.norm() < 1e-14 * (1.0 + z.norm()) {
            let g = profile.value_complex(z).ok()? - target;
            return (g.norm() < 1e-10).then_some(z);
        }
    }
    None
}

fn winding(profile: &PerturbationProfile, target: f64, search: &SearchBox) -> Result<usize> {
    let corners = [
        Complex64::new(search.re_min, search.im_min),
        Complex64::new(search.re_max, search.im_min),
        Complex64::new(search.re_max, search.im_max),
        Complex64::new(search.re_min, search.im_max),
    ];
    let g = |z: Complex64| -> Result<Complex64> { Ok(profile.value_complex(z)? - target) };
    let mut total = 0.0;
    for s in 0..4 {
        let (a, b) = (corners[s], corners[(s + 1) % 4]);
        let n0 = 400;
        let mut stack: Vec<(f64, f64)> =
            (0..n0).rev().map(|i| (i as f64 / n0 as f64, (i + 1) as f64 / n0 as f64)).collect();
        while let Some((t0, t1)) = stack.pop() {
            let (g0, g1) = (g(a + (b - a) * t0)?, g(a + (b - a) * t1)?);
            if g0.norm() < 1e-12 || g1.norm() < 1e-12 {
                return Err(Error::BoundaryCollision { zeta: a + (b - a) * t0 });
            }
            let d = (g1 / g0).arg();
            if d.abs() > PI / 4.0 && t1 - t0 > 1e-12 {
                let m = 0.5 * (t0 + t1);
                stack.push((m, t1));
                stack.push((t0, m));
            } else {
                total += d;
            }
        }
    }
    let count = (total / TAU).round();
    if count < 0.0 {
        return Err(Error::InternalConsistency("negative winding number: the box encloses a pole".into()));
    }
    Ok(count as usize)
}

fn search_roots(
    profile: &PerturbationProfile,
    target: f64,
    search: &SearchBox,
    nx: usize,
    ny: usize,
) -> Vec<Complex64> {
    let mut found: Vec<Complex64> = Vec::new();
    for i in 0..nx {
        for k in 0..ny {
            let seed = Complex64::new(
                search.re_min + (search.re_max - search.re_min) * (i as f64 + 0.5) / nx as f64,
                search.im_min + (search.im_max - search.im_min) * (k as f64 + 0.5) / ny as f64,
            );
            if let Some(z) = newton_branch_point(profile, target, seed, search) {
                if !found.iter().any(|w| (w - z).norm() < DEDUP_RADIUS) {
                    found.push(z);
                }
            }
        }
    }
    found
}

/// All solutions of `E − W(ζ) = E_j` in the box, over the edges with open gaps.
pub fn find_branch_points(
    profile: &PerturbationProfile,
    bands: &BandStructure,
    e: f64,
    search: &SearchBox,
) -> Result<BranchPointSet> {
    let h = profile.analyticity_height();
    if search.im_min <= -h || search.im_max >= h || !(search.re_max > search.re_min) || !(search.im_max > search.im_min) {
        return Err(Error::Precondition(format!(
            "search box {search:?} must be nonempty and lie in |Im ζ| < {h}"
        )));
    }
    let size = (search.re_max - search.re_min).max(search.im_max - search.im_min);
    let mut points = Vec::new();
    let mut argument_count = 0;
    for (j, &edge) in bands.edges.iter().enumerate() {
        let gap = j.div_ceil(2);
        if gap >= 1 && !bands.gap_is_open(gap) {
            continue;
        }
        let target = e - edge;
        let expected = winding(profile, target, search)?;
        argument_count += expected;
        let mut roots = search_roots(profile, target, search, 50, 20);
        if roots.iter().filter(|z| search.contains(**z)).count() != expected {
            roots = search_roots(profile, target, search, 200, 60);
        }
        for z in roots {
            if search.boundary_distance(z).abs() < 1e-9 * size {
                return Err(Error::BoundaryCollision { zeta: z });
            }
            if search.contains(z) {
                // snap numerically real roots onto the axis
                let z = if z.im.abs() < 1e-12 { Complex64::from(z.re) } else { z };
                points.push(BranchPoint { zeta: z, edge_index: j });
            }
        }
    }
    if points.len() != argument_count {
        return Err(Error::InternalConsistency(format!(
            "found {} branch points but the argument principle counts {argument_count}",
            points.len()
        )));
    }
    points.sort_by(|a, b| a.zeta.re.total_cmp(&b.zeta.re).then(a.zeta.im.total_cmp(&b.zeta.im)));
    Ok(BranchPointSet { energy: e, points, search_box: *search, argument_count })
}

/// Largest distance from a branch point to the nearest conjugate of a point in the set.
pub fn conjugation_defect(set: &BranchPointSet) -> f64 {
    set.points
        .iter()
        .map(|p| {
            set.points
                .iter()
                .filter(|q| q.edge_index == p.edge_index)
                .map(|q| (q.zeta - p.zeta.conj()).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Log-log slope of `|κ(ζ) − κ(ζ_bp)|` against `|ζ − ζ_bp|` on the band side of a real
/// branch point (`direction` = ±1 points into the band).
pub fn local_exponent(
    profile: &PerturbationProfile,
    bands: &BandStructure,
    e: f64,
    zeta_bp: f64,
    edge_index: usize,
    direction: f64,
) -> Result<f64> {
    let band = edge_index / 2 + 1;
    let k_edge = PI * edge_index.div_ceil(2) as f64;
    let deltas: Vec<f64> = (0..9).map(|i| 10f64.powf(-6.0 + 0.5 * i as f64)).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for d in deltas {
        let z = zeta_bp + direction * d;
        let (q, _, _) = real_at_position(bands, e - profile.value(z), SpectralPosition::Band(band), false)?;
        xs.push(d.ln());
        ys.push((q.value.re - k_edge).abs().ln());
    }
    Ok(fit_slope(&xs, &ys))
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PortraitSample {
    pub zeta: f64,
    /// `{κ mod 2π, (2π − κ) mod 2π}` where `E − W(ζ)` is in a band.
    pub branches: Option<[f64; 2]>,
}

/// Real iso-energy curve `{(ζ, κ) : κ = κ(E − W(ζ))}` sampled on `n` points of `[a, b]`.
pub fn isoenergy_portrait(
    profile: &PerturbationProfile,
    bands: &BandStructure,
    e: f64,
    range: (f64, f64),
    n: usize,
) -> Result<Vec<PortraitSample>> {
    if n < 2 {
        return Err(Error::Precondition("a portrait needs at least two samples".into()));
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let z = range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64;
            let x = e - profile.value(z);
            let branches = match bands.position(x) {
                SpectralPosition::Band(b) => {
                    let k = real_at_position(bands, x, SpectralPosition::Band(b), false)?.0.value.re;
                    Some([k.rem_euclid(TAU), (TAU - k).rem_euclid(TAU)])
                }
                SpectralPosition::Gap(_) => None,
            };
            Ok(PortraitSample { zeta: z, branches })
        })
        .collect()
}
