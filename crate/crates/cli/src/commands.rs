use std::f64::consts::TAU;

use adiabat_core::actions::actions_on_grid;
use adiabat_core::momentum::isoenergy_portrait;
use adiabat_core::oracle::hill_matrix_band_edges;
use adiabat_core::resonance::{expected_count, ResonanceEstimate, SolverConfig};
use adiabat_core::verify::{self, Problem};
use adiabat_core::window::classify_energy;
use adiabat_core::{decompose_window, locate_resonances, BandStructure, Classification, Error, Result, RunConfiguration};

use crate::output::{num, write_csv, write_text};

pub struct Context<'a> {
    pub cfg: &'a RunConfiguration,
    pub bands: &'a BandStructure,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a RunConfiguration, bands: &'a BandStructure) -> Result<Self> {
        Ok(Context { cfg, bands })
    }

    fn window(&self) -> (f64, f64) {
        (self.cfg.solver.window[0], self.cfg.solver.window[1])
    }

    fn centre(&self) -> f64 {
        0.5 * (self.cfg.solver.window[0] + self.cfg.solver.window[1])
    }

    fn problem(&self) -> Problem<'_> {
        Problem { potential: &self.cfg.potential, profile: &self.cfg.profile, bands: self.bands, window: self.window() }
    }
}

pub fn bands(ctx: &Context) -> Result<()> {
    let b = ctx.bands;
    let mut rows = Vec::new();
    for n in 1..=b.edges.len().div_ceil(2) {
        let (lo, hi) = b.band(n).unwrap();
        let (gap_width, open) = match b.gap(n) {
            Some((g0, g1)) if g1.is_finite() => (num(g1 - g0), b.gap_is_open(n).to_string()),
            _ => (String::new(), String::new()),
        };
        rows.push(vec![n.to_string(), num(lo), num(hi), gap_width, open]);
    }
    let path = write_csv(&ctx.cfg.output_dir, "bands.csv", &["band", "lower", "upper", "gap_width", "gap_open"], &rows)?;
    write_text(&ctx.cfg.output_dir, "bands.toml", &b.to_toml())?;
    if (1..=b.open_gap_flags.len()).all(|g| !b.gap_is_open(g)) {
        eprintln!("warning: no open gap below E_max = {}: assumption (O) fails", b.e_max);
    }
    println!("{} edges up to E = {} written to {}", b.edges.len(), b.e_max, path.display());
    Ok(())
}

pub fn window(ctx: &Context, energy: Option<f64>) -> Result<()> {
    let e = energy.unwrap_or_else(|| ctx.centre());
    let w = decompose_window(&ctx.cfg.profile, ctx.bands, e, 1e-13)?;
    let path = write_text(&ctx.cfg.output_dir, "window.toml", &w.to_toml())?;
    println!("E = {}: {:?}, {} component(s); written to {}", num(e), w.classification, w.components.len(), path.display());
    Ok(())
}

pub fn actions(ctx: &Context, points: usize) -> Result<()> {
    if points < 2 {
        return Err(Error::Config("--points must be at least 2".into()));
    }
    let (a, b) = ctx.window();
    let grid: Vec<f64> = (0..points).map(|i| a + (b - a) * i as f64 / (points - 1) as f64).collect();
    let data = actions_on_grid(&ctx.cfg.profile, ctx.bands, &grid, &ctx.cfg.solver.quadrature)?;
    let rows: Vec<Vec<String>> = data
        .iter()
        .map(|d| {
            vec![
                num(d.energy),
                num(d.phi0),
                d.delta_kappa.to_string(),
                num(d.s_minus),
                num(d.s_plus),
                num(d.phi0_prime),
                num(d.quadrature_error),
            ]
        })
        .collect();
    let header = ["E", "Phi0", "delta_kappa", "S_minus", "S_plus", "Phi0_prime", "quadrature_error"];
    let path = write_csv(&ctx.cfg.output_dir, "actions.csv", &header, &rows)?;
    println!("{} energies written to {}", data.len(), path.display());
    Ok(())
}

fn resonance_rows(r: &[ResonanceEstimate]) -> Vec<Vec<String>> {
    r.iter()
        .map(|x| {
            vec![
                x.l.to_string(),
                num(x.e_real),
                num(x.width),
                num(x.t_plus),
                num(x.t_minus),
                num(x.de_dzeta),
                num(x.residual),
            ]
        })
        .collect()
}

const RESONANCE_HEADER: [&str; 7] = ["l", "E", "width", "t_plus", "t_minus", "dE_dzeta", "residual"];

fn solve_one(ctx: &Context, cfg: &SolverConfig, name: &str) -> Result<usize> {
    let class = classify_energy(&ctx.cfg.profile, ctx.bands, ctx.centre())?;
    if matches!(class, Classification::General | Classification::Empty) {
        return Err(Error::Unsupported(format!(
            "the window centre is {class:?}; only (H5) and (H6) configurations are handled"
        )));
    }
    let r = locate_resonances(cfg, &ctx.cfg.profile, ctx.bands)?;
    let path = write_csv(&ctx.cfg.output_dir, name, &RESONANCE_HEADER, &resonance_rows(&r))?;
    if class == Classification::H5 {
        println!("ζ = {}: configuration (H5): the window is resonance-free; empty table {}", num(cfg.zeta), path.display());
    } else {
        println!(
            "ζ = {}: {} resonances (Φ₀ count {}), widths up to the undetermined constant c₀; {}",
            num(cfg.zeta),
            r.len(),
            expected_count(cfg, &ctx.cfg.profile, ctx.bands)?,
            path.display()
        );
    }
    Ok(r.len())
}

pub fn resonances(ctx: &Context, sweep: Option<usize>) -> Result<()> {
    let base = &ctx.cfg.solver;
    match sweep {
        None => solve_one(ctx, base, "resonances.csv").map(|_| ()),
        Some(0) => Err(Error::Config("--sweep-zeta needs at least 1 step".into())),
        Some(n) => {
            for i in 0..=n {
                let cfg = SolverConfig { zeta: base.zeta + base.epsilon * i as f64 / n as f64, ..base.clone() };
                solve_one(ctx, &cfg, &format!("resonances_zeta_{i:03}.csv"))?;
            }
            Ok(())
        }
    }
}

pub fn portrait(ctx: &Context, energy: Option<f64>) -> Result<()> {
    let e = energy.unwrap_or_else(|| ctx.centre());
    let p = &ctx.cfg.portrait;
    let range = p.zeta_range.map_or_else(
        || {
            let x = ctx.cfg.profile.extent() + 10.0;
            (-x, x)
        },
        |[a, b]| (a, b),
    );
    let samples = isoenergy_portrait(&ctx.cfg.profile, ctx.bands, e, range, p.samples)?;
    let rows: Vec<Vec<String>> = samples
        .iter()
        .map(|s| match s.branches {
            Some([a, b]) => vec![num(s.zeta), num(a), num(b)],
            None => vec![num(s.zeta), String::new(), String::new()],
        })
        .collect();
    let path = write_csv(&ctx.cfg.output_dir, "portrait.csv", &["zeta", "kappa_branch_1", "kappa_branch_2"], &rows)?;
    println!("{} samples (κ mod {}; add 2π for the second period) written to {}", rows.len(), num(TAU), path.display());
    Ok(())
}

pub fn oracle(ctx: &Context) -> Result<()> {
    let v = &ctx.cfg.potential;
    let m = (4 * v.n_modes() + 8).max(16);
    let hill = hill_matrix_band_edges(v, m)?;
    if !hill.converged {
        eprintln!("warning: Hill matrix edges moved by {:e} under M-doubling", hill.displacement);
    }
    let rows: Vec<Vec<String>> =
        hill.edges.iter().take(ctx.bands.edges.len()).enumerate().map(|(i, e)| vec![(i + 1).to_string(), num(*e)]).collect();
    write_csv(&ctx.cfg.output_dir, "hill_edges.csv", &["index", "edge"], &rows)?;
    let s = &ctx.cfg.solver;
    let eigs = ctx.problem().oracle(s.zeta, s.epsilon, &ctx.cfg.oracle)?;
    let rows: Vec<Vec<String>> = eigs
        .iter()
        .map(|p| vec![num(p.eigenvalue.re), num(p.eigenvalue.im), num(p.stability), num(p.localization)])
        .collect();
    let path = write_csv(&ctx.cfg.output_dir, "oracle.csv", &["re", "im", "stability", "localization"], &rows)?;
    let narrow = eigs.iter().filter(|p| verify::is_resonance(p)).count();
    println!("{} eigenvalues in the window ({narrow} CAP-stable narrow); written to {}", eigs.len(), path.display());
    Ok(())
}

fn line(report: &mut String, pass: bool, text: String) -> bool {
    let l = format!("{} {text}\n", if pass { "PASS" } else { "FAIL" });
    print!("{l}");
    report.push_str(&l);
    pass
}

pub fn verify(ctx: &Context) -> Result<()> {
    let s = &ctx.cfg.solver;
    let p = ctx.problem();
    let class = classify_energy(&ctx.cfg.profile, ctx.bands, ctx.centre())?;
    let solver = locate_resonances(s, &ctx.cfg.profile, ctx.bands)?;
    let bound = class == Classification::H6 && solver.iter().all(|r| r.width == 0.0);
    let mut oc = ctx.cfg.oracle.clone();
    if bound {
        oc.cap_strength = 0.0;
    } else if oc.cap_strength == 0.0 {
        return Err(Error::Config("U± is not empty: verification needs oracle.cap_strength > 0".into()));
    }
    let eigs = p.oracle(s.zeta, s.epsilon, &oc)?;
    let oracle: Vec<f64> = eigs.iter().filter(|e| bound || verify::is_resonance(e)).map(|e| e.eigenvalue.re).collect();
    let mut levels: Vec<f64> = solver.iter().map(|r| r.e_real).collect();
    levels.sort_by(f64::total_cmp);

    let mut report = String::new();
    let mut ok = true;
    let diff = oracle.len() as i64 - levels.len() as i64;
    ok &= line(
        &mut report,
        diff.abs() <= 1,
        format!("count: solver {} oracle {} ({})", levels.len(), oracle.len(), if bound { "bound states, η = 0" } else { "CAP-stable narrow" }),
    );
    if levels.len() >= 2 && oracle.len() >= 2 {
        let (shift, err) = verify::compare_spacings(&levels, &oracle);
        ok &= line(
            &mut report,
            err < verify::SPACING_TOL,
            format!("spacing: max relative error {} after index shift {shift} (tolerance {})", num(err), verify::SPACING_TOL),
        );
    }
    if !solver.is_empty() {
        let d = verify::drift_comparison(&p, s)?;
        ok &= line(
            &mut report,
            d.pass,
            format!("drift: max |FD/formula − 1| = {} over {} levels (tolerance {})", num(d.max_relative_error), d.levels.len(), verify::DRIFT_TOL),
        );
    }
    if !ctx.cfg.verify.ladder.is_empty() {
        let e_ref = ctx.cfg.verify.reference_energy.unwrap_or_else(|| ctx.centre());
        let lad = verify::width_ladder(&p, e_ref, &ctx.cfg.verify.ladder, s.zeta, &ctx.cfg.oracle)?;
        ok &= line(
            &mut report,
            lad.pass,
            format!(
                "width scaling: slope {} vs −min S = {} (ratio {}, tolerance {}); ratio to −2·min S = {}",
                num(lad.slope),
                num(-lad.action),
                num(lad.ratio),
                verify::SLOPE_TOL,
                num(lad.ratio / 2.0)
            ),
        );
    }
    let path = write_text(&ctx.cfg.output_dir, "verify.txt", &report)?;
    println!("report written to {}", path.display());
    if ok {
        Ok(())
    } else {
        Err(Error::InternalConsistency("verification failed".into()))
    }
}
