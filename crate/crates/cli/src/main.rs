//! `adiabat`: bands → window → actions → resonances, the direct oracle, and comparisons.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use adiabat_core::fixtures;
use adiabat_core::quadrature::QuadratureSettings;
use adiabat_core::{Error, PhaseConvention, RunConfiguration};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "adiabat", version, about = "Resonances of slowly perturbed periodic Schrödinger operators")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, conflicts_with = "fixture")]
    config: Option<PathBuf>,
    /// Built-in fixture instead of a configuration file.
    #[arg(long, global = true)]
    fixture: Option<String>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct SolverFlags {
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    zeta: Option<f64>,
    /// Energy window `E_a E_b`.
    #[arg(long, global = true, num_args = 2, value_names = ["EA", "EB"], allow_hyphen_values = true)]
    window: Option<Vec<f64>>,
    /// Solve at `N + 1` values of `ζ` spanning one period `[ζ, ζ + ε]`.
    #[arg(long, global = true)]
    sweep_zeta: Option<usize>,
    #[arg(long, global = true)]
    root_tol: Option<f64>,
    #[arg(long, global = true)]
    c0: Option<f64>,
    #[arg(long, global = true, value_enum)]
    phase_convention: Option<Convention>,
    #[arg(long, global = true)]
    grid_points: Option<usize>,
    /// Gauss–Legendre nodes per panel.
    #[arg(long, global = true)]
    nodes: Option<usize>,
    #[arg(long, global = true)]
    buffer_fraction: Option<f64>,
    #[arg(long, global = true)]
    panels: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Convention {
    Literal,
    EdgeReferenced,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Band edges, gap widths and open-gap flags.
    Bands,
    /// Decomposition of the spectral window at one energy.
    Window {
        /// Defaults to the centre of the energy window.
        #[arg(long, allow_hyphen_values = true)]
        energy: Option<f64>,
    },
    /// Φ₀, δκ and S± on an energy grid spanning the window.
    Actions {
        #[arg(long, default_value_t = 21)]
        points: usize,
    },
    /// Resonance table from the quantization condition.
    Resonances,
    /// Real iso-energy curve (ζ, κ mod 2π).
    Portrait {
        #[arg(long, allow_hyphen_values = true)]
        energy: Option<f64>,
    },
    /// Hill-matrix band edges and the finite-difference spectrum.
    Oracle,
    /// Solver against oracle: counts, spacings, drift and width scaling.
    Verify,
}

impl SolverFlags {
    fn apply(&self, cfg: &mut RunConfiguration) {
        let s = &mut cfg.solver;
        if let Some(x) = self.epsilon {
            s.epsilon = x;
        }
        if let Some(x) = self.zeta {
            s.zeta = x;
        }
        if let Some(w) = &self.window {
            s.window = [w[0], w[1]];
        }
        if let Some(x) = self.root_tol {
            s.root_tol = x;
        }
        if let Some(x) = self.c0 {
            s.c0 = x;
        }
        if let Some(c) = self.phase_convention {
            s.phase_convention = match c {
                Convention::Literal => PhaseConvention::Literal,
                Convention::EdgeReferenced => PhaseConvention::EdgeReferenced,
            };
        }
        if let Some(x) = self.grid_points {
            s.grid_points = x;
        }
        let q: &mut QuadratureSettings = &mut s.quadrature;
        if let Some(x) = self.nodes {
            q.nodes = x;
        }
        if let Some(x) = self.buffer_fraction {
            q.buffer_fraction = x;
        }
        if let Some(x) = self.panels {
            q.panels = x;
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfiguration, Error> {
    let mut cfg = match (&cli.config, &cli.fixture) {
        (Some(path), _) => RunConfiguration::load(path)?,
        (None, Some(name)) => {
            let f = fixtures::by_name(name).ok_or_else(|| {
                let known: Vec<&str> = fixtures::all().iter().map(|f| f.name).collect();
                Error::Config(format!("unknown fixture {name:?}; known: {}", known.join(", ")))
            })?;
            let mut c = RunConfiguration::for_fixture(&f, 0.1);
            c.oracle.cap_strength = 4.0;
            c
        }
        (None, None) => return Err(Error::Config("pass --config PATH or --fixture NAME".into())),
    };
    cli.solver.apply(&mut cfg);
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = load(cli)?;
    let bands = cfg.band_structure()?;
    cfg.check_oracle_fit(&bands)?;
    let ctx = commands::Context::new(&cfg, &bands)?;
    match &cli.command {
        Command::Bands => commands::bands(&ctx),
        Command::Window { energy } => commands::window(&ctx, *energy),
        Command::Actions { points } => commands::actions(&ctx, *points),
        Command::Resonances => commands::resonances(&ctx, cli.solver.sweep_zeta),
        Command::Portrait { energy } => commands::portrait(&ctx, *energy),
        Command::Oracle => commands::oracle(&ctx),
        Command::Verify => commands::verify(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if matches!(cli.command, Command::Verify) {
                println!("FAIL {e}");
            }
            if e.is_configuration() {
                eprintln!("configuration error: {e}");
                ExitCode::from(2)
            } else {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        }
    }
}
