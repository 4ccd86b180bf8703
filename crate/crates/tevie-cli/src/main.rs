//! Command-line driver for the spectral, identity, scattering and Fredholm experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tevie_cli::{commands, output};

use tevie_cli::config::{parse_complex, ExperimentConfig, FormulationChoice, ShapeChoice, SpectrumOp, Sweep};

#[derive(Parser)]
#[command(name = "tevie", version, about = "TE volume integral equation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Flags override the config file.
#[derive(Args)]
struct Common {
    /// JSON config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Cap on worker threads
    #[arg(long)]
    threads: Option<usize>,
    /// disk, ellipse, square, triangle, trapezoid or lshape
    #[arg(long)]
    shape: Option<String>,
}

#[derive(Args)]
struct BoundaryFlags {
    /// Boundary nodes
    #[arg(long)]
    panels: Option<usize>,
    /// Corner grading exponent
    #[arg(long)]
    graded: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum of a boundary or volume operator against its prediction
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        boundary: BoundaryFlags,
        #[arg(long, value_enum)]
        op: Option<SpectrumOp>,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        eta: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        nu: Option<f64>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Volume and boundary operator identities
    Identities {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        boundary: BoundaryFlags,
        #[arg(long)]
        nx: Option<usize>,
    },
    /// Plane-wave scattering by the volume integral equations
    Scatter {
        #[command(flatten)]
        common: Common,
        /// Relative permittivity as re or re,im
        #[arg(long, allow_hyphen_values = true)]
        epsr: Option<String>,
        /// Relative permeability as re or re,im
        #[arg(long, allow_hyphen_values = true)]
        mur: Option<String>,
        #[arg(long)]
        k: Option<f64>,
        /// Propagation angle in radians
        #[arg(long, allow_hyphen_values = true)]
        angle: Option<f64>,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        margin: Option<f64>,
        #[arg(long, value_enum)]
        formulation: Option<FormulationChoice>,
        /// Solve both formulations
        #[arg(long, conflicts_with = "formulation")]
        both: bool,
        /// Compare with the series solution (centred disk only)
        #[arg(long)]
        compare_mie: bool,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        restart: Option<usize>,
    },
    /// Fredholm verdicts of both formulations over a permittivity sweep
    Fredholm {
        #[command(flatten)]
        common: Common,
        /// lo:hi:step
        #[arg(long, allow_hyphen_values = true)]
        epsr_sweep: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        mur: Option<String>,
    },
    /// Reflection symmetry of the boundary spectrum about one half
    Symmetry {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        boundary: BoundaryFlags,
    },
}

fn base_config(common: &Common) -> Result<ExperimentConfig, String> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(v) = &common.out {
        cfg.out = v.clone();
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = common.threads {
        cfg.threads = Some(v);
    }
    if let Some(v) = &common.shape {
        cfg.shape = ShapeChoice::Named(v.clone());
    }
    Ok(cfg)
}

fn apply_boundary(cfg: &mut ExperimentConfig, b: &BoundaryFlags) {
    if let Some(v) = b.panels {
        cfg.boundary.panels = v;
    }
    if let Some(v) = b.graded {
        cfg.boundary.graded = v;
    }
}

type Runner = fn(&ExperimentConfig) -> commands::CommandResult;

/// Resolves the configuration for a subcommand.
fn resolve(command: Command) -> Result<(ExperimentConfig, Runner), String> {
    match command {
        Command::Spectrum { common, boundary, op, nx, eta, nu, tolerance } => {
            let mut cfg = base_config(&common)?;
            apply_boundary(&mut cfg, &boundary);
            if let Some(v) = op {
                cfg.spectrum.op = v;
            }
            if let Some(v) = nx {
                cfg.grid.nx = v;
            }
            if let Some(v) = eta {
                cfg.spectrum.eta = v;
            }
            if let Some(v) = nu {
                cfg.spectrum.nu = v;
            }
            if tolerance.is_some() {
                cfg.spectrum.tolerance = tolerance;
            }
            Ok((cfg, commands::run_spectrum))
        }
        Command::Identities { common, boundary, nx } => {
            let mut cfg = base_config(&common)?;
            apply_boundary(&mut cfg, &boundary);
            if let Some(v) = nx {
                cfg.grid.nx = v;
            }
            Ok((cfg, commands::run_identities))
        }
        Command::Scatter {
            common,
            epsr,
            mur,
            k,
            angle,
            nx,
            margin,
            formulation,
            both,
            compare_mie,
            tol,
            max_iter,
            restart,
        } => {
            let mut cfg = base_config(&common)?;
            if let Some(v) = epsr {
                cfg.medium.eps_r = parse_complex(&v)?;
            }
            if let Some(v) = mur {
                cfg.medium.mu_r = parse_complex(&v)?;
            }
            if let Some(v) = k {
                cfg.k = v;
            }
            if let Some(a) = angle {
                cfg.direction = [a.cos(), a.sin()];
            }
            if let Some(v) = nx {
                cfg.grid.nx = v;
            }
            if let Some(v) = margin {
                cfg.grid.margin = v;
            }
            if both {
                cfg.scatter.formulation = FormulationChoice::Both;
            } else if let Some(f) = formulation {
                cfg.scatter.formulation = f;
            }
            cfg.scatter.compare_mie |= compare_mie;
            if let Some(v) = tol {
                cfg.solver.tol = v;
            }
            if let Some(v) = max_iter {
                cfg.solver.max_iter = v;
            }
            if let Some(v) = restart {
                cfg.solver.restart = v;
            }
            Ok((cfg, commands::run_scatter))
        }
        Command::Fredholm { common, epsr_sweep, mur } => {
            let mut cfg = base_config(&common)?;
            if let Some(v) = epsr_sweep {
                cfg.sweep = Sweep::parse(&v)?;
            }
            if let Some(v) = mur {
                cfg.medium.mu_r = parse_complex(&v)?;
            }
            Ok((cfg, commands::run_fredholm))
        }
        Command::Symmetry { common, boundary } => {
            let mut cfg = base_config(&common)?;
            apply_boundary(&mut cfg, &boundary);
            Ok((cfg, commands::run_symmetry))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (cfg, run) = match resolve(cli.command) {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    if let Err(e) = output::prepare(&cfg) {
        eprintln!("error: {}: {e}", cfg.out.display());
        return ExitCode::from(1);
    }
    match run(&cfg) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
