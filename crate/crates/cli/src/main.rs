//! `translator-lab`: solve, classify and verify translating solitons over
//! rank-one and rank-two symmetric spaces, writing CSV data and a run
//! manifest.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use translator_lab::LabError;

pub const EXIT_DOMAIN: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "translator-lab", version, about = "Numerical lab for mean curvature flow translators")]
pub struct Cli {
    /// `key = value` file (or a previous manifest) supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Where to write the run manifest. Defaults to `<out>.manifest.toml` when `--out` is given.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Worker cap for parallel commands; overrides TRANSLATOR_LAB_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SpaceArgs {
    /// sphere | cp | hp | op
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub n: Option<u32>,
    /// Cayley plane scale.
    #[arg(long)]
    pub a: Option<f64>,
    /// Cayley plane leading coefficient: tabulated | rootsum
    #[arg(long)]
    pub coefficients: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SolverArgs {
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Blow-up threshold on |V'|.
    #[arg(long)]
    pub y_max: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Root data, α and residues of a rank-one space.
    Spaces {
        #[command(flatten)]
        space: SpaceArgs,
    },
    /// Maximal solution through one initial condition; CSV `s,V,dV`.
    Solve {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, allow_hyphen_values = true)]
        s0: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        v0: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        dv0: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solution leaving the origin or the focal orbit smoothly.
    Shoot {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// origin | focal
        #[arg(long)]
        end: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Type of the maximal solution through one initial condition.
    Classify {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, allow_hyphen_values = true)]
        s0: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        v0: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        dv0: Option<f64>,
    },
    /// Classify a grid of initial conditions plus the two shooting solutions.
    Sweep {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Number of interior abscissae.
        #[arg(long)]
        ns: Option<usize>,
        /// Number of slopes (equally spaced angles).
        #[arg(long)]
        nslopes: Option<usize>,
        /// Run on one thread.
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        sequential: Option<bool>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Phase-plane trajectory for CP^n; CSV `x,psi,eta,h1_bound`.
    Phase {
        #[arg(long)]
        n: Option<u32>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        x0: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        psi0: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evolve a smooth-origin profile by the flow and measure its drift; CSV `s,u_final,u_expected,abs_err`.
    Flowcheck {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Left end as a fraction of α.
        #[arg(long)]
        from: Option<f64>,
        /// Right end as a fraction of α.
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        intervals: Option<usize>,
        #[arg(long)]
        horizon: Option<f64>,
        /// Also run on halved and doubled grids and report the observed order.
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        refine: Option<bool>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integral curves of the chamber field with F̂ and V; CSV `t,x1,x2,Fhat,V`.
    Hermann {
        /// A1xA1 | A2 | B2 | G2
        #[arg(long)]
        layout: Option<String>,
        /// Comma-separated, one per positive root.
        #[arg(long)]
        multiplicities: Option<String>,
        /// Comma-separated, one per positive root.
        #[arg(long)]
        scales: Option<String>,
        /// Sample the field on an N x N table instead of evaluating it in closed form.
        #[arg(long)]
        table: Option<usize>,
        /// cubic | quadratic | auto
        #[arg(long)]
        variant: Option<String>,
        /// Start point `x1,x2`; defaults to a point on the level set of the fan.
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        f0: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        v0: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        t_end: Option<f64>,
        /// Number of curves seeded on one level set of the potential.
        #[arg(long)]
        fan: Option<usize>,
        /// Depth of that level set below the maximum of the potential.
        #[arg(long)]
        depth: Option<f64>,
        #[arg(long)]
        rtol: Option<f64>,
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        sequential: Option<bool>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(err: &LabError) -> u8 {
    if err.is_domain() {
        EXIT_DOMAIN
    } else {
        EXIT_NUMERICAL
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
