#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use spherevortex_core::verify::Suite;

use crate::commands::{DynamicsArgs, KrOp, Outputs};
use crate::config::{Refine, RunConfig};

/// Exit 2 for configuration errors, 1 for numerical failures.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl From<spherevortex_core::Error> for CliError {
    fn from(e: spherevortex_core::Error) -> Self {
        use spherevortex_core::Error as E;
        match e {
            E::Config(_) | E::Io(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "spherevortex", version, about = "Desingularized traveling vortex pairs on the unit sphere")]
struct Cli {
    /// Run configuration (JSON). The shipped default is used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides output_dir from the config and SPHEREVORTEX_OUTPUT.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Green kernel and its split.
    Kernel {
        #[command(subcommand)]
        op: KernelCmd,
    },
    /// Kirchhoff–Routh function.
    Kr {
        #[command(subcommand)]
        op: KrCmd,
    },
    /// Point-vortex dynamics.
    Dynamics {
        #[command(subcommand)]
        op: DynamicsCmd,
    },
    /// Radial ground states.
    GroundState {
        #[command(subcommand)]
        op: GroundStateCmd,
    },
    /// Core scale relation.
    Scale {
        #[command(subcommand)]
        op: ScaleCmd,
    },
    /// Desingularized ansatz for every epsilon in the config.
    Construct {
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        /// Also export ψ and vorticity on the config grid.
        #[arg(long)]
        fields: bool,
    },
    /// Semilinear stream-function solve for every epsilon in the config.
    Solve {
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        n_theta: Option<usize>,
        #[arg(long)]
        n_phi: Option<usize>,
        #[arg(long)]
        damping: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Runs one verification suite.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
    },
}

#[derive(Subcommand)]
enum KernelCmd {
    /// Prints G, Γ and H for each pair as JSON lines.
    Eval {
        /// THETA,PHI
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        /// THETA,PHI (repeatable)
        #[arg(long, required = true, allow_hyphen_values = true)]
        zp: Vec<String>,
    },
}

#[derive(Subcommand)]
enum KrCmd {
    Energy {
        #[arg(long)]
        system: Option<PathBuf>,
    },
    Grad {
        #[arg(long)]
        system: Option<PathBuf>,
    },
    Critical {
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "traveling")]
        pins: PinsArg,
    },
}

#[derive(Subcommand)]
enum DynamicsCmd {
    Run {
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 100)]
        sample_every: usize,
        /// Integrate in the frame moving with the system's W.
        #[arg(long)]
        co_rotating: bool,
        /// Refine to a critical point before integrating.
        #[arg(long)]
        refine: bool,
    },
}

#[derive(Subcommand)]
enum GroundStateCmd {
    Solve {
        #[arg(long)]
        gamma: f64,
    },
}

#[derive(Subcommand)]
enum ScaleCmd {
    Solve {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        kappa: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Kernels,
    Dynamics,
    Asymptotics,
    Pde,
}

#[derive(Clone, Copy, ValueEnum)]
enum PinsArg {
    Traveling,
    Gauge,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(d) = cli.output_dir {
        cfg.output_dir = d;
    }
    let out = Outputs::new(&cfg.output_dir)?;
    match cli.command {
        Command::Kernel {
            op: KernelCmd::Eval { z, zp },
        } => commands::kernel_eval(&cfg, out, &z, &zp),
        Command::Kr { op } => {
            let (system, op) = match op {
                KrCmd::Energy { system } => (system, KrOp::Energy),
                KrCmd::Grad { system } => (system, KrOp::Grad),
                KrCmd::Critical { system, pins } => {
                    let r = match pins {
                        PinsArg::Traveling => Refine::Traveling,
                        PinsArg::Gauge => Refine::Gauge,
                    };
                    (system, KrOp::Critical(r))
                }
            };
            let sys = commands::system_from(system.as_deref(), &cfg)?;
            commands::kr(&cfg, out, &sys, op)
        }
        Command::Dynamics {
            op:
                DynamicsCmd::Run {
                    system,
                    t_end,
                    dt,
                    sample_every,
                    co_rotating,
                    refine,
                },
        } => {
            let mut sys = commands::system_from(system.as_deref(), &cfg)?;
            if refine {
                sys = spherevortex_core::vortex::find_critical(
                    &sys,
                    &spherevortex_core::vortex::Pins::traveling(sys.len()),
                    1e-11,
                    100,
                )?
                .config;
            }
            let args = DynamicsArgs {
                t_end,
                dt,
                sample_every,
                co_rotating,
            };
            commands::dynamics(&cfg, out, &sys, &args)
        }
        Command::GroundState {
            op: GroundStateCmd::Solve { gamma },
        } => commands::ground_state(&cfg, out, gamma),
        Command::Scale {
            op: ScaleCmd::Solve { gamma, epsilon, kappa },
        } => commands::scale(&cfg, out, gamma, epsilon, kappa),
        Command::Construct {
            system,
            epsilon,
            gamma,
            fields,
        } => {
            override_common(&mut cfg, epsilon, gamma)?;
            let sys = commands::system_from(system.as_deref(), &cfg)?;
            commands::construct(&cfg, out, &sys, fields)
        }
        Command::Solve {
            system,
            epsilon,
            gamma,
            n_theta,
            n_phi,
            damping,
            tol,
            max_iter,
        } => {
            override_common(&mut cfg, epsilon, gamma)?;
            if let Some(n) = n_theta {
                cfg.grid.n_theta = n;
            }
            if let Some(n) = n_phi {
                cfg.grid.n_phi = n;
            }
            if let Some(d) = damping {
                cfg.solver.damping = d;
            }
            if let Some(t) = tol {
                cfg.solver.tol = t;
            }
            if let Some(m) = max_iter {
                cfg.solver.max_iter = m;
            }
            cfg.validate()?;
            let sys = commands::system_from(system.as_deref(), &cfg)?;
            commands::solve(&cfg, out, &sys)
        }
        Command::Verify { suite } => {
            let s = match suite {
                SuiteArg::Kernels => Suite::Kernels,
                SuiteArg::Dynamics => Suite::Dynamics,
                SuiteArg::Asymptotics => Suite::Asymptotics,
                SuiteArg::Pde => Suite::Pde,
            };
            commands::verify(&cfg, out, s)
        }
    }
}

fn override_common(cfg: &mut RunConfig, epsilon: Option<f64>, gamma: Option<f64>) -> Result<(), CliError> {
    if let Some(e) = epsilon {
        cfg.epsilon = vec![e];
    }
    if let Some(g) = gamma {
        cfg.gamma = g;
    }
    cfg.validate()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {}", msg.replace('\n', " "));
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {}", msg.replace('\n', " "));
            ExitCode::from(1)
        }
    }
}
