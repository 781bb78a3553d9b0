//! `pedmr` — batch experiment runner for the pEDMR spin-pair simulator.
//!
//! Exit codes: 0 success, 2 configuration error, 3 sequence parse error,
//! 4 fit non-convergence (data is still written).

use clap::{Args, Parser, Subcommand};
use pedmr_cli::config::RunConfig;
use pedmr_cli::experiments;
use pedmr_core::sequence::parse;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_FIT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "pedmr",
    about = "Pulsed EDMR spin-pair simulator: Rabi, echo tomography, echo decay, field sweeps",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration file (key = value).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Override the Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the quadrature points per spin.
    #[arg(long)]
    points: Option<usize>,
    /// Custom pulse sequence (.pseq) instead of the built-in one.
    #[arg(long)]
    sequence: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV with columns x,y[,sigma] and a header row.
    #[arg(long)]
    input: PathBuf,
    /// Fit model: monoexp or gaussian.
    #[arg(long)]
    model: String,
    /// Subtract a linear background fitted on this trailing fraction first.
    #[arg(long)]
    baseline_fraction: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Electrically detected Rabi oscillations (swept pulse length).
    Rabi(RunArgs),
    /// Two-dimensional Carr-Purcell echo map over (B0, tau2).
    EchoMap(RunArgs),
    /// Echo decay at tau1 = tau2 with a mono-exponential fit.
    EchoDecay(RunArgs),
    /// Field-swept spectrum under a fixed pi pulse.
    Spectrum(RunArgs),
    /// Fit a CSV series with a named model.
    Fit(FitArgs),
    /// Parse a .pseq file and report diagnostics.
    ParseCheck { file: PathBuf },
}

fn load_config(args: &RunArgs) -> Result<RunConfig, pedmr_core::CoreError> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(points) = args.points {
        cfg.quad_points = Some(points);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &RunArgs, f: impl FnOnce(&RunConfig) -> pedmr_core::Result<()>) -> ExitCode {
    let cfg = match load_config(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match f(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(pedmr_core::CoreError::Compile(msg)) => {
            eprintln!("sequence error:\n{msg}");
            ExitCode::from(EXIT_PARSE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Rabi(args) => run(&args, |cfg| {
            experiments::run_rabi(cfg, &args.out, args.sequence.as_deref())
        }),
        Cmd::EchoMap(args) => run(&args, |cfg| {
            experiments::run_echo_map(cfg, &args.out, args.sequence.as_deref())
        }),
        Cmd::Spectrum(args) => run(&args, |cfg| {
            experiments::run_spectrum(cfg, &args.out, args.sequence.as_deref())
        }),
        Cmd::EchoDecay(args) => {
            if args.sequence.is_some() {
                eprintln!("config error: echo-decay uses its canonical sequence; --sequence is not supported");
                return ExitCode::from(EXIT_CONFIG);
            }
            let cfg = match load_config(&args) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            match experiments::run_echo_decay(&cfg, &args.out) {
                Ok(fit) if fit.converged => ExitCode::SUCCESS,
                Ok(fit) => {
                    eprintln!(
                        "fit did not converge (status {:?}); data written to {}",
                        fit.status,
                        args.out.display()
                    );
                    ExitCode::from(EXIT_FIT)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_CONFIG)
                }
            }
        }
        Cmd::Fit(args) => {
            match experiments::run_fit(
                &args.input,
                &args.model,
                args.baseline_fraction,
                &args.out,
            ) {
                Ok(fit) => {
                    print!("{}", fit.to_key_value());
                    if fit.converged {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("fit did not converge; results written anyway");
                        ExitCode::from(EXIT_FIT)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_CONFIG)
                }
            }
        }
        Cmd::ParseCheck { file } => {
            let text = match std::fs::read_to_string(&file) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("cannot read {}: {e}", file.display());
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            match parse(&text) {
                Ok(program) => {
                    let axes = program
                        .statements
                        .iter()
                        .filter(|s| matches!(s, pedmr_core::sequence::Statement::Sweep { .. }))
                        .count();
                    println!(
                        "ok: {} statements, {} sweep axis(es)",
                        program.statements.len(),
                        axes
                    );
                    ExitCode::SUCCESS
                }
                Err(diags) => {
                    for d in &diags {
                        eprintln!("{d}");
                    }
                    ExitCode::from(EXIT_PARSE)
                }
            }
        }
    }
}
