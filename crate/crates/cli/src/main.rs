use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ewalk_cli::commands::{self, CmdError, Context, Format};
use ewalk_cli::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "ewalk", version, about = "Electric quantum walk experiments")]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set field=1/5`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for parameter sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Finite-n Lyapunov exponents against log(1/|a|), plus Herman–Avila–Bochi sides.
    Lyapunov,
    /// Transport regime per field: spreading exponent, revivals, participation, CF summary.
    PhaseTable,
    /// Gauge, sieving, band-square, resolvent, tridiagonal and Poisson identities.
    Verify,
    /// Eigenvalues and eigenfunction decay of a finite restriction.
    Eigenmodes,
    /// Time evolution observables.
    Evolve,
    /// Resolvent decay against the Lyapunov exponent for boundary sign choices.
    ResolventScan,
    /// Continued fraction, β proxy and Diophantine check of the field.
    Cf,
}

fn run(cli: &Cli) -> Result<commands::Output, CmdError> {
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::parse("")?,
    };
    for o in &cli.overrides {
        config.set(o)?;
    }
    let ctx = Context { config: &config, seed: cli.seed };
    match cli.command {
        Command::Lyapunov => commands::lyapunov(&ctx),
        Command::PhaseTable => commands::phase_table(&ctx),
        Command::Verify => commands::verify(&ctx),
        Command::Eigenmodes => commands::eigenmodes(&ctx),
        Command::Evolve => commands::evolve_cmd(&ctx),
        Command::ResolventScan => commands::resolvent_scan(&ctx),
        Command::Cf => commands::cf(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    // dense eigensolves stay sequential so results do not depend on the thread count
    faer::set_global_parallelism(faer::Par::Seq);
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let out = match run(&cli) {
        Ok(o) => o,
        Err(e @ CmdError::Config(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let text = out.render(cli.format);
    match &cli.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, text) {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    if out.ok {
        ExitCode::SUCCESS
    } else {
        eprintln!("assertion failed; see the `pass` fields of the report");
        ExitCode::from(1)
    }
}
