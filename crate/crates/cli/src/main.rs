use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use starflow_cli::commands::{self, CommandError, SolveOptions, EXIT_CONFIG};
use starflow_cli::config::RunConfig;
use starflow_cli::selftest::{self, Mutation};

#[derive(Parser)]
#[command(name = "starflow", version, about = "Curvature flow of star-shaped surfaces toward a prescribed curvature")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check monotonicity and barrier conditions on the prescribed function.
    CheckF {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the sign or speed condition on the initial surface.
    CheckInit {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evolve the initial surface and write monitors and certificates.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Evolve even if the input fails the admissibility checks.
        #[arg(long)]
        force: bool,
        /// Comma-separated times at which to export meshes.
        #[arg(long, value_delimiter = ',', value_parser = parse_time)]
        snapshot_times: Option<Vec<f64>>,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in invariant checks.
    Selftest {
        #[arg(long, hide = true, value_enum)]
        mutate: Option<MutateArg>,
    },
    /// Write an OBJ mesh of a field file (or of the initial surface).
    Export {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MutateArg {
    Hessian,
}

fn parse_time(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(t) if t >= 0.0 => Ok(t),
        Ok(_) => Err("times must be non-negative".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn run(cli: Cli) -> Result<i32, CommandError> {
    let outcome = match cli.command {
        Command::CheckF { config } => commands::check_f(&RunConfig::load(&config)?)?,
        Command::CheckInit { config } => commands::check_init(&RunConfig::load(&config)?)?,
        Command::Solve { config, force, snapshot_times, out } => {
            let cfg = RunConfig::load(&config)?;
            let start = Instant::now();
            let res = commands::solve(&cfg, &SolveOptions { force, out_dir: out, snapshot_times })?;
            print!("{}", res.report);
            for f in &res.files {
                println!("wrote {}", f.display());
            }
            eprintln!("wall time {:.2} s", start.elapsed().as_secs_f64());
            return Ok(res.code);
        }
        Command::Selftest { mutate } => selftest::run(match mutate {
            Some(MutateArg::Hessian) => Mutation::Hessian,
            None => Mutation::None,
        }),
        Command::Export { config, field, out } => {
            commands::export(&RunConfig::load(&config)?, field.as_deref(), out.as_deref())?
        }
    };
    print!("{}", outcome.report);
    Ok(outcome.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
