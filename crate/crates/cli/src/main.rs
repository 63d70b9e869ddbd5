use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ewkv_cli::config::{ConfigError, Experiment, RunConfig};
use ewkv_cli::emit::emit_outcome;
use ewkv_cli::experiments::execute;

const DEFAULT_OUT: &str = "ewkv-out";

#[derive(Parser)]
#[command(
    name = "ewkv",
    version,
    about = "Elastic waves with Kelvin-Voigt damping: experiments and certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (EWKV_OUT takes precedence when set)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap on worker threads
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON configuration
    Run { config: PathBuf },
    /// Evaluate the 2D exponent gate
    Gate {
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        p2: f64,
    },
    /// Run the spectrum, propagator and remainder suites
    Spectrum {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 2.0)]
        b: f64,
    },
}

fn usage(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return usage("--jobs must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            return usage(e);
        }
    }
    let cfg = match cli.command {
        Command::Run { config } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => return usage(format!("{}: {e}", config.display())),
            };
            match RunConfig::from_json(&text) {
                Ok(c) => c,
                Err(e) => return usage(e),
            }
        }
        Command::Gate { m, p1, p2 } => {
            let mut c = RunConfig::new(Experiment::Gate);
            c.physics.m = Some(m);
            c.physics.p1 = Some(p1);
            c.physics.p2 = Some(p2);
            c
        }
        Command::Spectrum { a, b } => {
            let mut c = RunConfig::new(Experiment::Spectrum);
            c.params.a = Some(a);
            c.params.b = Some(b);
            c
        }
    };
    let dir = std::env::var_os("EWKV_OUT")
        .map(PathBuf::from)
        .or(cli.out)
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let outcome = match execute(&cfg) {
        Ok(o) => o,
        Err(ConfigError { key, message }) => {
            return usage(format!("invalid configuration at `{key}`: {message}"))
        }
    };
    for cert in &outcome.certificates {
        println!("{}", cert.summary());
        if let Some(d) = &cert.diagnostic {
            println!("  diagnostic: {d}");
        }
    }
    match emit_outcome(&dir, &outcome) {
        Ok(files) => println!("wrote {} files to {}", files.len(), dir.display()),
        Err(e) => {
            return usage(format!("cannot write to {}: {e}", dir.display()));
        }
    }
    if outcome.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
