use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use newlyap::cli::{self, Format, RunConfig};
use newlyap::experiments::{Check, Relation};

#[derive(Parser)]
#[command(name = "newlyap", version, about = "Derivative-free Lyapunov exponents of planar maps")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Report path; overrides `output.path`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; results do not depend on this.
        #[arg(long, env = "NEWLYAP_THREADS")]
        threads: Option<usize>,
    },
    /// List the available experiments.
    List,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match args.command {
        Command::List => {
            print!("{}", cli::catalog_text());
            ExitCode::SUCCESS
        }
        Command::Run { config, out, format, seed, threads } => {
            let outcome = RunConfig::from_path(&config).map_err(cli::RunError::from).and_then(|mut cfg| {
                if let Some(s) = seed {
                    cfg.seed = s;
                }
                if let Some(p) = out {
                    cfg.output.path = Some(p);
                }
                if let Some(f) = format {
                    cfg.output.format = Some(f);
                }
                cli::with_threads(threads, || cli::run(&cfg))?
                    .inspect(|o| report(&cfg, o))
            });
            if let Err(e) = &outcome {
                eprintln!("error: {e}");
            }
            ExitCode::from(cli::exit_code(&outcome) as u8)
        }
    }
}

fn report(cfg: &RunConfig, o: &cli::RunOutcome) {
    let r = &o.report;
    let passed = r.checks.iter().filter(|c| c.pass).count();
    println!("{}: {passed}/{} checks passed in {:.2}s", r.name, r.checks.len(), r.wall_time);
    let shown: Vec<&Check> = if cfg.verbosity > 0 { r.checks.iter().collect() } else { r.failures().collect() };
    for c in shown {
        println!("  {} {}: {}", if c.pass { "pass" } else { "FAIL" }, c.description, describe(c));
    }
    for f in &o.files {
        println!("wrote {}", f.display());
    }
}

fn describe(c: &Check) -> String {
    let measured = c.measured.map_or_else(|| "no value".to_string(), |m| {
        if m == 0.0 || (1e-3..1e4).contains(&m.abs()) { format!("{m:.6}") } else { format!("{m:.3e}") }
    });
    let bound = match c.relation {
        Relation::Within => format!("expected {} +- {}", c.expected, c.tolerance),
        Relation::AtMost => format!("expected <= {}", c.expected + c.tolerance),
        Relation::AtLeast => format!("expected >= {}", c.expected - c.tolerance),
    };
    format!("measured {measured}, {bound}")
}
