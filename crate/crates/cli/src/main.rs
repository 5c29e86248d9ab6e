use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use limpet_cli::{apply_override, run, validate_config_in, Kind, EXIT_CONFIG};

#[derive(Parser)]
#[command(
    name = "limpet",
    version,
    about = "Spectra and Lyapunov exponents of periodic and limit-periodic Schrödinger operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Band structure of each potential at each coupling.
    Bands(Common),
    /// Lyapunov exponent of the family on an energy grid.
    LyapunovCurve(Common),
    /// Band-length, density-of-states and norm-measure checks.
    MeasBounds(Common),
    /// Gap-opening and shifted families around the given family.
    Start(Common),
    /// Block and staircase families of a longer period.
    Induction(Common),
    /// The nested-ball iteration.
    Iterate(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; beats the config's out_dir.
    #[arg(long, env = "LIMPET_OUT_DIR")]
    out: Option<PathBuf>,
    /// Seed for randomized choices; beats the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: one per core).
    #[arg(long)]
    threads: Option<usize>,
    /// Set a config key, e.g. --override overrides.amp_exponent=3 (repeatable).
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Bands(a) => (Kind::Bands, a),
        Command::LyapunovCurve(a) => (Kind::LyapunovCurve, a),
        Command::MeasBounds(a) => (Kind::MeasBounds, a),
        Command::Start(a) => (Kind::Start, a),
        Command::Induction(a) => (Kind::Induction, a),
        Command::Iterate(a) => (Kind::Iterate, a),
    };
    ExitCode::from(execute(kind, args) as u8)
}

fn execute(kind: Kind, args: Common) -> i32 {
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return EXIT_CONFIG;
        }
    };
    let mut table: toml::Table = match text.parse() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: <document>: not valid TOML: {e}");
            return EXIT_CONFIG;
        }
    };
    let mut problems = Vec::new();
    for o in &args.overrides {
        if let Err(v) = apply_override(&mut table, o) {
            problems.push(v);
        }
    }
    if let Some(seed) = args.seed {
        table.insert("seed".into(), toml::Value::Integer(seed as i64));
    }
    let base = args.config.parent().map(PathBuf::from);
    let config = match validate_config_in(&table.to_string(), Some(kind), base.as_deref()) {
        Ok(c) if problems.is_empty() => Some(c),
        Ok(_) => None,
        Err(v) => {
            problems.extend(v);
            None
        }
    };
    let Some(config) = config else {
        for p in &problems {
            eprintln!("error: {p}");
        }
        return EXIT_CONFIG;
    };
    let out_dir = args
        .out
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("limpet-out"));
    match run(&config, &out_dir, args.threads) {
        Ok(manifest) => {
            for c in manifest.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed: {}: {}", c.name, c.detail);
            }
            for e in &manifest.errors {
                eprintln!("error in {}: {}", e.item, e.message);
            }
            println!(
                "{} files written to {} ({})",
                manifest.files.len() + 1,
                out_dir.display(),
                if manifest.passed {
                    "all checks passed"
                } else {
                    "checks failed"
                }
            );
            manifest.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
