use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pesin::harness::{run, write_records, Command, Outcome, Record, RunConfig, EXIT_USAGE};
use pesin::Error;

#[derive(Parser)]
#[command(name = "pesin", version, about = "Lyapunov charts, closing lemma certificates and horseshoe codings")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Finite-window Lyapunov spectrum
    Lyap(Common),
    /// Pesin radii and frame norms along the window
    Chart(Common),
    /// Close near-returns into certified periodic orbits
    Close(Common),
    /// Build the horseshoe coding and check it
    Code(Common),
    /// Separated-set entropy estimate
    Entropy(Common),
    /// Check the parameter budget
    Budget(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: std::path::PathBuf,
    /// Overrides the `seed` key
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Overrides the `out` key; records go to stdout when neither is set
    #[arg(long, value_name = "PATH")]
    out: Option<std::path::PathBuf>,
    /// Run even when the budget fails; the override is recorded
    #[arg(long)]
    override_budget: bool,
}

fn emit(text: &str, out: Option<&std::path::Path>) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())
        }
    }
}

fn usage_failure(message: String, seed: u64, out: Option<&std::path::Path>) -> ExitCode {
    let rec = Record::new("error", "none", seed).text("command", "usage").int("exit", EXIT_USAGE).text("message", message.trim_end());
    eprintln!("{}", message.trim_end());
    let _ = emit(&write_records(&[rec]), out);
    ExitCode::from(EXIT_USAGE as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => return usage_failure(e.to_string(), 0, None),
    };
    let (command, args) = match cli.command {
        Sub::Lyap(a) => (Command::Lyap, a),
        Sub::Chart(a) => (Command::Chart, a),
        Sub::Close(a) => (Command::Close, a),
        Sub::Code(a) => (Command::Code, a),
        Sub::Entropy(a) => (Command::Entropy, a),
        Sub::Budget(a) => (Command::Budget, a),
    };
    let seed_hint = args.seed.unwrap_or(0);
    let cfg = match std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))
        .and_then(|text| RunConfig::parse(&text))
    {
        Ok(c) => c,
        Err(e) => return usage_failure(e.to_string(), seed_hint, args.out.as_deref()),
    };
    let seed = match args.seed.map_or_else(|| cfg.u64("seed"), Ok) {
        Ok(s) => s,
        Err(e) => return usage_failure(e.to_string(), 0, args.out.as_deref()),
    };
    let out = args.out.clone().or_else(|| Some(cfg.get("out")).filter(|s| !s.is_empty()).map(Into::into));
    let Outcome { records, exit } = run(command, &cfg, seed, args.override_budget);
    for r in records.iter().filter(|r| r.kind == "error") {
        eprintln!("error: {}", r.get("message").unwrap_or(""));
    }
    if let Err(e) = emit(&write_records(&records), out.as_deref()) {
        eprintln!("cannot write records: {e}");
        return ExitCode::from(pesin::harness::EXIT_NUMERICAL as u8);
    }
    ExitCode::from(exit as u8)
}
