use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

mod commands;
mod config;
mod error;
mod report;

use config::PipelineConfig;
use report::ProofReport;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    FixedPoint,
    Domain,
    Verify,
    Horseshoe,
    Dimension,
    Tangle,
}

#[derive(Debug, Parser)]
#[command(name = "tangleproof", version, about = "Validated proofs for the universal area-preserving map")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let name = args.command.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let mut rep = ProofReport::new(&name);
    let run = PipelineConfig::load(&args.config).and_then(|(cfg, text)| {
        rep.input("config", &text);
        let f = match args.command {
            Command::FixedPoint => commands::fixed_point,
            Command::Domain => commands::domain,
            Command::Verify => commands::verify,
            Command::Horseshoe => commands::horseshoe,
            Command::Dimension => commands::dimension,
            Command::Tangle => commands::tangle,
        };
        f(&cfg, &args.out, &mut rep)
    });
    if let Err(e) = run {
        rep.step("run", false, e.to_string());
    }
    rep.finish();
    if let Err(e) = rep.write(&args.out) {
        eprintln!("tangleproof: cannot write report: {e}");
        return ExitCode::from(2);
    }
    print!("{}", rep.to_text());
    if rep.verified() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
