//! `gvalue` command-line tool.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::{Command, Failure};

#[derive(Debug, Parser)]
#[command(
    name = "gvalue",
    version,
    about = "Global p-values across several analysis strategies"
)]
struct Cli {
    /// Append-only run log (one JSON object per line).
    #[arg(
        long,
        global = true,
        env = "GVALUE_MANIFEST",
        default_value = "gvalue-manifest.jsonl"
    )]
    manifest: PathBuf,

    #[command(subcommand)]
    command: Command,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = chrono::Utc::now();
    let result = commands::run(&cli.command, &cli.manifest);
    let finished = chrono::Utc::now();

    let (code, stdout) = match &result {
        Ok(out) => (0, out.stdout.clone()),
        Err(f) => (f.code, String::new()),
    };
    print!("{stdout}");
    if let Err(Failure { message, .. }) = &result {
        eprintln!("error: {message}");
    }
    if let Ok(out) = &result {
        for note in &out.notes {
            eprintln!("{note}");
        }
    }

    let outputs = result
        .as_ref()
        .map(|o| o.outputs.clone())
        .unwrap_or_default();
    let entry = manifest::Entry::new(&cli.command, started, finished, outputs, stdout, code);
    if let Err(e) = manifest::append(&cli.manifest, &entry) {
        eprintln!(
            "error: cannot write manifest {}: {e:#}",
            cli.manifest.display()
        );
        return ExitCode::from(if code == 0 { 3 } else { code as u8 });
    }
    ExitCode::from(code as u8)
}
