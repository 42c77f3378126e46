use std::process::ExitCode;

use clap::Parser;
use crosswidth_cli::cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, generated) = match cli.resolve() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("crosswidth: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if generated {
        eprintln!("crosswidth: no seed given, using {}", cfg.seed);
    }
    match crosswidth_cli::run(&cfg) {
        Ok(s) => {
            println!("{}: {} rows -> {} (manifest {})", cfg.command, s.rows, s.csv.display(), s.manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("crosswidth: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
