use std::process::ExitCode;

use clap::Parser;
use subtrack::cli::Cli;

fn main() -> ExitCode {
    let (mode, overrides) = Cli::parse().command.split();
    let print = overrides.print_config;
    let result = overrides.resolve(mode).and_then(|cfg| {
        if print {
            println!("{}", cfg.to_json());
            return Ok(());
        }
        for path in subtrack::run::run(&cfg)? {
            println!("{}", path.display());
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
