mod args;
mod commands;
mod pairdef;
mod report;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

/// Exit code for configuration and file errors.
const EXIT_CONFIG: i32 = 64;

fn main() {
    // Behave like a normal pipeline citizen: die quietly on closed pipes
    // instead of panicking in println.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            std::process::exit(0);
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(EXIT_CONFIG);
        }
    };
    let result = match &cli.command {
        Command::Check(a) => commands::cmd_check(a),
        Command::Brackets(a) => commands::cmd_brackets(a),
        Command::Rank(a) => commands::cmd_rank(a),
        Command::Sinjukov(a) => commands::cmd_sinjukov(a),
        Command::Geodesics(a) => commands::cmd_geodesics(a),
        Command::Quantum(a) => commands::cmd_quantum(a),
        Command::Scan(a) => commands::cmd_scan(a),
        Command::Catalog => Ok(commands::cmd_catalog()),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(EXIT_CONFIG);
        }
    }
}
