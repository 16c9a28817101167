use clap::Parser;
use merton_default_cli::{args::Cli, exit_code, run};

fn main() {
    let cli = Cli::parse();
    if let Err(error) = run(&cli) {
        eprintln!("error: {error}");
        std::process::exit(exit_code(&error));
    }
}
