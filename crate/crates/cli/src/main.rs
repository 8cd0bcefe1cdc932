use clap::Parser;
use revquant_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(failure) = run(&cli) {
        eprintln!("error: {}", failure.message);
        std::process::exit(failure.code);
    }
}
