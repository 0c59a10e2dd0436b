use clap::Parser;

use difint::cli;

fn main() {
    let args = cli::Cli::parse();
    if let Err(failure) = cli::run(args) {
        eprintln!("error: {}", failure.message);
        std::process::exit(failure.code);
    }
}
