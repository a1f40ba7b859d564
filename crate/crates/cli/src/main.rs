use clap::Parser;

use postrev_cli::cli::{self, Cli};

fn main() {
    let parsed = Cli::parse();
    if let Err(e) = cli::run(parsed) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
