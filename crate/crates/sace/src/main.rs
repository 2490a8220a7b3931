use clap::Parser;
use sace::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
