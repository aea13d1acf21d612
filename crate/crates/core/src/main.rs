use clap::Parser;
use heun_spectrum::cli::{main_with, Cli};

fn main() {
    std::process::exit(main_with(Cli::parse()));
}
