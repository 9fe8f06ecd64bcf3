use clap::Parser;
use pitwise::cli;

fn main() {
    let parsed = cli::Cli::parse();
    std::process::exit(cli::run(parsed));
}
