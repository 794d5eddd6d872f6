use clap::Parser;

fn main() {
    let cli = vrprox_cli::Cli::parse();
    std::process::exit(vrprox_cli::main_with(cli));
}
