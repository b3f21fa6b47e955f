use clap::Parser;

fn main() {
    let cli = fde::cli::Cli::parse();
    std::process::exit(fde::cli::run(cli));
}
