use clap::Parser;

fn main() {
    let cli = cantor_lp::cli::Cli::parse();
    std::process::exit(cantor_lp::cli::run(cli));
}
