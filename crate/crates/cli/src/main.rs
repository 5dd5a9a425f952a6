use clap::Parser;

fn main() {
    let cli = fracshape_cli::Cli::parse();
    std::process::exit(fracshape_cli::run(&cli));
}
