use clap::Parser;

fn main() {
    let cli = mimo_charexp_cli::Cli::parse();
    if let Err(e) = mimo_charexp_cli::run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
