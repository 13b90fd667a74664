use clap::Parser;
use finsler_cli::{run, to_json, Cli, CliError};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        if let CliError::Classify(f) = &e {
            eprint!("partial residuals: {}", to_json(&f.partial));
        }
        std::process::exit(e.exit_code());
    }
}
