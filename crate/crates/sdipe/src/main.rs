use clap::Parser;

fn main() {
    let cli = sdipe::cli::Cli::parse();
    if let Err(err) = sdipe::cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
