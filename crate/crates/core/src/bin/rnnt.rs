use clap::Parser;
use rnnt_stream::cli::{exit_code, run, Cli};

fn main() {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    if let Err(err) = run(cli, &mut stdout.lock()) {
        eprintln!("rnnt: {err}");
        std::process::exit(exit_code(&err));
    }
}
