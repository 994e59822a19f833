use clap::Parser;

use deoq_dyn::io::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("deoq-dyn: {e}");
        std::process::exit(e.exit_code());
    }
}
