use clap::Parser;
use fluorsim::cli::{self, RunConfig};

fn main() {
    let config = RunConfig::parse();
    match cli::run(&config) {
        Ok(()) => {}
        Err(err) => {
            if let Some(msg) = err.message() {
                eprintln!("error: {msg}");
            }
            std::process::exit(err.exit_code());
        }
    }
}
