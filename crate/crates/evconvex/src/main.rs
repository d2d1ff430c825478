use std::io::Write;

use clap::Parser;
use evconvex::cli::{run, Cli};

fn main() {
    let outcome = run(&Cli::parse());
    let _ = if outcome.output.starts_with("error:") {
        std::io::stderr().write_all(outcome.output.as_bytes())
    } else {
        std::io::stdout().write_all(outcome.output.as_bytes())
    };
    std::process::exit(outcome.code);
}
