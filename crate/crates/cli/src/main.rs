//! Command-line frontend. Exit codes: 0 success, 2 usage or config error,
//! 3 data or model I/O error, 4 divergence.

mod args;
mod commands;

use clap::Parser;

use args::{Cli, Command};

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Continue(a) => commands::continue_(a),
        Command::Predict(a) => commands::predict_cmd(a),
        Command::Explain(a) => commands::explain(a),
        Command::Balance(a) => commands::balance(a),
    };
    if let Err(failure) = result {
        eprintln!("error: {}", failure.message());
        std::process::exit(failure.exit_code());
    }
}
