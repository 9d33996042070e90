//! `eegdenoise`: simulate corrupted EEG, train the corruption classifier,
//! denoise recordings, rank wavelets, and compute spectra.
//!
//! Exit codes are a stable scripting contract: 0 success, 1 usage error
//! (bad flags or parameter values), 2 runtime error (I/O, malformed files,
//! failed training).

use clap::error::ErrorKind;
use clap::Parser;
use eegdenoise::Error;

mod commands;

use commands::{Cli, Command};

fn exit_code(e: &Error) -> i32 {
    match e {
        // Bad values for things the user chose on the command line.
        Error::InvalidParameter(_) | Error::DecompositionDepth(_) => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Denoise(args) => commands::denoise::run(args),
        Command::SelectWavelet(args) => commands::select_wavelet::run(args),
        Command::Psd(args) => commands::psd::run(args),
    }
}

fn main() {
    let code = match Cli::try_parse() {
        Ok(cli) => match run(cli) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
        Err(e) => {
            let kind = e.kind();
            let _ = e.print();
            if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                0
            } else {
                1
            }
        }
    };
    std::process::exit(code);
}
