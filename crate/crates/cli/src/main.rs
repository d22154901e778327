use std::process::ExitCode;

use clap::Parser;
use fme_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.into_spec().and_then(|spec| fme_cli::execute(&spec));
    match result {
        Ok(failed) => {
            if failed > 0 {
                eprintln!("fme: {failed} rows could not be computed; see the status column");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fme: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
