use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use gapscope::cli::{run, Cli};
use gapscope::io::to_json;
use gapscope::report::{ErrorReport, ERROR};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            let report = ErrorReport {
                schema: ERROR,
                error: e.kind(),
                message: e.to_string(),
                exit_code: code,
            };
            eprint!("{}", to_json(&report));
            ExitCode::from(code as u8)
        }
    }
}
