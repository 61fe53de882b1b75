use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use decomap_cli::{run, usage_error, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            let _ = writeln!(std::io::stdout(), "{}", usage_error(&e.to_string()));
            return ExitCode::from(2);
        }
    };
    let (report, code) = run(&cli);
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    // A closed pipe is the reader's choice, not a failure of the command.
    let _ = writeln!(std::io::stdout(), "{text}");
    ExitCode::from(code as u8)
}
