use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use arith_mm::Error;
use arith_mm_cli::{error_line, run, Cli, CAPS_ENV};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.kind().as_str().unwrap_or("invalid arguments").to_string();
            eprint!("{e}");
            eprint!("{}", error_line(&Error::InvalidInput(msg)));
            return ExitCode::from(1);
        }
    };
    let env_caps = std::env::var(CAPS_ENV).ok();
    let config = match cli.into_config(env_caps.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprint!("{}", error_line(&e));
            return ExitCode::from(1);
        }
    };
    let out = run(&config);
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    ExitCode::from(out.status)
}
