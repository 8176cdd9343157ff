use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(barry_cli::run(std::env::args_os()))
}
