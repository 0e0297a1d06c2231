use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(lpqfa_cli::run_main(std::env::args_os()))
}
