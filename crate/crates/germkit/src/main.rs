use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(germkit::cli::run(std::env::args()) as u8)
}
