use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(clfstab::cli::run(std::env::args_os()) as u8)
}
