use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(pv5_lab::main_with_args(std::env::args_os()))
}
