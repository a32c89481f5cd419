use std::process::ExitCode;

fn main() -> ExitCode {
    roundnet::cli::main_with_args(std::env::args_os())
}
