use std::process::ExitCode;

fn main() -> ExitCode {
    level_assembly::cli::main_with_args(std::env::args_os())
}
