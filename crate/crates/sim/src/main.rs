use std::process::ExitCode;

fn main() -> ExitCode {
    marelay_sim::cli::main_with_args(std::env::args_os())
}
