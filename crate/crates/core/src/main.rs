use std::process::ExitCode;

fn main() -> ExitCode {
    movrank::cli::main()
}
