use std::process::ExitCode;

fn main() -> ExitCode {
    smc::cli::main()
}
