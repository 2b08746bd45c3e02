use std::process::ExitCode;

fn main() -> ExitCode {
    zkadvice_server::cli::main()
}
