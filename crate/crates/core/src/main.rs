use std::process::ExitCode;

fn main() -> ExitCode {
    qshop::cli::run()
}
