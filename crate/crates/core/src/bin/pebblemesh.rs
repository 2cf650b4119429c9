use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::init();
    ExitCode::from(pebblemesh::cli::run(std::env::args_os()))
}
