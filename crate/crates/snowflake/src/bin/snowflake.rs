use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(conformal_snowflake::cli::run(std::env::args_os()))
}
