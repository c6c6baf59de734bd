use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NETRESP_LOG", "info")).init();
    let code = netresp::cli::main_with_args(std::env::args_os());
    ExitCode::from(code)
}
