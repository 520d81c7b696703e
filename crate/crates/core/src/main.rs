use std::process::ExitCode;

use clap::Parser;
use euler_spectra::cli::{dispatch, exit_code, threads_from_env, Cli, Command, EXIT_USAGE};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    let quiet = matches!(cli.command, Command::Run { quiet: true, .. });
    let level = if quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match threads_from_env() {
        Ok(Some(k)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global()
            {
                log::error!("cannot size the worker pool: {e}");
                return ExitCode::from(EXIT_USAGE as u8);
            }
        }
        Ok(None) => {}
        Err(e) => {
            log::error!("{e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    }

    let stdout = std::io::stdout();
    let code = dispatch(cli.command, &mut stdout.lock());
    ExitCode::from(code as u8)
}
