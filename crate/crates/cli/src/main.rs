use std::process::ExitCode;

use pspl_cli::{configure_threads, parse_args, run, EXIT_RUNTIME, EXIT_USAGE};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cmd = match parse_args(&argv) {
        Ok(cmd) => cmd,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Err(msg) = configure_threads(std::env::var("PSPL_THREADS").ok().as_deref()) {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE as u8);
    }
    let stdout = std::io::stdout();
    match run(&cmd, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME as u8)
        }
    }
}
