//! The `pspl` command-line tool: argument parsing and subcommand dispatch.

pub mod args;
pub mod run;

pub use args::{parse_args, CliCommand, Command};
pub use run::run;

/// Exit status for a usage error (bad flags, unreadable config file).
pub const EXIT_USAGE: i32 = 2;
/// Exit status for a failure while running a valid command.
pub const EXIT_RUNTIME: i32 = 1;

/// Apply `PSPL_THREADS` (unset or 0 means one worker per core).
pub fn configure_threads(value: Option<&str>) -> Result<(), String> {
    let n = match value.map(str::trim) {
        None | Some("") => 0,
        Some(v) => v
            .parse::<usize>()
            .map_err(|_| format!("PSPL_THREADS must be a non-negative integer, got {v:?}"))?,
    };
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}
