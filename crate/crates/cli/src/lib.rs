//! Command-line harness around `margin_lab`: config parsing, command
//! execution and the step-complexity benchmark.

pub mod bench;
pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

pub use commands::{config_hash, execute, Outcome};
pub use config::{parse_config, Command, ConfigError, ExperimentConfig};

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Reads a config for `command`. A file without a `command` key inherits
/// the subcommand; one naming a different command is rejected.
pub fn load_config(command: Command, path: Option<&Path>) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let Some(path) = path else {
        return parse_config(&format!("command = {command}\n"));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![ConfigError { line: 0, msg: format!("cannot read {}: {e}", path.display()) }])?;
    let has_command = text.lines().any(|l| l.split('#').next().unwrap_or("").trim_start().starts_with("command"));
    let text = if has_command { text } else { format!("{text}\ncommand = {command}\n") };
    let cfg = parse_config(&text)?;
    if cfg.command != command {
        return Err(vec![ConfigError {
            line: 0,
            msg: format!("config is for '{}' but '{command}' was requested", cfg.command),
        }]);
    }
    Ok(cfg)
}

/// `--out` wins over the config's `out`, which wins over the working directory.
pub fn output_dir(cfg: &ExperimentConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."))
}
