//! Command implementations behind the `torusflow` binary, exposed as a
//! library so integration tests drive them in-process.

pub mod config;
pub mod corpus;
pub mod fail;
pub mod mesh_out;
pub mod report;

mod cmd_check;
mod cmd_flow;
mod cmd_invariants;
mod cmd_kdv;
mod cmd_reconstruct;
mod cmd_special;

use config::RunConfig;
use fail::CommandResult;

pub const COMMANDS: [&str; 6] = [
    "invariants",
    "check",
    "flow",
    "reconstruct",
    "kdv",
    "special",
];

/// Load the config for `command` and run it. Errors carry the exit code:
/// 2 for configuration problems, 3 for numeric failures.
pub fn dispatch(command: &str, config_path: &str) -> CommandResult<()> {
    let cfg = RunConfig::load(config_path, command)?;
    run_command(command, cfg)
}

pub fn run_command(command: &str, cfg: RunConfig) -> CommandResult<()> {
    match command {
        "invariants" => cmd_invariants::run(cfg),
        "check" => cmd_check::run(cfg),
        "flow" => cmd_flow::run(cfg),
        "reconstruct" => cmd_reconstruct::run(cfg),
        "kdv" => cmd_kdv::run(cfg),
        "special" => cmd_special::run(cfg),
        other => Err(fail::CommandError::Config(format!(
            "unknown subcommand {other:?}"
        ))),
    }
}
