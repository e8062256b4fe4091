//! Command implementations behind the `ufp` binary.

pub mod bench;
pub mod bundle;
pub mod commands;
pub mod config;
pub mod cwp;
pub mod error;
pub mod oracle_cmd;

pub use bench::{cmd_bench, render_csv, render_table, BenchArgs, BenchRow};
pub use commands::{
    cmd_check, cmd_synth, cmd_translate, synth_system, CheckArgs, CheckResult, Outcome, Property, SynthResult,
    TranslateArgs,
};
pub use config::RunConfig;
pub use cwp::{assemble, cmd_cwp, CwpArgs, CwpReport};
pub use error::{CliError, Result};
pub use oracle_cmd::{cmd_iterate, cmd_simulate, IterateArgs, SimulateArgs};
