//! Batch front end shared by the `rp-entropy` binary and the tests.

pub mod commands;
pub mod config;
pub mod output;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use config::{ApplyOverrides, CftConfig, FermionConfig, FunctionSpec, KlConfig, Overrides};
pub use output::{write_outputs, RunOutput, Table, WrittenFiles};

use crate::positivity::{SearchConfig, SweepConfig};
use crate::{Error, Result};

pub const TOOL_NAME: &str = "rp-entropy";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Default output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "RP_ENTROPY_OUT";

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Pass,
    /// Usage or configuration error.
    Config,
    /// A check failed or the numerics broke down.
    Numerics,
    /// The integer-`n` control search found a violation.
    ControlCounterexample,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Pass => 0,
            ExitStatus::Config => 1,
            ExitStatus::Numerics => 2,
            ExitStatus::ControlCounterexample => 3,
        }
    }

    pub fn for_error(e: &Error) -> Self {
        match e {
            Error::Config(_) => ExitStatus::Config,
            _ => ExitStatus::Numerics,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    GramSweep,
    Search,
    Fermion,
    Kl,
    Cft,
}

impl Command {
    pub const ALL: [Command; 5] = [Command::GramSweep, Command::Search, Command::Fermion, Command::Kl, Command::Cft];

    /// Subcommand name as typed on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Command::GramSweep => "gram-sweep",
            Command::Search => "search",
            Command::Fermion => "fermion",
            Command::Kl => "kl",
            Command::Cft => "cft",
        }
    }
}

impl std::str::FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| Error::Config(format!("unknown command `{s}`")))
    }
}

/// Where the JSON config of a run comes from.
#[derive(Debug, Clone, Copy)]
pub enum ConfigSource<'a> {
    Defaults,
    File(&'a Path),
    /// In-memory JSON; `origin` prefixes error positions.
    Text {
        text: &'a str,
        origin: &'a str,
    },
}

fn prepare<T: ApplyOverrides + Default + serde::de::DeserializeOwned>(src: ConfigSource, o: &Overrides) -> Result<T> {
    let mut cfg: T = match src {
        ConfigSource::Defaults => T::default(),
        ConfigSource::File(p) => config::load_config(Some(p))?,
        ConfigSource::Text { text, origin } => config::parse_config(text, origin)?,
    };
    cfg.apply(o)?;
    Ok(cfg)
}

/// Load the config, apply overrides and run, on a pool of `jobs` threads
/// when given.
pub fn execute(
    command: Command,
    config_path: Option<&Path>,
    overrides: &Overrides,
    jobs: Option<usize>,
) -> Result<RunOutput> {
    let src = config_path.map_or(ConfigSource::Defaults, ConfigSource::File);
    execute_from(command, src, overrides, jobs)
}

pub fn execute_from(
    command: Command,
    src: ConfigSource,
    overrides: &Overrides,
    jobs: Option<usize>,
) -> Result<RunOutput> {
    let run = || -> Result<RunOutput> {
        match command {
            Command::GramSweep => commands::gram_sweep(&prepare::<SweepConfig>(src, overrides)?),
            Command::Search => commands::search(&prepare::<SearchConfig>(src, overrides)?),
            Command::Fermion => commands::fermion(&prepare::<FermionConfig>(src, overrides)?),
            Command::Kl => commands::kl(&prepare::<KlConfig>(src, overrides)?),
            Command::Cft => commands::cft(&prepare::<CftConfig>(src, overrides)?),
        }
    };
    match jobs {
        None => run(),
        Some(0) => Err(Error::Config("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run),
    }
}
