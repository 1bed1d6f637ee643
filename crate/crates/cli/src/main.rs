//! `obfw`: firewall daemons, admin tools, comparison demos and the cost
//! reporter.

mod bench;
mod config;
mod fw;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use obfw::firewall::FirewallError;
use obfw::net::{NetError, ProtocolError};
use thiserror::Error;

use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Protocol(String),
    #[error("{0}")]
    Transport(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Protocol(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Transport(_) => 3,
        }
    }
}

impl From<FirewallError> for CliError {
    fn from(e: FirewallError) -> Self {
        match e {
            FirewallError::ServerTimeout(_)
            | FirewallError::Io(_)
            | FirewallError::Protocol(ProtocolError::Net(_) | ProtocolError::PartyTimeout { .. }) => CliError::Transport(e.to_string()),
            FirewallError::BadParams(_) | FirewallError::BadFormat(_) | FirewallError::Unsupported(_) => CliError::Usage(e.to_string()),
            _ => CliError::Protocol(e.to_string()),
        }
    }
}

impl From<NetError> for CliError {
    fn from(e: NetError) -> Self {
        CliError::Transport(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Role {
    Party,
    Gateway,
    Admin,
}

#[derive(Parser)]
#[command(name = "obfw", version, about)]
struct Cli {
    /// Run configuration (JSON); falls back to $OBFW_CONFIG.
    #[arg(long, global = true, env = "OBFW_CONFIG")]
    config: Option<PathBuf>,
    /// Refuse to run a command that belongs to another role.
    #[arg(long, global = true)]
    role: Option<Role>,
    /// Fixed randomness (hex u64). Firewall commands also need test mode.
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Write message transcripts (JSON) here.
    #[arg(long, global = true)]
    transcript: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the filter from a blacklist and write one share file per server.
    FwInit {
        /// One dotted-quad per line; blank lines and `#` comments are skipped.
        blacklist: PathBuf,
    },
    /// Run server `index`: answer gateway sessions and admin updates.
    Serve {
        #[arg(long)]
        index: usize,
        /// Add this to every result share (test mode only).
        #[arg(long)]
        cheat_offset: Option<u128>,
    },
    /// Run the gateway; with `--check`, evaluate the given addresses and exit.
    Gateway {
        #[arg(long)]
        check: Vec<std::net::Ipv4Addr>,
    },
    /// Add an address to the shared filter on every server.
    AdminUpdate { addr: std::net::Ipv4Addr },
    /// Compare `a` and `b` with one of the comparison protocols.
    Compare {
        variant: bench::Variant,
        a: u128,
        b: u128,
        #[arg(long = "l", default_value_t = 8)]
        ell: u32,
        /// Parties for alg6.
        #[arg(long, default_value_t = 3)]
        m: usize,
        /// Corruption threshold for alg7.
        #[arg(long, default_value_t = 1)]
        t: usize,
    },
    /// Measured cost beside the closed-form cost, per ℓ.
    Bench {
        variant: bench::Variant,
        /// Comma-separated bit widths.
        #[arg(value_delimiter = ',')]
        ells: Vec<u32>,
        /// Party counts for alg6.
        #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
        m: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        t: usize,
        #[arg(long, value_enum, default_value_t = bench::Format::Markdown)]
        format: bench::Format,
        /// Exit 1 when a row differs from its closed form.
        #[arg(long)]
        strict: bool,
    },
}

/// Options every command sees after merging flags with the config file.
pub struct Env {
    pub config: Option<RunConfig>,
    pub seed: Option<u64>,
    pub transcript: Option<PathBuf>,
}

impl Env {
    pub fn config(&self) -> Result<&RunConfig, CliError> {
        self.config.as_ref().ok_or_else(|| CliError::Usage("this command needs --config or OBFW_CONFIG".into()))
    }

    pub fn test_mode(&self) -> bool {
        self.config.as_ref().is_some_and(|c| c.test_mode)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = cli.config.as_deref().map(RunConfig::load).transpose()?;
    let flag_seed = cli.seed.as_deref().map(config::parse_seed).transpose()?;
    let role = match &cli.command {
        Command::FwInit { .. } | Command::AdminUpdate { .. } => Some(Role::Admin),
        Command::Serve { .. } => Some(Role::Party),
        Command::Gateway { .. } => Some(Role::Gateway),
        _ => None,
    };
    if let (Some(want), Some(have)) = (cli.role, role) {
        if want != have {
            return Err(CliError::Usage(format!("--role {want:?} cannot run a {have:?} command")));
        }
    }
    if role.is_some() && flag_seed.is_some() && !config.as_ref().is_some_and(|c| c.test_mode) {
        return Err(CliError::Usage("--seed needs \"test_mode\": true in the configuration".into()));
    }
    let env = Env {
        seed: flag_seed.or_else(|| config.as_ref().and_then(RunConfig::seed)),
        transcript: cli.transcript.or_else(|| config.as_ref().and_then(|c| c.transcript.clone())),
        config,
    };
    match cli.command {
        Command::FwInit { blacklist } => fw::init(&env, &blacklist),
        Command::Serve { index, cheat_offset } => fw::serve(&env, index, cheat_offset),
        Command::Gateway { check } => fw::gateway(&env, &check),
        Command::AdminUpdate { addr } => fw::admin_update(&env, addr),
        Command::Compare { variant, a, b, ell, m, t } => bench::compare(&env, variant, a, b, ell, m, t),
        Command::Bench { variant, ells, m, t, format, strict } => bench::bench(variant, &ells, &m, t, format, strict),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("obfw: {e}");
            ExitCode::from(e.code())
        }
    }
}
