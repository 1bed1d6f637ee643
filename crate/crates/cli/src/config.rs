//! The JSON run configuration shared by every party of a deployment.

use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use obfw::bloom::{derive_params, BloomParams};
use obfw::firewall::{EvalMode, FirewallConfig, Scheme};
use obfw::Field;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Allows fixed seeds and fault injection.
    #[serde(default)]
    pub test_mode: bool,
    /// Hex seed; only accepted in test mode.
    pub seed: Option<String>,
    pub transcript: Option<PathBuf>,
    pub firewall: Option<FirewallSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirewallSection {
    pub scheme: Scheme,
    pub m: usize,
    /// The share field modulus `N`.
    pub modulus: u128,
    pub bloom: BloomSpec,
    #[serde(default)]
    pub mode: ModeName,
    /// Where `fw-init` writes share files and the admin keeps its filter.
    pub share_dir: PathBuf,
    /// Hex pre-shared key for admin updates.
    pub psk: String,
    /// How long a party waits for a peer message.
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    pub gateway: GatewayEndpoints,
    pub servers: Vec<ServerEndpoints>,
}

fn default_timeout_ms() -> u64 {
    5000
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum BloomSpec {
    Explicit { beta: u64, kappa: u32, eta: u64 },
    Derived { eta: u64, target_fp: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[default]
    Sum,
    Product,
    BerlekampWelch,
    Agreement,
}

impl From<ModeName> for EvalMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Sum => EvalMode::Sum,
            ModeName::Product => EvalMode::Product,
            ModeName::BerlekampWelch => EvalMode::BerlekampWelch,
            ModeName::Agreement => EvalMode::Agreement,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewayEndpoints {
    /// Party-mesh address.
    pub mesh: SocketAddr,
    /// Where `CHECK` clients connect.
    pub listen: SocketAddr,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerEndpoints {
    pub index: usize,
    pub mesh: SocketAddr,
    pub admin: SocketAddr,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.seed.is_some() && !self.test_mode {
            return Err(CliError::Usage("a seed is only accepted with \"test_mode\": true".into()));
        }
        if let Some(s) = &self.seed {
            parse_seed(s)?;
        }
        if let Some(fw) = &self.firewall {
            fw.config()?;
            fw.psk()?;
            let ids: BTreeSet<usize> = fw.servers.iter().map(|s| s.index).collect();
            if ids.len() != fw.servers.len() || ids != (1..=fw.m).collect() {
                return Err(CliError::Usage(format!("servers must be numbered 1..={} exactly once", fw.m)));
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed.as_deref().map(|s| parse_seed(s).expect("validated"))
    }

    pub fn firewall(&self) -> Result<&FirewallSection, CliError> {
        self.firewall.as_ref().ok_or_else(|| CliError::Usage("configuration has no \"firewall\" section".into()))
    }
}

pub fn parse_seed(s: &str) -> Result<u64, CliError> {
    u64::from_str_radix(s.trim_start_matches("0x"), 16).map_err(|_| CliError::Usage(format!("seed {s:?} is not a hex u64")))
}

impl FirewallSection {
    pub fn bloom(&self) -> Result<BloomParams, CliError> {
        match self.bloom {
            BloomSpec::Explicit { beta, kappa, eta } => BloomParams::new(beta, kappa, eta),
            BloomSpec::Derived { eta, target_fp } => derive_params(eta, target_fp),
        }
        .map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn config(&self) -> Result<FirewallConfig, CliError> {
        let field = Field::new(self.modulus).map_err(|e| CliError::Usage(format!("modulus: {e}")))?;
        let config = FirewallConfig::new(self.scheme, self.m, field, self.bloom()?).map_err(|e| CliError::Usage(e.to_string()))?;
        let mode = EvalMode::from(self.mode);
        if mode != EvalMode::Sum && !config.supports_product() {
            return Err(CliError::Usage(format!("mode {:?} is not available with this scheme and m", self.mode)));
        }
        if matches!(mode, EvalMode::BerlekampWelch | EvalMode::Agreement) && self.scheme == Scheme::Additive {
            return Err(CliError::Usage(format!("mode {:?} needs Shamir shares", self.mode)));
        }
        Ok(config)
    }

    pub fn psk(&self) -> Result<Vec<u8>, CliError> {
        match hex::decode(&self.psk) {
            Ok(k) if k.len() >= 16 => Ok(k),
            _ => Err(CliError::Usage("psk must be at least 16 bytes of hex".into())),
        }
    }

    pub fn share_file(&self, index: usize) -> PathBuf {
        self.share_dir.join(format!("server-{index}.shares"))
    }

    pub fn filter_file(&self) -> PathBuf {
        self.share_dir.join("admin.filter")
    }

    pub fn seq_file(&self) -> PathBuf {
        self.share_dir.join("admin.seq")
    }

    pub fn server(&self, index: usize) -> Result<&ServerEndpoints, CliError> {
        self.servers.iter().find(|s| s.index == index).ok_or_else(|| CliError::Usage(format!("no server {index} in configuration")))
    }
}
