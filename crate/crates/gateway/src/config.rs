use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::GatewayError;

/// Server configuration, read from TOML:
///
/// ```toml
/// [listen]
/// addr = "127.0.0.1:8080"
/// [storage]
/// path = "relaylab.db"
/// [admin]
/// token = "change-me"
/// [heartbeat]
/// seconds = 30
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerConfig {
    #[serde(default)]
    pub listen: ListenConfig,
    #[serde(default)]
    pub storage: StorageConfig,
    pub admin: AdminConfig,
    #[serde(default)]
    pub heartbeat: HeartbeatConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListenConfig {
    pub addr: String,
}

impl Default for ListenConfig {
    fn default() -> Self {
        Self {
            addr: "127.0.0.1:8080".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StorageConfig {
    pub path: PathBuf,
}

impl Default for StorageConfig {
    fn default() -> Self {
        Self {
            path: PathBuf::from("relaylab.db"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdminConfig {
    pub token: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeartbeatConfig {
    pub seconds: u64,
}

impl Default for HeartbeatConfig {
    fn default() -> Self {
        Self { seconds: 30 }
    }
}

impl ServerConfig {
    pub fn new(addr: impl Into<String>, storage: impl Into<PathBuf>, admin_token: impl Into<String>) -> Self {
        Self {
            listen: ListenConfig { addr: addr.into() },
            storage: StorageConfig {
                path: storage.into(),
            },
            admin: AdminConfig {
                token: admin_token.into(),
            },
            heartbeat: HeartbeatConfig::default(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let config: Self =
            toml::from_str(&text).map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.admin.token.trim().is_empty() {
            return Err(GatewayError::Config("admin.token must not be empty".into()));
        }
        if self.heartbeat.seconds == 0 {
            return Err(GatewayError::Config("heartbeat.seconds must be positive".into()));
        }
        Ok(())
    }

    pub fn heartbeat_interval(&self) -> Duration {
        Duration::from_secs(self.heartbeat.seconds)
    }
}
