use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.7;
pub const DEFAULT_CONNECTION_THRESHOLD: f64 = 0.6;
pub const DEFAULT_FRAME_PERIOD_MS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("overlap_threshold must be in (0, 1], got {0}")]
    OverlapThreshold(f64),
    #[error("connection_threshold must be in (0, 1), got {0}")]
    ConnectionThreshold(f64),
    #[error("frame_period_ms must be positive")]
    FramePeriod,
}

/// Tunables of the control engine. Missing keys fall back to the defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Minimum share of a detail's box that must lie in a zone for the
    /// detail to count as placed there.
    pub overlap_threshold: f64,
    /// A connection hypothesis is considered only when its probability is
    /// strictly greater than this.
    pub connection_threshold: f64,
    pub frame_period_ms: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            overlap_threshold: DEFAULT_OVERLAP_THRESHOLD,
            connection_threshold: DEFAULT_CONNECTION_THRESHOLD,
            frame_period_ms: DEFAULT_FRAME_PERIOD_MS,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.overlap_threshold > 0.0 && self.overlap_threshold <= 1.0) {
            return Err(ConfigError::OverlapThreshold(self.overlap_threshold));
        }
        if !(self.connection_threshold > 0.0 && self.connection_threshold < 1.0) {
            return Err(ConfigError::ConnectionThreshold(self.connection_threshold));
        }
        if self.frame_period_ms == 0 {
            return Err(ConfigError::FramePeriod);
        }
        Ok(())
    }
}
