//! Key/value configuration files.
//!
//! Plain text, one `key = value` per line, `#` comments, comma-separated
//! lists. Keys mirror the filter, monitor, geometry and attack parameter
//! structures:
//!
//! ```text
//! # filter
//! filter.l = 1024
//! filter.b = 8
//! filter.f = 12
//! filter.mnk = 4
//! filter.sec_thr = 3
//! filter.seed = 42
//! # monitor
//! monitor.prefetch_delay = 200
//! # cache geometry (sizes in bytes)
//! geom.l1_size = 65536
//! geom.l1_ways = 4
//! geom.l1_latency = 2
//! geom.l2_size = 262144
//! geom.l2_ways = 8
//! geom.l2_latency = 18
//! geom.llc_size = 4194304
//! geom.llc_ways = 16
//! geom.llc_latency = 35
//! geom.dram_latency = 200
//! geom.cores = 4
//! # attack
//! attack.key_len = 100
//! attack.key_bits = 1,0,1,1
//! attack.probe_period = 5000
//! ```
//!
//! Values given on the command line override values from the file.

use crate::cachesim::CacheGeometry;
use crate::filter::FilterConfig;
use crate::monitor::MonitorConfig;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value', got {found:?}")]
    Malformed { line: usize, found: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for {key}: {value:?}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("duplicate key {0:?}")]
    DuplicateKey(String),
}

const KNOWN_KEYS: &[&str] = &[
    "filter.l",
    "filter.b",
    "filter.f",
    "filter.mnk",
    "filter.sec_thr",
    "filter.seed",
    "monitor.prefetch_delay",
    "geom.l1_size",
    "geom.l1_ways",
    "geom.l1_latency",
    "geom.l2_size",
    "geom.l2_ways",
    "geom.l2_latency",
    "geom.llc_size",
    "geom.llc_ways",
    "geom.llc_latency",
    "geom.dram_latency",
    "geom.cores",
    "attack.key_len",
    "attack.key_bits",
    "attack.probe_period",
];

/// Parsed configuration: raw values by key, applied onto defaults on demand.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    values: BTreeMap<String, (usize, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.split('#').next().unwrap_or("").trim();
            if trimmed.is_empty() {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(ConfigError::Malformed {
                    line,
                    found: trimmed.to_string(),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey { line, key });
            }
            if values.insert(key.clone(), (line, value)).is_some() {
                return Err(ConfigError::DuplicateKey(key));
            }
        }
        Ok(Self { values })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, raw)) => raw.parse().map(Some).map_err(|_| ConfigError::BadValue {
                line: *line,
                key: key.to_string(),
                value: raw.clone(),
            }),
        }
    }

    pub fn filter_config(&self, base: FilterConfig) -> Result<FilterConfig, ConfigError> {
        let mut cfg = base;
        if let Some(v) = self.get("filter.l")? {
            cfg.l = v;
        }
        if let Some(v) = self.get("filter.b")? {
            cfg.b = v;
        }
        if let Some(v) = self.get("filter.f")? {
            cfg.f = v;
        }
        if let Some(v) = self.get("filter.mnk")? {
            cfg.mnk = v;
        }
        if let Some(v) = self.get("filter.sec_thr")? {
            cfg.sec_thr = v;
        }
        if let Some(v) = self.get("filter.seed")? {
            cfg.rng_seed = v;
        }
        Ok(cfg)
    }

    pub fn monitor_config(&self, base: MonitorConfig) -> Result<MonitorConfig, ConfigError> {
        let mut cfg = base;
        cfg.filter_config = self.filter_config(cfg.filter_config)?;
        if let Some(v) = self.get("monitor.prefetch_delay")? {
            cfg.prefetch_delay = v;
        }
        Ok(cfg)
    }

    pub fn geometry(&self, base: CacheGeometry) -> Result<CacheGeometry, ConfigError> {
        let mut g = base;
        if let Some(v) = self.get("geom.l1_size")? {
            g.l1.size = v;
        }
        if let Some(v) = self.get("geom.l1_ways")? {
            g.l1.ways = v;
        }
        if let Some(v) = self.get("geom.l1_latency")? {
            g.l1.latency = v;
        }
        if let Some(v) = self.get("geom.l2_size")? {
            g.l2.size = v;
        }
        if let Some(v) = self.get("geom.l2_ways")? {
            g.l2.ways = v;
        }
        if let Some(v) = self.get("geom.l2_latency")? {
            g.l2.latency = v;
        }
        if let Some(v) = self.get("geom.llc_size")? {
            g.llc.size = v;
        }
        if let Some(v) = self.get("geom.llc_ways")? {
            g.llc.ways = v;
        }
        if let Some(v) = self.get("geom.llc_latency")? {
            g.llc.latency = v;
        }
        if let Some(v) = self.get("geom.dram_latency")? {
            g.dram_latency = v;
        }
        if let Some(v) = self.get("geom.cores")? {
            g.cores = v;
        }
        Ok(g)
    }

    pub fn key_len(&self) -> Result<Option<usize>, ConfigError> {
        self.get("attack.key_len")
    }

    pub fn probe_period(&self) -> Result<Option<u64>, ConfigError> {
        self.get("attack.probe_period")
    }

    /// Explicit key bits, e.g. `attack.key_bits = 1,0,1,1`.
    pub fn key_bits(&self) -> Result<Option<Vec<bool>>, ConfigError> {
        let Some((line, raw)) = self.values.get("attack.key_bits") else {
            return Ok(None);
        };
        let bad = || ConfigError::BadValue {
            line: *line,
            key: "attack.key_bits".to_string(),
            value: raw.clone(),
        };
        raw.split(',')
            .map(|tok| match tok.trim() {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(bad()),
            })
            .collect::<Result<Vec<bool>, _>>()
            .map(Some)
    }
}
