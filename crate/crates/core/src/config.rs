//! Run configuration shared by every command.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::benchkit::{Pooling, Precision};
use crate::corpus::DedupConfig;
use crate::encoder::EncoderConfig;
use crate::error::{Error, IoContext, Result};
use crate::optimsched::{AdamWConfig, ScheduleConfig};
use crate::tokenizer::BpeTrainerConfig;
use crate::trainloop::TwoStagePlan;
use crate::wordmask::MaskingConfig;

pub const SCHEMA_VERSION: u32 = 1;
pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub data: Option<PathBuf>,
    pub tokenizer: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpplSection {
    pub buckets: Vec<usize>,
    pub positions_per_seq: usize,
}

impl Default for PpplSection {
    fn default() -> Self {
        Self {
            buckets: vec![128, 512, 1024],
            positions_per_seq: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub warmup: usize,
    pub runs: usize,
    pub buckets: Vec<String>,
    pub memory_budget: Option<usize>,
    pub pooling: Pooling,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            warmup: 1,
            runs: 10,
            buckets: vec!["512x4".into(), "2048x2".into()],
            memory_budget: None,
            pooling: Pooling::Mean,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub precision: Precision,
    pub paths: Paths,
    pub tokenizer: BpeTrainerConfig,
    pub masking: MaskingConfig,
    pub encoder: EncoderConfig,
    pub schedule: ScheduleConfig,
    pub optimizer: AdamWConfig,
    pub train: Option<TwoStagePlan>,
    pub dedup: DedupConfig,
    pub pppl: PpplSection,
    pub bench: BenchSection,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            precision: Precision::Full,
            paths: Paths::default(),
            tokenizer: BpeTrainerConfig::default(),
            masking: MaskingConfig::default(),
            encoder: EncoderConfig::default(),
            schedule: ScheduleConfig::default(),
            optimizer: AdamWConfig::default(),
            train: None,
            dedup: DedupConfig::default(),
            pppl: PpplSection::default(),
            bench: BenchSection::default(),
        }
    }
}

impl GlobalConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).at(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::runtime(format!("serializing config: {e}")))
    }

    /// Writes the fully resolved config into `dir`.
    pub fn write_resolved(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).at(dir)?;
        let path = dir.join(RESOLVED_CONFIG_FILE);
        fs::write(&path, self.to_toml()?).at(&path)?;
        Ok(path)
    }
}
