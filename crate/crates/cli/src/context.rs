use std::path::Path;

use modernzh_core::config::GlobalConfig;
use modernzh_core::Result;

pub struct Context {
    pub config: GlobalConfig,
}

impl Context {
    pub fn new(config: Option<&Path>, seed: Option<u64>) -> Result<Self> {
        let mut config = match config {
            Some(p) => GlobalConfig::load(p)?,
            None => GlobalConfig::default(),
        };
        if let Some(s) = seed {
            config.seed = s;
        }
        Ok(Self { config })
    }

    /// Records the resolved config next to a command's outputs.
    pub fn log_config(&self, config: &GlobalConfig, dir: &Path) -> Result<()> {
        let path = config.write_resolved(dir)?;
        log::info!("resolved config written to {}", path.display());
        Ok(())
    }
}
