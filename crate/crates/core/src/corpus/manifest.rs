use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::records::read_records;
use crate::error::{Error, IoContext, Result};

/// Reference pre-training mixture: (source, ratio).
pub const REFERENCE_MIXTURE: [(&str, f64); 5] = [
    ("baike", 0.03),
    ("cci3_hq", 0.57),
    ("cci4_finweb_3_4", 0.10),
    ("cci4_finweb_4_5", 0.10),
    ("cosmopedia_zh", 0.20),
];

const RATIO_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceEntry {
    pub name: String,
    /// Record file; relative paths resolve against the manifest's directory.
    pub path: PathBuf,
    pub ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    #[serde(rename = "source", default)]
    pub sources: Vec<SourceEntry>,
}

impl CorpusManifest {
    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::config("manifest lists no `source` entries"));
        }
        let mut seen = HashSet::new();
        for s in &self.sources {
            if s.name.is_empty() {
                return Err(Error::config("source `name` must not be empty"));
            }
            if !seen.insert(s.name.as_str()) {
                return Err(Error::config(format!("duplicate source `name` {:?}", s.name)));
            }
            if !s.ratio.is_finite() || s.ratio < 0.0 {
                return Err(Error::config(format!("source {:?}: `ratio` {} must be non-negative", s.name, s.ratio)));
            }
        }
        let sum: f64 = self.sources.iter().map(|s| s.ratio).sum();
        if (sum - 1.0).abs() > RATIO_TOLERANCE {
            return Err(Error::config(format!("source `ratio` values sum to {sum}, expected 1")));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let m: Self = toml::from_str(text).map_err(|e| Error::config(format!("manifest: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::runtime(e.to_string()))
    }

    /// Reads and validates a manifest, resolving relative source paths
    /// against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).at(path)?;
        let mut m = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for s in &mut m.sources {
            if s.path.is_relative() {
                s.path = base.join(&s.path);
            }
        }
        Ok(m)
    }

    /// Documents of every source, in manifest order. An empty source is a
    /// configuration error.
    pub fn load_documents(&self) -> Result<Vec<Vec<String>>> {
        self.sources
            .iter()
            .map(|s| {
                let docs = read_records(&s.path)?;
                if docs.is_empty() {
                    return Err(Error::config(format!("source {:?} has no documents", s.name)));
                }
                Ok(docs)
            })
            .collect()
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.sources.iter().map(|s| s.ratio).collect()
    }
}
